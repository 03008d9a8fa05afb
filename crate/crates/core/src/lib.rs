//! Global solver for generalized linear multiplicative programs
//!
//! ```text
//! min  Π_j (c_jᵀx + d_j)^α_j   s.t.  Ax ≤ b
//! ```
//!
//! The solver works on the log objective and branches over simplices in the
//! space of reciprocals of the positive-exponent terms, bounding each simplex
//! with a convex relaxation. See [`bb::solve`].

// Negated float comparisons are used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bb;
pub mod error;
pub mod generate;
pub mod linprog;
pub mod model;
pub mod oracle;
pub mod simplex_geom;
pub mod subsolve;

pub use bb::{solve, solve_with_observer, IterationBound, SolveObserver, SolveResult, SolveStatus, SolverConfig};
pub use error::{GlmpError, Result};
pub use model::{partition_terms, validate, GlmpInstance, IndexPartition, Term, ValidationReport};
pub use simplex_geom::{BoundsBox, SimplexNode};
pub use subsolve::{ParamPoint, PsiBracket};
