//! Outer-space simplicial branch and bound.
//!
//! The search runs over `t`, one coordinate per positive-exponent term. Each
//! simplex keeps its vertex ψ brackets; the selected simplex is bisected along
//! its longest edge, ψ is evaluated once at the midpoint (shared by both
//! children), and each child is bounded by [`solve_lb`]. Every ψ evaluation
//! yields a feasible `x`, whose log objective updates the incumbent.
//!
//! All quantities live in the log domain: a run that ends `EpsOptimal` proves
//! `h(x*) ≤ e^ε · min h`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{debug, info};
use serde::{Serialize, Serializer};

use crate::error::{GlmpError, Result};
use crate::linprog::{solve_lp, LpStatus};
use crate::model::{objective_nu, partition_terms, validate, GlmpInstance, IndexPartition};
use crate::simplex_geom::{bisect, initial_simplex, longest_edge, BoundsBox, SimplexNode, Vertex};
use crate::subsolve::{eval_psi, solve_lb, ParamPoint, PsiBracket};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Absolute termination gap on the log objective.
    pub epsilon: f64,
    pub max_iterations: u64,
    pub time_limit: Option<Duration>,
    /// Tolerance handed to the ψ and LB(S) subsolvers.
    pub sub_tol: f64,
    pub delta_pos: f64,
    pub node_limit: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::with_epsilon(1e-4)
    }
}

impl SolverConfig {
    /// Defaults with the given ε and `sub_tol = ε / 10`.
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            max_iterations: 1_000_000,
            time_limit: Some(Duration::from_secs(3600)),
            sub_tol: epsilon / 10.0,
            delta_pos: crate::model::DEFAULT_DELTA_POS,
            node_limit: 10_000_000,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(GlmpError::InvalidArgument(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if !(self.sub_tol > 0.0 && self.sub_tol <= self.epsilon / 2.0) {
            return Err(GlmpError::InvalidArgument(format!(
                "sub_tol must lie in (0, epsilon/2], got {}",
                self.sub_tol
            )));
        }
        if !(self.delta_pos > 0.0) {
            return Err(GlmpError::InvalidArgument(format!(
                "delta_pos must be positive, got {}",
                self.delta_pos
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SolveStatus {
    EpsOptimal,
    IterLimit,
    TimeLimit,
    NodeLimit,
    ConvexShortcut,
}

impl SolveStatus {
    pub fn is_limit(self) -> bool {
        matches!(self, Self::IterLimit | Self::TimeLimit | Self::NodeLimit)
    }
}

/// Worst-case iteration count; `Overflow` once it exceeds `2^63`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationBound {
    Finite(u64),
    Overflow,
}

impl Serialize for IterationBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => s.serialize_u64(*v),
            Self::Overflow => s.serialize_str("overflow"),
        }
    }
}

/// State at the moment a node is selected for expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: u64,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub active_nodes: usize,
    pub node_diameter: f64,
    /// `Σ_j α_j / min_i vⁱ_j · d(S)` for the selected node.
    pub gap_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub t_star: Vec<f64>,
    pub x_star: Vec<f64>,
    pub ub: f64,
    pub lb: f64,
    pub gap: f64,
    pub h_value: f64,
    pub iterations: u64,
    pub nodes_created: u64,
    pub nodes_pruned: u64,
    pub psi_evaluations: u64,
    pub p_bar: usize,
    /// Absent for the convex shortcut, which never branches.
    pub iteration_bound: Option<IterationBound>,
    #[serde(skip)]
    pub bounds: Option<BoundsBox>,
    pub elapsed_seconds: f64,
    #[serde(skip)]
    pub trace: Vec<IterationRecord>,
}

/// Hook for watching the search, mainly for verification.
pub trait SolveObserver {
    /// Called once for every node after its lower bound is computed, pruned or not.
    fn node_bounded(&mut self, _node: &SimplexNode) {}
}

impl SolveObserver for () {}

/// `t̲_j = 1 / max_X(c_jᵀx + d_j)` and `t̄_j = 1 / min_X(c_jᵀx + d_j)` over J⁺.
pub fn compute_t_bounds(instance: &GlmpInstance, partition: &IndexPartition) -> Result<BoundsBox> {
    let mut lower = Vec::with_capacity(partition.p_bar());
    let mut upper = Vec::with_capacity(partition.p_bar());
    for &j in &partition.j_plus {
        let term = &instance.terms()[j];
        let min = extreme_base(instance, term.c.clone())? + term.d;
        let max = term.d - extreme_base(instance, term.c.iter().map(|v| -v).collect())?;
        if !(min > 0.0) {
            return Err(GlmpError::NonpositiveBase {
                term: j,
                value: min,
            });
        }
        lower.push(1.0 / max);
        upper.push(1.0 / min);
    }
    BoundsBox::new(lower, upper)
}

fn extreme_base(instance: &GlmpInstance, g: Vec<f64>) -> Result<f64> {
    let sol = solve_lp(&instance.lp(g))?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        LpStatus::Infeasible => Err(GlmpError::LpStatus("infeasible")),
        LpStatus::Unbounded => Err(GlmpError::LpStatus("unbounded")),
    }
}

/// The binding parameter `t_j = 1 / (c_jᵀx + d_j)`, j ∈ J⁺.
pub fn refit_t(instance: &GlmpInstance, partition: &IndexPartition, x: &[f64]) -> Result<ParamPoint> {
    let t = partition
        .j_plus
        .iter()
        .map(|&j| {
            let value = instance.terms()[j].base(x);
            if value > 0.0 {
                Ok(1.0 / value)
            } else {
                Err(GlmpError::NonpositiveBase { term: j, value })
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    ParamPoint::new(t)
}

/// Worst-case iteration count before the gap closes:
/// `⌊ Π_j(t̄_j − t̲_j)/√(p̄+1) · (√2·p̄·Σ_j α_j/t̲_j / ε)^p̄ ⌋`.
pub fn iteration_bound(bounds: &BoundsBox, alphas_plus: &[f64], epsilon: f64) -> IterationBound {
    let d = bounds.dim();
    let widths: Vec<f64> = bounds
        .t_upper()
        .iter()
        .zip(bounds.t_lower())
        .map(|(u, l)| u - l)
        .collect();
    if widths.iter().any(|w| *w <= 0.0) || epsilon.is_infinite() {
        return IterationBound::Finite(0);
    }
    let lipschitz: f64 = alphas_plus
        .iter()
        .zip(bounds.t_lower())
        .map(|(a, l)| a / l)
        .sum();
    let ratio = std::f64::consts::SQRT_2 * d as f64 * lipschitz / epsilon;
    let log_value = widths.iter().map(|w| w.ln()).sum::<f64>() - 0.5 * ((d + 1) as f64).ln()
        + d as f64 * ratio.ln();
    if log_value > 63.0 * std::f64::consts::LN_2 {
        return IterationBound::Overflow;
    }
    let value = widths.iter().product::<f64>() / ((d + 1) as f64).sqrt() * ratio.powi(d as i32);
    // Allow a few ulps of accumulated rounding before flooring.
    let snapped = (value * (1.0 + 4.0 * (d as f64 + 3.0) * f64::EPSILON)).floor();
    if snapped >= (1u64 << 63) as f64 {
        IterationBound::Overflow
    } else {
        IterationBound::Finite(snapped as u64)
    }
}

struct HeapEntry {
    lb: f64,
    seq: u64,
    node: SimplexNode,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Reversed: BinaryHeap is a max-heap and we want the least (lb, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lb
            .total_cmp(&self.lb)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    ub: f64,
    x: Vec<f64>,
    t: Vec<f64>,
}

struct Search<'a, O: SolveObserver + ?Sized> {
    instance: &'a GlmpInstance,
    partition: &'a IndexPartition,
    config: &'a SolverConfig,
    alphas_plus: Vec<f64>,
    incumbent: Incumbent,
    psi_evaluations: u64,
    observer: &'a mut O,
}

impl<O: SolveObserver + ?Sized> Search<'_, O> {
    fn evaluate(&mut self, vertex: &Vertex) -> Result<()> {
        if vertex.psi().is_some() {
            return Ok(());
        }
        let bracket = eval_psi(self.instance, self.partition, vertex.point(), self.config.sub_tol)?;
        self.psi_evaluations += 1;
        if !bracket.converged {
            debug!(
                "psi bracket at {:?} stopped with width {:e}",
                vertex.point().as_ref(),
                bracket.width()
            );
        }
        self.offer(&bracket)?;
        vertex.set_psi(bracket);
        Ok(())
    }

    /// Polishes the bracket's minimizer: ν(x) ≤ φ(x, t) = upper.
    fn offer(&mut self, bracket: &PsiBracket) -> Result<()> {
        let nu = objective_nu(self.instance, &bracket.x_arg)?;
        if nu < self.incumbent.ub {
            self.incumbent = Incumbent {
                ub: nu,
                x: bracket.x_arg.clone(),
                t: refit_t(self.instance, self.partition, &bracket.x_arg)?.into_inner(),
            };
        }
        Ok(())
    }

    fn bound(&mut self, node: &mut SimplexNode, floor: f64) -> Result<()> {
        let lowers: Vec<f64> = node
            .vertices
            .iter()
            .map(|v| v.psi().map(|b| b.lower).expect("vertex evaluated before bounding"))
            .collect();
        let points: Vec<&ParamPoint> = node.points().collect();
        let relax = solve_lb(&points, &lowers, &self.alphas_plus, self.config.sub_tol)?;
        // The parent's bound is valid on the child as well.
        node.lb = relax.lb_value.max(floor);
        self.observer.node_bounded(node);
        Ok(())
    }
}

pub fn solve(instance: &GlmpInstance, config: &SolverConfig) -> Result<SolveResult> {
    solve_with_observer(instance, config, &mut ())
}

pub fn solve_with_observer<O: SolveObserver + ?Sized>(
    instance: &GlmpInstance,
    config: &SolverConfig,
    observer: &mut O,
) -> Result<SolveResult> {
    config.check()?;
    let started = Instant::now();
    validate(instance, config.delta_pos)?.into_result()?;
    let partition = partition_terms(instance)?;
    let alphas_plus: Vec<f64> = partition
        .j_plus
        .iter()
        .map(|&j| instance.terms()[j].alpha)
        .collect();

    let mut search = Search {
        instance,
        partition: &partition,
        config,
        alphas_plus,
        incumbent: Incumbent {
            ub: f64::INFINITY,
            x: Vec::new(),
            t: Vec::new(),
        },
        psi_evaluations: 0,
        observer,
    };

    if partition.p_bar() == 0 {
        let t = ParamPoint::new(Vec::new())?;
        let bracket = eval_psi(instance, &partition, &t, config.sub_tol)?;
        search.psi_evaluations += 1;
        search.offer(&bracket)?;
        let ub = search.incumbent.ub;
        let lb = bracket.lower.min(ub);
        info!("all exponents negative: solved as one convex program");
        return Ok(SolveResult {
            status: SolveStatus::ConvexShortcut,
            t_star: Vec::new(),
            x_star: search.incumbent.x,
            ub,
            lb,
            gap: ub - lb,
            h_value: ub.exp(),
            iterations: 0,
            nodes_created: 0,
            nodes_pruned: 0,
            psi_evaluations: search.psi_evaluations,
            p_bar: 0,
            iteration_bound: None,
            bounds: None,
            elapsed_seconds: started.elapsed().as_secs_f64(),
            trace: Vec::new(),
        });
    }

    let bounds = compute_t_bounds(instance, &partition)?;
    let worst_case = iteration_bound(&bounds, &search.alphas_plus, config.epsilon);
    let mut root = initial_simplex(&bounds)?;
    for v in &root.vertices {
        search.evaluate(v)?;
    }
    search.bound(&mut root, f64::NEG_INFINITY)?;

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut next_id = 1u64;
    let mut nodes_created = 1u64;
    let mut nodes_pruned = 0u64;
    let mut iterations = 0u64;
    let mut trace = Vec::new();
    heap.push(HeapEntry {
        lb: root.lb,
        seq,
        node: root,
    });
    seq += 1;

    let status = loop {
        let ub = search.incumbent.ub;
        let lb = heap.peek().map_or(ub, |e| e.lb);
        if ub - lb <= config.epsilon {
            break SolveStatus::EpsOptimal;
        }
        if iterations >= config.max_iterations {
            break SolveStatus::IterLimit;
        }
        if config.time_limit.is_some_and(|limit| started.elapsed() >= limit) {
            break SolveStatus::TimeLimit;
        }
        if nodes_created >= config.node_limit {
            break SolveStatus::NodeLimit;
        }

        let active_nodes = heap.len();
        let HeapEntry { node, .. } = heap.pop().expect("heap is nonempty while lb < ub");
        let (_, _, diameter) = longest_edge(&node);
        let gap_bound = node
            .coordinate_minimums()
            .iter()
            .zip(&search.alphas_plus)
            .map(|(m, a)| a / m)
            .sum::<f64>()
            * diameter;
        iterations += 1;
        trace.push(IterationRecord {
            k: iterations,
            lb,
            ub,
            gap: ub - lb,
            active_nodes,
            node_diameter: diameter,
            gap_bound,
        });
        debug!(
            "k={iterations} lb={lb:.10} ub={ub:.10} active={active_nodes} d={diameter:.3e}"
        );

        let (mut first, mut second) = bisect(&node, next_id)?;
        next_id += 2;
        nodes_created += 2;
        let eta: Arc<Vertex> = first
            .vertices
            .iter()
            .find(|v| v.psi().is_none())
            .cloned()
            .expect("bisection introduces one new vertex");
        search.evaluate(&eta)?;

        for child in [&mut first, &mut second] {
            search.bound(child, node.lb)?;
        }
        for child in [first, second] {
            if search.incumbent.ub - child.lb <= config.epsilon {
                nodes_pruned += 1;
            } else {
                heap.push(HeapEntry {
                    lb: child.lb,
                    seq,
                    node: child,
                });
                seq += 1;
            }
        }
    };

    let ub = search.incumbent.ub;
    let lb = heap.peek().map_or(ub, |e| e.lb).min(ub);
    info!(
        "{status:?} after {iterations} iterations: ub={ub:.12} lb={lb:.12} ({} psi evaluations)",
        search.psi_evaluations
    );
    Ok(SolveResult {
        status,
        t_star: search.incumbent.t,
        x_star: search.incumbent.x,
        ub,
        lb,
        gap: ub - lb,
        h_value: ub.exp(),
        iterations,
        nodes_created,
        nodes_pruned,
        psi_evaluations: search.psi_evaluations,
        p_bar: partition.p_bar(),
        iteration_bound: Some(worst_case),
        bounds: Some(bounds),
        elapsed_seconds: started.elapsed().as_secs_f64(),
        trace,
    })
}

pub const TRACE_CSV_HEADER: [&str; 6] = ["k", "lb", "ub", "gap", "active_nodes", "node_diameter"];

/// Writes the trace as CSV with the columns of [`TRACE_CSV_HEADER`].
pub fn write_trace_csv<W: Write>(trace: &[IterationRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_CSV_HEADER)?;
    for r in trace {
        w.write_record([
            r.k.to_string(),
            r.lb.to_string(),
            r.ub.to_string(),
            r.gap.to_string(),
            r.active_nodes.to_string(),
            r.node_diameter.to_string(),
        ])?;
    }
    w.flush()
}
