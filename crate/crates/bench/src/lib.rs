//! Fixed workloads shared by the benchmarks.

use glmp_core::generate::{generate, GenSpec, Scheme};
use glmp_core::linprog::LpProblem;
use glmp_core::GlmpInstance;

/// A P1 draw at the given size.
pub fn p1(m: usize, n: usize, seed: u64) -> GlmpInstance {
    generate(&GenSpec::new(Scheme::P1, m, n, seed)).expect("fixture generates")
}

/// A P3 draw with `p` terms, `p_bar` of them with positive exponents.
pub fn p3(m: usize, n: usize, p: usize, p_bar: usize, seed: u64) -> GlmpInstance {
    generate(&GenSpec::new(Scheme::P3, m, n, seed).with_terms(p, p_bar)).expect("fixture generates")
}

/// Minimizing the first term's base over the instance's feasible region.
pub fn term_lp(instance: &GlmpInstance) -> LpProblem {
    instance.lp(instance.terms()[0].c.clone())
}
