#![allow(dead_code)]

use glmp_core::generate::{generate, GenSpec, Scheme};
use glmp_core::{GlmpInstance, Term};

pub fn term(c: Vec<f64>, d: f64, alpha: f64) -> Term {
    Term { c, d, alpha }
}

/// `(x1 + 1)(x2 + 1)` over `x1 + x2 ≥ 1`, `0 ≤ x ≤ 1`. Minimum 2 at (1,0) and (0,1).
pub fn instance_a() -> GlmpInstance {
    GlmpInstance::new(
        "A",
        2,
        vec![
            vec![-1.0, -1.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ],
        vec![-1.0, 1.0, 1.0, 0.0, 0.0],
        vec![term(vec![1.0, 0.0], 1.0, 1.0), term(vec![0.0, 1.0], 1.0, 1.0)],
    )
    .unwrap()
}

/// `(x + 1) / (3 − x)` over `0 ≤ x ≤ 2`. Minimum 1/3 at x = 0.
pub fn instance_b() -> GlmpInstance {
    GlmpInstance::new(
        "B",
        1,
        vec![vec![1.0], vec![-1.0]],
        vec![2.0, 0.0],
        vec![term(vec![1.0], 1.0, 1.0), term(vec![-1.0], 3.0, -1.0)],
    )
    .unwrap()
}

/// Small mixed-sign instances with 1 to 3 positive exponents, varied by seed.
pub fn seeded(seed: u64) -> GlmpInstance {
    let p = 2 + (seed % 3) as usize;
    let p_bar = 1 + (seed as usize / 3) % p.min(3);
    let m = 4 + (seed % 5) as usize;
    let n = 2 + (seed % 4) as usize;
    generate(&GenSpec::new(Scheme::P3, m, n, 1000 + seed).with_terms(p, p_bar)).unwrap()
}

/// P1 family at m = 10, n = 20.
pub fn p1(seed: u64) -> GlmpInstance {
    generate(&GenSpec::new(Scheme::P1, 10, 20, seed)).unwrap()
}
