//! Seeded random instances in three families.
//!
//! * `P1`: two terms `(c_jᵀx + 1)`, `x ≥ 0`.
//! * `P2`: `p` terms `c_jᵀx`, `0 ≤ x ≤ 1`.
//! * `P3`: `p` terms `(c_jᵀx + d_j)^α_j`, `x ≥ 0`, with a chosen number of
//!   positive exponents.
//!
//! Constraint rows have entries uniform on `[-1, 1]` and right-hand side
//! `Σ_i A_si + 2μ`, `μ` uniform on `[0, 1]`; `c` and `d` are uniform on `[0, 1]`.
//! Sign and box constraints are appended as explicit rows of `A`.
//!
//! Nothing guarantees a draw is bounded or keeps every base positive, so each
//! draw is validated and rejected draws are replaced by the next draw from the
//! same stream.
//!
//! The stream is SplitMix64 (increment `0x9E3779B97F4A7C15`, finalizer
//! multipliers `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`), and a uniform
//! `f64` on `[0, 1)` is the top 53 bits of one output times `2^-53`.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{GlmpError, Result};
use crate::model::{validate, GlmpInstance, Term, DEFAULT_DELTA_POS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    P1,
    P2,
    P3,
}

impl std::str::FromStr for Scheme {
    type Err = GlmpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Self::P1),
            "p2" => Ok(Self::P2),
            "p3" => Ok(Self::P3),
            _ => Err(GlmpError::InvalidArgument(format!(
                "unknown scheme {s:?}, expected p1, p2 or p3"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub scheme: Scheme,
    /// Number of terms. Ignored for `P1`, which always has two.
    pub p: usize,
    /// Number of positive exponents; only read for `P3`.
    pub p_bar_target: usize,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub max_retries: usize,
}

impl GenSpec {
    pub const DEFAULT_MAX_RETRIES: usize = 1000;

    pub fn new(scheme: Scheme, m: usize, n: usize, seed: u64) -> Self {
        Self {
            scheme,
            p: 2,
            p_bar_target: 2,
            m,
            n,
            seed,
            max_retries: Self::DEFAULT_MAX_RETRIES,
        }
    }

    pub fn with_terms(mut self, p: usize, p_bar_target: usize) -> Self {
        self.p = p;
        self.p_bar_target = p_bar_target;
        self
    }

    fn term_count(&self) -> usize {
        match self.scheme {
            Scheme::P1 => 2,
            _ => self.p,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(GlmpError::InvalidArgument("n must be positive".into()));
        }
        if self.term_count() == 0 {
            return Err(GlmpError::InvalidArgument("p must be positive".into()));
        }
        if self.scheme == Scheme::P3 && !(1..=self.p).contains(&self.p_bar_target) {
            return Err(GlmpError::InvalidArgument(format!(
                "p_bar_target must lie in 1..={}, got {}",
                self.p, self.p_bar_target
            )));
        }
        Ok(())
    }
}

/// The generator's uniform stream, also used by the samplers in [`crate::oracle`].
#[derive(Debug, Clone)]
pub struct UniformStream(SplitMix64);

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn between(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform on `0..n`, `n > 0`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

fn draw(spec: &GenSpec, rng: &mut UniformStream, attempt: usize) -> Result<GlmpInstance> {
    let n = spec.n;
    let mut a = Vec::with_capacity(spec.m + 2 * n);
    let mut b = Vec::with_capacity(spec.m + 2 * n);
    for _ in 0..spec.m {
        let row: Vec<f64> = (0..n).map(|_| rng.between(-1.0, 1.0)).collect();
        let mu = rng.uniform();
        b.push(row.iter().sum::<f64>() + 2.0 * mu);
        a.push(row);
    }
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = -1.0;
        a.push(row);
        b.push(0.0);
    }
    if spec.scheme == Scheme::P2 {
        for i in 0..n {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            a.push(row);
            b.push(1.0);
        }
    }

    let terms = (0..spec.term_count())
        .map(|j| {
            let c: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let (d, alpha) = match spec.scheme {
                Scheme::P1 => (1.0, 1.0),
                Scheme::P2 => (0.0, 1.0),
                Scheme::P3 => {
                    let d = rng.uniform();
                    let magnitude = 1.0 - rng.uniform();
                    let sign = if j < spec.p_bar_target { 1.0 } else { -1.0 };
                    (d, sign * magnitude)
                }
            };
            Term { c, d, alpha }
        })
        .collect();

    let name = format!(
        "{:?}-m{}-n{}-p{}-s{}-r{}",
        spec.scheme,
        spec.m,
        n,
        spec.term_count(),
        spec.seed,
        attempt
    )
    .to_lowercase();
    GlmpInstance::new(name, n, a, b, terms)
}

/// Draws until an instance passes validation or the retry budget runs out.
pub fn generate(spec: &GenSpec) -> Result<GlmpInstance> {
    spec.check()?;
    let mut rng = UniformStream::new(spec.seed);
    let mut last_reason = String::new();
    for attempt in 0..=spec.max_retries {
        let instance = draw(spec, &mut rng, attempt)?;
        let report = validate(&instance, DEFAULT_DELTA_POS)?;
        if report.is_valid() {
            return Ok(instance);
        }
        last_reason = match report.violations.len() {
            0..=3 => report.violations.join("; "),
            k => format!("{} (and {} more)", report.violations[..3].join("; "), k - 3),
        };
        log::debug!("draw {attempt} rejected: {last_reason}");
    }
    Err(GlmpError::Generation {
        retries: spec.max_retries,
        reason: last_reason,
    })
}
