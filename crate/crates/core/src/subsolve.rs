//! Bounding engines: the parametric convex subproblem ψ(t) and the simplicial
//! relaxation LB(S).
//!
//! Both are convex programs solved by conditional gradient with away steps and
//! exact line search. Each returns a certified one-sided estimate: the
//! Frank–Wolfe gap `∇f(x)ᵀ(x − v)` bounds the suboptimality of any iterate, so
//! `f(x) − gap` is a valid lower bound even when the tolerance is not reached.

use std::ops::Deref;

use serde::Serialize;

use crate::error::{GlmpError, Result};
use crate::linprog::{solve_lp, LpProblem, LpStatus};
use crate::model::{dot, GlmpInstance, IndexPartition};

/// Iteration cap for the ψ subsolver.
pub const PSI_MAX_ITERATIONS: usize = 5000;
/// Iteration cap for the LB(S) subsolver.
pub const LB_MAX_ITERATIONS: usize = 2000;
const LINE_SEARCH_STEPS: usize = 60;

/// A point of the outer space, one coordinate per positive-exponent term.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ParamPoint(Vec<f64>);

impl ParamPoint {
    /// Accepts any finite, strictly positive coordinates.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(j) = coords.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(GlmpError::InvalidArgument(format!(
                "parameter coordinate {j} is {} (must be finite and positive)",
                coords[j]
            )));
        }
        Ok(Self(coords))
    }

    /// Like [`ParamPoint::new`], additionally requiring `coords ≥ floor`.
    pub fn above(coords: Vec<f64>, floor: &[f64]) -> Result<Self> {
        if coords.len() != floor.len() {
            return Err(GlmpError::Dimension(format!(
                "parameter has {} coordinates, floor has {}",
                coords.len(),
                floor.len()
            )));
        }
        for (j, (&v, &lo)) in coords.iter().zip(floor).enumerate() {
            if v < lo * (1.0 - 1e-12) {
                return Err(GlmpError::InvalidArgument(format!(
                    "parameter coordinate {j} = {v} lies below the lower bound {lo}"
                )));
            }
        }
        Self::new(coords)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ParamPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Two-sided estimate of ψ(t) with the point attaining `upper`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiBracket {
    pub lower: f64,
    pub upper: f64,
    pub x_arg: Vec<f64>,
    pub subsolver_iterations: usize,
    /// False when the iteration cap hit before `upper - lower <= tol`.
    pub converged: bool,
}

impl PsiBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxResult {
    pub lb_value: f64,
    pub w_arg: Vec<f64>,
    pub fw_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Two or more vertices coincide.
    pub degenerate: bool,
}

/// `ln a + 1/a − 1`, nonnegative for every `a > 0`.
pub fn log_bound_slack(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(GlmpError::InvalidArgument(format!(
            "slack argument must be finite and positive, got {a}"
        )));
    }
    // ln_1p keeps the value accurate near a = 1, where the two terms cancel.
    let u = 1.0 / a - 1.0;
    Ok(u - u.ln_1p())
}

/// φ(x, t) restricted to a fixed t: `lin·x + constant + Σ_{J⁻} α_j ln(c_jᵀx + d_j)`.
struct LiftedObjective<'a> {
    lin: Vec<f64>,
    constant: f64,
    logs: Vec<(&'a [f64], f64, f64, usize)>,
}

impl<'a> LiftedObjective<'a> {
    fn new(instance: &'a GlmpInstance, partition: &IndexPartition, t: &[f64]) -> Result<Self> {
        if t.len() != partition.p_bar() {
            return Err(GlmpError::Dimension(format!(
                "parameter has {} coordinates, expected p_bar = {}",
                t.len(),
                partition.p_bar()
            )));
        }
        let terms = instance.terms();
        let mut lin = vec![0.0; instance.n()];
        let mut constant = 0.0;
        for (&j, &tj) in partition.j_plus.iter().zip(t) {
            if !(tj > 0.0) {
                return Err(GlmpError::InvalidArgument(format!(
                    "parameter coordinate for term {j} must be positive, got {tj}"
                )));
            }
            let term = &terms[j];
            let scale = term.alpha * tj;
            for (l, c) in lin.iter_mut().zip(&term.c) {
                *l += scale * c;
            }
            constant += term.alpha * (tj * term.d - tj.ln() - 1.0);
        }
        let logs = partition
            .j_minus
            .iter()
            .map(|&j| (terms[j].c.as_slice(), terms[j].d, terms[j].alpha, j))
            .collect();
        Ok(Self {
            lin,
            constant,
            logs,
        })
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let mut v = dot(&self.lin, x) + self.constant;
        for &(c, d, alpha, j) in &self.logs {
            let base = dot(c, x) + d;
            if !(base > 0.0) {
                return Err(GlmpError::NonpositiveBase {
                    term: j,
                    value: base,
                });
            }
            v += alpha * base.ln();
        }
        Ok(v)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.lin.clone();
        for &(c, d, alpha, _) in &self.logs {
            let scale = alpha / (dot(c, x) + d);
            for (gi, ci) in g.iter_mut().zip(c) {
                *gi += scale * ci;
            }
        }
        g
    }

    /// Derivative of `γ ↦ φ(x + γ d)`.
    fn directional(&self, x: &[f64], dir: &[f64]) -> impl Fn(f64) -> f64 {
        let slope = dot(&self.lin, dir);
        let parts: Vec<(f64, f64, f64)> = self
            .logs
            .iter()
            .map(|&(c, d, alpha, _)| (alpha, dot(c, x) + d, dot(c, dir)))
            .collect();
        move |gamma| {
            slope
                + parts
                    .iter()
                    .map(|&(alpha, base, cd)| alpha * cd / (base + gamma * cd))
                    .sum::<f64>()
        }
    }
}

/// φ(x, t) = Σ_{J⁻} α_j ln(c_jᵀx + d_j) + Σ_{J⁺} α_j (t_j(c_jᵀx + d_j) − ln t_j − 1).
pub fn phi(
    instance: &GlmpInstance,
    partition: &IndexPartition,
    x: &[f64],
    t: &[f64],
) -> Result<f64> {
    if x.len() != instance.n() {
        return Err(GlmpError::Dimension(format!(
            "point has {} coordinates, expected {}",
            x.len(),
            instance.n()
        )));
    }
    LiftedObjective::new(instance, partition, t)?.value(x)
}

/// Minimizes a convex 1-D function on `[0, max]` given its derivative.
fn line_search(deriv: impl Fn(f64) -> f64, max: f64) -> f64 {
    if !(max > 0.0) || deriv(0.0) >= 0.0 {
        return 0.0;
    }
    if deriv(max) <= 0.0 {
        return max;
    }
    let (mut lo, mut hi) = (0.0, max);
    for _ in 0..LINE_SEARCH_STEPS {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())))
}

fn lp_argmin(lp: &mut LpProblem, g: Vec<f64>) -> Result<(Vec<f64>, usize)> {
    lp.g = g;
    let sol = solve_lp(lp)?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.x, sol.iterations)),
        LpStatus::Infeasible => Err(GlmpError::LpStatus("infeasible")),
        LpStatus::Unbounded => Err(GlmpError::LpStatus("unbounded")),
    }
}

/// Brackets ψ(t) = min_{x ∈ X} φ(x, t).
///
/// With no negative exponents φ is affine in x and one LP is exact. Otherwise
/// away-step conditional gradient runs over X with the LP as linear oracle.
pub fn eval_psi(
    instance: &GlmpInstance,
    partition: &IndexPartition,
    t: &ParamPoint,
    tol: f64,
) -> Result<PsiBracket> {
    if !(tol > 0.0) {
        return Err(GlmpError::InvalidArgument(format!(
            "subsolver tolerance must be positive, got {tol}"
        )));
    }
    let obj = LiftedObjective::new(instance, partition, t)?;
    let mut lp = instance.lp(Vec::new());

    if obj.logs.is_empty() {
        let (x, iters) = lp_argmin(&mut lp, obj.lin.clone())?;
        let value = obj.value(&x)?;
        return Ok(PsiBracket {
            lower: value,
            upper: value,
            x_arg: x,
            subsolver_iterations: iters,
            converged: true,
        });
    }

    // Start from the oracle vertex for the gradient at unit bases.
    let mut start = obj.lin.clone();
    for &(c, _, alpha, _) in &obj.logs {
        for (s, ci) in start.iter_mut().zip(c) {
            *s += alpha * ci;
        }
    }
    let (x0, _) = lp_argmin(&mut lp, start)?;
    let mut x = x0.clone();
    let mut active: Vec<(Vec<f64>, f64)> = vec![(x0, 1.0)];

    let mut best_upper = f64::INFINITY;
    let mut best_lower = f64::NEG_INFINITY;
    let mut x_best = x.clone();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < PSI_MAX_ITERATIONS {
        iterations += 1;
        let f = obj.value(&x)?;
        if f < best_upper {
            best_upper = f;
            x_best.clone_from(&x);
        }
        let grad = obj.gradient(&x);
        let (s, _) = lp_argmin(&mut lp, grad.clone())?;
        let gx = dot(&grad, &x);
        let fw_gap = (gx - dot(&grad, &s)).max(0.0);
        best_lower = best_lower.max(f - fw_gap);
        if best_upper - best_lower <= tol {
            converged = true;
            break;
        }

        let (away_idx, away_score) = active
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i, dot(&grad, v)))
            .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        let away_gap = away_score - gx;
        let away_weight = active[away_idx].1;

        if fw_gap >= away_gap || away_weight >= 1.0 {
            let dir: Vec<f64> = s.iter().zip(&x).map(|(s, x)| s - x).collect();
            let gamma = line_search(obj.directional(&x, &dir), 1.0);
            if gamma == 0.0 {
                break;
            }
            for (xi, di) in x.iter_mut().zip(&dir) {
                *xi += gamma * di;
            }
            if gamma >= 1.0 {
                active.clear();
                active.push((s, 1.0));
            } else {
                for (_, w) in active.iter_mut() {
                    *w *= 1.0 - gamma;
                }
                match active.iter_mut().find(|(v, _)| same_point(v, &s)) {
                    Some((_, w)) => *w += gamma,
                    None => active.push((s, gamma)),
                }
            }
        } else {
            let max_step = away_weight / (1.0 - away_weight);
            let dir: Vec<f64> = x
                .iter()
                .zip(&active[away_idx].0)
                .map(|(x, a)| x - a)
                .collect();
            let gamma = line_search(obj.directional(&x, &dir), max_step);
            if gamma == 0.0 {
                break;
            }
            for (xi, di) in x.iter_mut().zip(&dir) {
                *xi += gamma * di;
            }
            for (_, w) in active.iter_mut() {
                *w *= 1.0 + gamma;
            }
            active[away_idx].1 -= gamma;
            if gamma >= max_step {
                active.remove(away_idx);
            }
        }
    }

    Ok(PsiBracket {
        lower: best_lower.min(best_upper),
        upper: best_upper,
        x_arg: x_best,
        subsolver_iterations: iterations,
        converged,
    })
}

/// Certified lower bound on ψ over the simplex with the given vertices.
///
/// Minimizes, over the unit simplex in `w`,
///
/// ```text
/// F(w) = Σ_i (ψ̲(vⁱ) + Σ_j α_j ln vⁱ_j) w_i − Σ_j α_j ln(Σ_i vⁱ_j w_i)
/// ```
///
/// where `ψ̲(vⁱ)` are certified lower estimates of ψ at the vertices. The
/// returned `lb_value` is `F(w_arg) − fw_gap`, which never exceeds `min F`.
pub fn solve_lb<V: AsRef<[f64]>>(
    vertices: &[V],
    psi_lowers: &[f64],
    alphas_plus: &[f64],
    tol: f64,
) -> Result<RelaxResult> {
    let k = vertices.len();
    let q = alphas_plus.len();
    if k != q + 1 || psi_lowers.len() != k {
        return Err(GlmpError::Dimension(format!(
            "relaxation needs p_bar + 1 = {} vertices and lower values, got {} and {}",
            q + 1,
            k,
            psi_lowers.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(GlmpError::InvalidArgument(format!(
            "relaxation tolerance must be positive, got {tol}"
        )));
    }
    if alphas_plus.iter().any(|a| !(*a > 0.0)) {
        return Err(GlmpError::InvalidArgument(
            "relaxation exponents must be positive".into(),
        ));
    }
    let verts: Vec<&[f64]> = vertices.iter().map(|v| v.as_ref()).collect();
    for v in &verts {
        if v.len() != q || v.iter().any(|x| !(*x > 0.0)) {
            return Err(GlmpError::InvalidArgument(
                "relaxation vertices must be positive p_bar-vectors".into(),
            ));
        }
    }
    let degenerate = (0..k).any(|i| (i + 1..k).any(|l| verts[i] == verts[l]));

    let coef: Vec<f64> = verts
        .iter()
        .zip(psi_lowers)
        .map(|(v, &psi)| psi + v.iter().zip(alphas_plus).map(|(x, a)| a * x.ln()).sum::<f64>())
        .collect();

    let combo = |w: &[f64]| -> Vec<f64> {
        let mut t = vec![0.0; q];
        for (v, &wi) in verts.iter().zip(w) {
            if wi != 0.0 {
                for (tj, vj) in t.iter_mut().zip(v.iter()) {
                    *tj += wi * vj;
                }
            }
        }
        t
    };
    let value = |w: &[f64], t: &[f64]| -> f64 {
        dot(&coef, w) - t.iter().zip(alphas_plus).map(|(tj, a)| a * tj.ln()).sum::<f64>()
    };

    let mut w = vec![1.0 / k as f64; k];
    let mut best = (f64::NEG_INFINITY, w.clone(), f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < LB_MAX_ITERATIONS {
        iterations += 1;
        let t = combo(&w);
        let f = value(&w, &t);
        let grad: Vec<f64> = verts
            .iter()
            .zip(&coef)
            .map(|(v, c)| c - v.iter().zip(&t).zip(alphas_plus).map(|((vj, tj), a)| a * vj / tj).sum::<f64>())
            .collect();
        let gw = dot(&grad, &w);
        let (s, gs) = grad
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &g)| if g < acc.1 { (i, g) } else { acc });
        let fw_gap = (gw - gs).max(0.0);
        let certificate = f - fw_gap;
        if certificate > best.0 {
            best = (certificate, w.clone(), fw_gap);
        }
        if fw_gap <= tol {
            converged = true;
            break;
        }
        let (a, ga) = grad
            .iter()
            .enumerate()
            .filter(|(i, _)| w[*i] > 0.0)
            .fold((0, f64::NEG_INFINITY), |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc });
        let away_gap = ga - gw;

        let away = fw_gap < away_gap && w[a] < 1.0;
        let (dir, max_step) = if away {
            let mut d = w.clone();
            d[a] -= 1.0;
            (d, w[a] / (1.0 - w[a]))
        } else {
            let mut d: Vec<f64> = w.iter().map(|x| -x).collect();
            d[s] += 1.0;
            (d, 1.0)
        };
        let slope = dot(&coef, &dir);
        let t_dir = combo(&dir);
        let gamma = line_search(
            |g| {
                slope
                    - t.iter()
                        .zip(&t_dir)
                        .zip(alphas_plus)
                        .map(|((tj, dj), al)| al * dj / (tj + g * dj))
                        .sum::<f64>()
            },
            max_step,
        );
        if gamma == 0.0 {
            // Numerically stationary; the certificate above stands.
            break;
        }
        for (wi, di) in w.iter_mut().zip(&dir) {
            *wi = (*wi + gamma * di).max(0.0);
        }
        if away && gamma >= max_step {
            w[a] = 0.0;
        }
    }

    let (lb_value, w_arg, fw_gap) = best;
    Ok(RelaxResult {
        lb_value,
        w_arg,
        fw_gap,
        iterations,
        converged,
        degenerate,
    })
}
