//! Brute-force references for testing the solver. The solver never calls these.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{GlmpError, Result};
use crate::generate::UniformStream;
use crate::linprog::{solve_lp, LpStatus};
use crate::model::{objective_h, partition_terms, GlmpInstance};
use crate::simplex_geom::{initial_simplex, longest_edge, BoundsBox};
use crate::subsolve::{eval_psi, ParamPoint};

/// Subsolver tolerance used at grid points.
pub const GRID_PSI_TOL: f64 = 1e-9;

pub const GRID_MAX_DIM: usize = 3;
pub const VERTEX_MAX_SIZE: usize = 12;

/// All nonnegative integer vectors of length `parts` summing to `total`, in
/// lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=rest {
            prefix.push(k);
            rec(rest - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// Minimum of the ψ upper estimate over the barycentric grid of the initial
/// simplex built on `bounds`. Ties go to the first grid point in
/// lexicographic order, so the result does not depend on thread scheduling.
pub fn grid_min_psi(
    instance: &GlmpInstance,
    bounds: &BoundsBox,
    resolution: usize,
) -> Result<(f64, ParamPoint)> {
    let partition = partition_terms(instance)?;
    let dim = partition.p_bar();
    if dim == 0 || dim > GRID_MAX_DIM {
        return Err(GlmpError::OracleUnsupported(format!(
            "grid needs 1 to {GRID_MAX_DIM} positive exponents, got {dim}"
        )));
    }
    if bounds.dim() != dim {
        return Err(GlmpError::Dimension(format!(
            "bounds have dimension {}, expected {dim}",
            bounds.dim()
        )));
    }
    if resolution == 0 {
        return Err(GlmpError::InvalidArgument("resolution must be positive".into()));
    }
    let simplex = initial_simplex(bounds)?;
    let vertices: Vec<&[f64]> = simplex.points().map(|p| p.as_ref()).collect();
    let grid = compositions(resolution, dim + 1);

    let best = grid
        .par_iter()
        .enumerate()
        .map(|(index, weights)| {
            let t: Vec<f64> = (0..dim)
                .map(|j| {
                    weights
                        .iter()
                        .zip(&vertices)
                        .map(|(&w, v)| w as f64 * v[j])
                        .sum::<f64>()
                        / resolution as f64
                })
                .collect();
            let t = ParamPoint::new(t)?;
            let bracket = eval_psi(instance, &partition, &t, GRID_PSI_TOL)?;
            Ok::<_, GlmpError>((bracket.upper, index, t))
        })
        .try_reduce_with(|a, b| {
            let keep_a = a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).is_le();
            Ok(if keep_a { a } else { b })
        })
        .expect("grid is nonempty")?;
    Ok((best.0, best.2))
}

/// Worst-case gap between the grid minimum and the true minimum:
/// `Σ_j α_j / t̲_j · d(S⁰) / resolution`, with `d` the longest edge of the
/// initial simplex.
pub fn grid_error_bound(bounds: &BoundsBox, alphas_plus: &[f64], resolution: usize) -> Result<f64> {
    let simplex = initial_simplex(bounds)?;
    let (_, _, diameter) = longest_edge(&simplex);
    let lipschitz: f64 = alphas_plus
        .iter()
        .zip(bounds.t_lower())
        .map(|(a, l)| a / l)
        .sum();
    Ok(lipschitz * diameter / resolution as f64)
}

/// Minimum of `h` over the vertices of `X`, by enumerating every square
/// subsystem of `Ax ≤ b`. Valid when all exponents are positive and `X` is
/// bounded: `ln h` is then concave, so a vertex attains the minimum.
pub fn vertex_min_h(instance: &GlmpInstance) -> Result<(f64, Vec<f64>)> {
    if instance.alphas().any(|a| a < 0.0) {
        return Err(GlmpError::OracleUnsupported(
            "negative exponents allow interior minima".into(),
        ));
    }
    let (n, m) = (instance.n(), instance.m());
    if n + m > VERTEX_MAX_SIZE {
        return Err(GlmpError::OracleUnsupported(format!(
            "n + m = {} exceeds {VERTEX_MAX_SIZE}",
            n + m
        )));
    }
    let scale = instance.b().iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for rows in combinations(m, n) {
        let a = DMatrix::from_fn(n, n, |r, c| instance.a()[rows[r]][c]);
        let b = DVector::from_iterator(n, rows.iter().map(|&r| instance.b()[r]));
        let Some(x) = a.clone().lu().solve(&b) else {
            continue;
        };
        if (&a * &x - &b).amax() > 1e-9 * scale {
            continue;
        }
        // `+ 0.0` turns -0.0 into 0.0.
        let x: Vec<f64> = x.iter().map(|v| v + 0.0).collect();
        if instance.max_violation(&x) > 1e-9 * scale {
            continue;
        }
        let h = objective_h(instance, &x)?;
        if best.as_ref().is_none_or(|(v, _)| h < *v) {
            best = Some((h, x));
        }
    }
    best.ok_or(GlmpError::LpStatus("infeasible"))
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..m {
            current.push(i);
            rec(i + 1, m, k, current, out);
            current.pop();
        }
    }
    rec(0, m, k, &mut current, &mut out);
    out
}

/// Feasible points drawn as random convex combinations of `pool` LP vertices,
/// each the minimizer of a random linear objective over `X`.
pub fn sample_feasible(
    instance: &GlmpInstance,
    seed: u64,
    pool: usize,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = UniformStream::new(seed);
    let n = instance.n();
    let mut vertices = Vec::with_capacity(pool);
    for _ in 0..pool.max(1) {
        let g: Vec<f64> = (0..n).map(|_| rng.between(-1.0, 1.0)).collect();
        let sol = solve_lp(&instance.lp(g))?;
        match sol.status {
            LpStatus::Optimal => vertices.push(sol.x),
            LpStatus::Infeasible => return Err(GlmpError::LpStatus("infeasible")),
            LpStatus::Unbounded => return Err(GlmpError::LpStatus("unbounded")),
        }
    }
    Ok(sample_simplex(&vertices, &mut rng, count))
}

/// Uniform samples from the simplex spanned by `vertices` (flat Dirichlet weights).
pub fn sample_simplex<V: AsRef<[f64]>>(vertices: &[V], rng: &mut UniformStream, count: usize) -> Vec<Vec<f64>> {
    let dim = vertices.first().map_or(0, |v| v.as_ref().len());
    (0..count)
        .map(|_| {
            let weights: Vec<f64> = vertices.iter().map(|_| -(1.0 - rng.uniform()).ln()).collect();
            let total: f64 = weights.iter().sum();
            (0..dim)
                .map(|j| {
                    vertices
                        .iter()
                        .zip(&weights)
                        .map(|(v, w)| v.as_ref()[j] * w / total)
                        .sum()
                })
                .collect()
        })
        .collect()
}
