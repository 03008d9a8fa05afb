//! Simplices in the outer space and their longest-edge bisection.
//!
//! Vertices are reference counted: the two children of a bisection hold the
//! same `Arc<Vertex>` objects as their parent for every vertex except the new
//! midpoint, and both children hold the same midpoint object. A vertex's ψ
//! bracket is stored on the vertex once, so it is never recomputed.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{GlmpError, Result};
use crate::subsolve::{ParamPoint, PsiBracket};

/// `t_lower ≤ t ≤ t_upper`, the box of binding parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsBox {
    t_lower: Vec<f64>,
    t_upper: Vec<f64>,
}

impl BoundsBox {
    pub fn new(t_lower: Vec<f64>, t_upper: Vec<f64>) -> Result<Self> {
        if t_lower.len() != t_upper.len() {
            return Err(GlmpError::Dimension(format!(
                "bounds have {} lower and {} upper entries",
                t_lower.len(),
                t_upper.len()
            )));
        }
        for (j, (&lo, &hi)) in t_lower.iter().zip(&t_upper).enumerate() {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(GlmpError::InvalidArgument(format!(
                    "bounds for coordinate {j} must satisfy 0 < {lo} <= {hi} < inf"
                )));
            }
        }
        Ok(Self { t_lower, t_upper })
    }

    pub fn dim(&self) -> usize {
        self.t_lower.len()
    }
    pub fn t_lower(&self) -> &[f64] {
        &self.t_lower
    }
    pub fn t_upper(&self) -> &[f64] {
        &self.t_upper
    }

    /// All `2^dim` corners, in binary-counting order.
    pub fn corners(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let d = self.dim();
        (0u64..1 << d).map(move |mask| {
            (0..d)
                .map(|j| {
                    if mask >> j & 1 == 1 {
                        self.t_upper[j]
                    } else {
                        self.t_lower[j]
                    }
                })
                .collect()
        })
    }
}

/// A simplex vertex together with its lazily computed ψ bracket.
#[derive(Debug)]
pub struct Vertex {
    point: ParamPoint,
    psi: OnceLock<PsiBracket>,
}

impl Vertex {
    pub fn new(point: ParamPoint) -> Self {
        Self {
            point,
            psi: OnceLock::new(),
        }
    }

    pub fn point(&self) -> &ParamPoint {
        &self.point
    }

    pub fn psi(&self) -> Option<&PsiBracket> {
        self.psi.get()
    }

    /// Stores the bracket; returns false if one was already present.
    pub fn set_psi(&self, bracket: PsiBracket) -> bool {
        self.psi.set(bracket).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct SimplexNode {
    pub id: u64,
    pub depth: u32,
    pub vertices: Vec<Arc<Vertex>>,
    /// Relaxation bound; `-inf` until computed.
    pub lb: f64,
    pub parent_id: Option<u64>,
}

impl SimplexNode {
    pub fn from_points(id: u64, points: Vec<ParamPoint>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(GlmpError::InvalidArgument("simplex needs vertices".into()));
        };
        let dim = first.len();
        if points.len() != dim + 1 || points.iter().any(|p| p.len() != dim) {
            return Err(GlmpError::Dimension(format!(
                "a {dim}-simplex needs {} vertices of dimension {dim}",
                dim + 1
            )));
        }
        Ok(Self {
            id,
            depth: 0,
            vertices: points.into_iter().map(|p| Arc::new(Vertex::new(p))).collect(),
            lb: f64::NEG_INFINITY,
            parent_id: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn points(&self) -> impl Iterator<Item = &ParamPoint> {
        self.vertices.iter().map(|v| &v.point)
    }

    /// `min_i vⁱ_j` for every coordinate j.
    pub fn coordinate_minimums(&self) -> Vec<f64> {
        let mut mins = vec![f64::INFINITY; self.dim()];
        for p in self.points() {
            for (m, &v) in mins.iter_mut().zip(p.iter()) {
                *m = m.min(v);
            }
        }
        mins
    }
}

/// The initial simplex `[t̲, t̲ + p̄(t̄_1 − t̲_1)e_1, …]` covering the box.
pub fn initial_simplex(bounds: &BoundsBox) -> Result<SimplexNode> {
    let d = bounds.dim();
    if d == 0 {
        return Err(GlmpError::InvalidArgument(
            "initial simplex needs at least one positive exponent".into(),
        ));
    }
    let lower = bounds.t_lower();
    let mut points = Vec::with_capacity(d + 1);
    points.push(ParamPoint::above(lower.to_vec(), lower)?);
    for j in 0..d {
        let mut v = lower.to_vec();
        v[j] += d as f64 * (bounds.t_upper()[j] - lower[j]);
        points.push(ParamPoint::above(v, lower)?);
    }
    SimplexNode::from_points(0, points)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Longest edge as zero-based `(i, j, length)` with `i < j`; ties go to the
/// lexicographically smallest pair.
pub fn longest_edge(node: &SimplexNode) -> (usize, usize, f64) {
    let pts: Vec<&ParamPoint> = node.points().collect();
    let mut best = (0, 1, f64::NEG_INFINITY);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let len = distance(pts[i], pts[j]);
            if len > best.2 {
                best = (i, j, len);
            }
        }
    }
    if pts.len() < 2 {
        best.2 = 0.0;
    }
    best
}

/// Splits `node` at the midpoint of its longest edge.
///
/// The first child replaces vertex `j` by the midpoint and gets id
/// `first_id`; the second replaces vertex `i` and gets `first_id + 1`.
pub fn bisect(node: &SimplexNode, first_id: u64) -> Result<(SimplexNode, SimplexNode)> {
    let (i, j, len) = longest_edge(node);
    if !(len > 0.0) {
        return Err(GlmpError::DegenerateSimplex(format!(
            "node {} has no edge of positive length",
            node.id
        )));
    }
    let a = node.vertices[i].point();
    let b = node.vertices[j].point();
    let mid: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| 0.5 * (x + y)).collect();
    let eta = Arc::new(Vertex::new(ParamPoint::new(mid)?));

    let child = |replace: usize, id: u64| {
        let mut vertices = node.vertices.clone();
        vertices[replace] = Arc::clone(&eta);
        SimplexNode {
            id,
            depth: node.depth + 1,
            vertices,
            lb: f64::NEG_INFINITY,
            parent_id: Some(node.id),
        }
    };
    Ok((child(j, first_id), child(i, first_id + 1)))
}

/// Solves `[V; 1ᵀ] w = [t; 1]` for the barycentric coordinates of `t`.
pub fn barycentric(node: &SimplexNode, t: &[f64]) -> Result<Vec<f64>> {
    let d = node.dim();
    if t.len() != d {
        return Err(GlmpError::Dimension(format!(
            "point has {} coordinates, simplex lives in dimension {d}",
            t.len()
        )));
    }
    let mut m = DMatrix::<f64>::zeros(d + 1, d + 1);
    for (col, p) in node.points().enumerate() {
        for (row, &v) in p.iter().enumerate() {
            m[(row, col)] = v;
        }
        m[(d, col)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(d + 1);
    rhs.rows_mut(0, d).copy_from_slice(t);
    rhs[d] = 1.0;
    let lu = m.clone().lu();
    let w = lu.solve(&rhs).ok_or_else(|| {
        GlmpError::DegenerateSimplex(format!("node {} has affinely dependent vertices", node.id))
    })?;
    // LU succeeds on numerically singular matrices; reject garbage explicitly.
    let residual = (&m * &w - &rhs).amax();
    if !w.iter().all(|v| v.is_finite()) || residual > 1e-8 * (1.0 + rhs.amax()) {
        return Err(GlmpError::DegenerateSimplex(format!(
            "node {} has affinely dependent vertices",
            node.id
        )));
    }
    Ok(w.iter().copied().collect())
}

/// Membership test with the usual `-1e-10` slack on barycentric coordinates.
pub fn contains(node: &SimplexNode, t: &[f64]) -> Result<bool> {
    Ok(barycentric(node, t)?.iter().all(|&w| w >= -1e-10))
}

/// Volume from the Cayley–Menger determinant of the vertex distances.
///
/// The determinant is evaluated in exact rational arithmetic; in floating
/// point it loses most of its digits on thin simplices.
pub fn volume(node: &SimplexNode) -> Result<f64> {
    let pts: Vec<Vec<BigRational>> = node
        .points()
        .map(|p| {
            p.iter()
                .map(|&v| BigRational::from_float(v).expect("vertex coordinates are finite"))
                .collect()
        })
        .collect();
    let k = pts.len();
    let d = k - 1;
    let mut cm = vec![vec![BigRational::zero(); k + 1]; k + 1];
    for i in 0..k {
        cm[0][i + 1] = BigRational::one();
        cm[i + 1][0] = BigRational::one();
        for j in i + 1..k {
            let sq = pts[i]
                .iter()
                .zip(&pts[j])
                .map(|(a, b)| (a - b) * (a - b))
                .fold(BigRational::zero(), |acc, v| acc + v);
            cm[i + 1][j + 1] = sq.clone();
            cm[j + 1][i + 1] = sq;
        }
    }
    let mut det = rational_determinant(cm);
    if d.is_multiple_of(2) {
        det = -det;
    }
    let factorial: BigRational = (1..=d as i64).map(|v| BigRational::from_integer(v.into())).product();
    let scaled = (det / (BigRational::from_integer((1i64 << d).into()) * &factorial * &factorial))
        .to_f64()
        .unwrap_or(f64::NAN);
    if !(scaled >= -1e-12) {
        return Err(GlmpError::Numerical(format!(
            "Cayley-Menger determinant of node {} is negative ({scaled})",
            node.id
        )));
    }
    Ok(scaled.max(0.0).sqrt())
}

/// Gaussian elimination over the rationals.
#[allow(clippy::needless_range_loop)]
fn rational_determinant(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= &m[c][c];
        for r in c + 1..n {
            if m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &m[c][c];
            for cc in c..n {
                let delta = &f * &m[c][cc];
                m[r][cc] -= delta;
            }
        }
    }
    det
}
