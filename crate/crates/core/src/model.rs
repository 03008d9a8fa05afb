//! Problem data for generalized linear multiplicative programs
//!
//! ```text
//! min h(x) = Π_j (c_jᵀx + d_j)^α_j   s.t.  Ax ≤ b
//! ```
//!
//! together with validation of the standing assumptions (nonempty bounded
//! feasible region, strictly positive affine terms) and the sign partition of
//! the exponents.

use serde::{Deserialize, Serialize};

use crate::error::{GlmpError, Result};
use crate::linprog::{solve_lp, LpProblem, LpStatus};

/// Default positivity margin for `min_x c_jᵀx + d_j`.
pub const DEFAULT_DELTA_POS: f64 = 1e-9;

/// One affine factor `(cᵀx + d)^alpha` of the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub c: Vec<f64>,
    pub d: f64,
    pub alpha: f64,
}

impl Term {
    #[inline]
    pub fn base(&self, x: &[f64]) -> f64 {
        dot(&self.c, x) + self.d
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// On-disk layout of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawInstance {
    name: String,
    n: usize,
    m: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    terms: Vec<Term>,
}

/// A dimensionally consistent GLMP instance.
///
/// Construction checks shapes and nonzero exponents only; the polyhedral
/// assumptions need LPs and are checked by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct GlmpInstance {
    name: String,
    n: usize,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    terms: Vec<Term>,
}

impl TryFrom<RawInstance> for GlmpInstance {
    type Error = GlmpError;

    fn try_from(raw: RawInstance) -> Result<Self> {
        if raw.a.len() != raw.m {
            return Err(GlmpError::Dimension(format!(
                "field \"A\" has {} rows but \"m\" is {}",
                raw.a.len(),
                raw.m
            )));
        }
        GlmpInstance::new(raw.name, raw.n, raw.a, raw.b, raw.terms)
    }
}

impl From<GlmpInstance> for RawInstance {
    fn from(inst: GlmpInstance) -> Self {
        RawInstance {
            m: inst.a.len(),
            name: inst.name,
            n: inst.n,
            a: inst.a,
            b: inst.b,
            terms: inst.terms,
        }
    }
}

impl GlmpInstance {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        terms: Vec<Term>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(GlmpError::Dimension("n must be at least 1".into()));
        }
        if a.len() != b.len() {
            return Err(GlmpError::Dimension(format!(
                "field \"b\" has {} entries but \"A\" has {} rows",
                b.len(),
                a.len()
            )));
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != n {
                return Err(GlmpError::Dimension(format!(
                    "row {i} of \"A\" has {} entries, expected n = {n}",
                    row.len()
                )));
            }
        }
        if terms.is_empty() {
            return Err(GlmpError::Dimension(
                "field \"terms\" must contain at least one term".into(),
            ));
        }
        for (j, term) in terms.iter().enumerate() {
            if term.c.len() != n {
                return Err(GlmpError::Dimension(format!(
                    "term {j} has |c| = {}, expected n = {n}",
                    term.c.len()
                )));
            }
            if term.alpha == 0.0 {
                return Err(GlmpError::ZeroExponent { index: j });
            }
        }
        let finite = a.iter().flatten().chain(&b).all(|v| v.is_finite())
            && terms
                .iter()
                .all(|t| t.d.is_finite() && t.alpha.is_finite() && t.c.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(GlmpError::InvalidArgument(
                "instance data must be finite".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            n,
            a,
            b,
            terms,
        })
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.a.len()
    }
    pub fn p(&self) -> usize {
        self.terms.len()
    }
    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// LP over the feasible region with objective `g`.
    pub fn lp(&self, g: Vec<f64>) -> LpProblem {
        LpProblem::new(g, self.a.clone(), self.b.clone())
    }

    /// Largest violation of `Ax ≤ b` at `x` (zero when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, &bi)| dot(row, x) - bi)
            .fold(0.0, f64::max)
    }

    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|t| t.alpha)
    }
}

/// Sign split of the exponents. Indices refer to the instance's term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPartition {
    pub j_plus: Vec<usize>,
    pub j_minus: Vec<usize>,
}

impl IndexPartition {
    pub fn p_bar(&self) -> usize {
        self.j_plus.len()
    }
}

pub fn partition_terms(instance: &GlmpInstance) -> Result<IndexPartition> {
    let mut j_plus = Vec::new();
    let mut j_minus = Vec::new();
    for (j, term) in instance.terms.iter().enumerate() {
        if term.alpha > 0.0 {
            j_plus.push(j);
        } else if term.alpha < 0.0 {
            j_minus.push(j);
        } else {
            return Err(GlmpError::ZeroExponent { index: j });
        }
    }
    Ok(IndexPartition { j_plus, j_minus })
}

/// Outcome of checking the modelling assumptions with LPs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub feasible: bool,
    pub bounded: bool,
    pub term_minimums: Vec<f64>,
    pub term_maximums: Vec<f64>,
    /// Coordinate-wise bounding box of the feasible region.
    pub coord_lower: Vec<f64>,
    pub coord_upper: Vec<f64>,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.is_valid() {
            Ok(self)
        } else {
            Err(GlmpError::Validation(self.violations))
        }
    }
}

enum Extreme {
    Value(f64),
    Infeasible,
    Unbounded,
}

fn extreme(instance: &GlmpInstance, g: Vec<f64>) -> Result<Extreme> {
    let sol = solve_lp(&instance.lp(g))?;
    Ok(match sol.status {
        LpStatus::Optimal => Extreme::Value(sol.value),
        LpStatus::Infeasible => Extreme::Infeasible,
        LpStatus::Unbounded => Extreme::Unbounded,
    })
}

/// Certifies nonemptiness, boundedness and term positivity with `2n + 2p` LPs.
///
/// LP statuses are folded into the report; only solver failures are errors.
pub fn validate(instance: &GlmpInstance, delta_pos: f64) -> Result<ValidationReport> {
    if !(delta_pos > 0.0) {
        return Err(GlmpError::InvalidArgument(format!(
            "delta_pos must be positive, got {delta_pos}"
        )));
    }
    let n = instance.n;
    let p = instance.p();
    let mut report = ValidationReport {
        feasible: true,
        bounded: true,
        term_minimums: vec![f64::NAN; p],
        term_maximums: vec![f64::NAN; p],
        coord_lower: vec![f64::NAN; n],
        coord_upper: vec![f64::NAN; n],
        violations: Vec::new(),
    };

    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut g = vec![0.0; n];
            g[i] = sign;
            match extreme(instance, g)? {
                Extreme::Infeasible => {
                    report.feasible = false;
                    report.bounded = false;
                    report
                        .violations
                        .push("feasible region {x : Ax <= b} is empty".to_string());
                    return Ok(report);
                }
                Extreme::Unbounded => {
                    report.bounded = false;
                    if sign > 0.0 {
                        report.coord_lower[i] = f64::NEG_INFINITY;
                    } else {
                        report.coord_upper[i] = f64::INFINITY;
                    }
                    report.violations.push(format!(
                        "feasible region is unbounded along {}x_{i}",
                        if sign > 0.0 { "-" } else { "+" }
                    ));
                }
                Extreme::Value(v) => {
                    if sign > 0.0 {
                        report.coord_lower[i] = v;
                    } else {
                        report.coord_upper[i] = -v;
                    }
                }
            }
        }
    }

    for (j, term) in instance.terms.iter().enumerate() {
        match extreme(instance, term.c.clone())? {
            Extreme::Value(v) => {
                let min = v + term.d;
                report.term_minimums[j] = min;
                if !(min >= delta_pos) {
                    report.violations.push(format!(
                        "term {j}: min over X of c^T x + d = {min} is below the positivity margin {delta_pos}"
                    ));
                }
            }
            Extreme::Unbounded => {
                report.term_minimums[j] = f64::NEG_INFINITY;
                report
                    .violations
                    .push(format!("term {j}: c^T x + d is unbounded below over X"));
            }
            Extreme::Infeasible => unreachable!("feasibility already certified"),
        }
        let neg: Vec<f64> = term.c.iter().map(|v| -v).collect();
        match extreme(instance, neg)? {
            Extreme::Value(v) => report.term_maximums[j] = term.d - v,
            Extreme::Unbounded => report.term_maximums[j] = f64::INFINITY,
            Extreme::Infeasible => unreachable!("feasibility already certified"),
        }
    }
    Ok(report)
}

fn checked_bases(instance: &GlmpInstance, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != instance.n {
        return Err(GlmpError::Dimension(format!(
            "point has {} coordinates, expected {}",
            x.len(),
            instance.n
        )));
    }
    instance
        .terms
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let value = t.base(x);
            if value > 0.0 {
                Ok(value)
            } else {
                Err(GlmpError::NonpositiveBase { term: j, value })
            }
        })
        .collect()
}

/// `ν(x) = Σ_j α_j ln(c_jᵀx + d_j)`.
pub fn objective_nu(instance: &GlmpInstance, x: &[f64]) -> Result<f64> {
    let bases = checked_bases(instance, x)?;
    Ok(instance
        .terms
        .iter()
        .zip(&bases)
        .map(|(t, b)| t.alpha * b.ln())
        .sum())
}

/// `h(x) = Π_j (c_jᵀx + d_j)^α_j`.
///
/// Small, well-scaled products are multiplied out directly; everything else
/// goes through `exp(ν(x))`.
pub fn objective_h(instance: &GlmpInstance, x: &[f64]) -> Result<f64> {
    let bases = checked_bases(instance, x)?;
    let direct = bases.len() <= 4 && bases.iter().all(|&b| (1e-8..=1e8).contains(&b));
    if direct {
        Ok(instance
            .terms
            .iter()
            .zip(&bases)
            .map(|(t, b)| b.powf(t.alpha))
            .product())
    } else {
        let nu: f64 = instance
            .terms
            .iter()
            .zip(&bases)
            .map(|(t, b)| t.alpha * b.ln())
            .sum();
        Ok(nu.exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(c: Vec<f64>, d: f64, alpha: f64) -> Term {
        Term { c, d, alpha }
    }

    fn unit_interval(terms: Vec<Term>) -> GlmpInstance {
        GlmpInstance::new("unit", 1, vec![vec![1.0], vec![-1.0]], vec![1.0, 0.0], terms).unwrap()
    }

    fn alphas_instance(alphas: &[f64]) -> GlmpInstance {
        let terms = alphas.iter().map(|&a| term(vec![1.0], 1.0, a)).collect();
        unit_interval(terms)
    }

    #[test]
    fn partition_examples() {
        let p = partition_terms(&alphas_instance(&[1.0, 1.0])).unwrap();
        assert_eq!((p.j_plus, p.j_minus), (vec![0, 1], vec![]));
        let p = partition_terms(&alphas_instance(&[1.0, -1.0])).unwrap();
        assert_eq!((p.j_plus.clone(), p.j_minus.clone(), p.p_bar()), (vec![0], vec![1], 1));
        let p = partition_terms(&alphas_instance(&[-0.5, -2.0])).unwrap();
        assert_eq!((p.p_bar(), p.j_minus), (0, vec![0, 1]));
    }

    #[test]
    fn zero_exponent_rejected() {
        let err = GlmpInstance::new(
            "z",
            1,
            vec![vec![1.0]],
            vec![1.0],
            vec![term(vec![1.0], 1.0, 0.0)],
        )
        .unwrap_err();
        assert_eq!(err, GlmpError::ZeroExponent { index: 0 });
    }

    #[test]
    fn dimension_errors_name_the_field() {
        let err = GlmpInstance::new("d", 2, vec![vec![1.0]], vec![1.0], vec![]).unwrap_err();
        assert!(err.to_string().contains("\"A\""));
        let err = GlmpInstance::new(
            "d",
            1,
            vec![vec![1.0]],
            vec![1.0, 2.0],
            vec![term(vec![1.0], 1.0, 1.0)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("\"b\""));
    }

    #[test]
    fn validate_box() {
        let inst = unit_interval(vec![term(vec![1.0], 1.0, 1.0)]);
        let r = validate(&inst, DEFAULT_DELTA_POS).unwrap();
        assert!(r.feasible && r.bounded && r.is_valid());
        assert!((r.term_minimums[0] - 1.0).abs() < 1e-12);
        assert!((r.term_maximums[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn validate_unbounded() {
        let inst = GlmpInstance::new(
            "ray",
            1,
            vec![vec![-1.0]],
            vec![0.0],
            vec![term(vec![1.0], 1.0, 1.0)],
        )
        .unwrap();
        let r = validate(&inst, DEFAULT_DELTA_POS).unwrap();
        assert!(r.feasible);
        assert!(!r.bounded);
        assert!(!r.is_valid());
    }

    #[test]
    fn validate_infeasible() {
        let inst = GlmpInstance::new(
            "empty",
            1,
            vec![vec![1.0], vec![-1.0]],
            vec![-1.0, 0.0],
            vec![term(vec![1.0], 1.0, 1.0)],
        )
        .unwrap();
        let r = validate(&inst, DEFAULT_DELTA_POS).unwrap();
        assert!(!r.feasible);
        assert!(matches!(r.into_result(), Err(GlmpError::Validation(_))));
    }

    #[test]
    fn validate_cut_square() {
        // {x1 + x2 ≥ 1, 0 ≤ x ≤ 1}: vertices (1,0), (0,1), (1,1).
        let inst = GlmpInstance::new(
            "cut",
            2,
            vec![
                vec![-1.0, -1.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
            ],
            vec![-1.0, 1.0, 1.0, 0.0, 0.0],
            vec![term(vec![1.0, 0.0], 1.0, 1.0)],
        )
        .unwrap();
        let vertices = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let bases: Vec<f64> = vertices.iter().map(|v| inst.terms()[0].base(v)).collect();
        let lo = bases.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = bases.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let r = validate(&inst, DEFAULT_DELTA_POS).unwrap();
        assert!(r.is_valid());
        assert!((r.term_minimums[0] - lo).abs() < 1e-12);
        assert!((r.term_maximums[0] - hi).abs() < 1e-12);
        assert_eq!((lo, hi), (1.0, 2.0));
    }

    #[test]
    fn validate_flags_nonpositive_term() {
        let inst = unit_interval(vec![term(vec![1.0], 0.0, 1.0)]);
        let r = validate(&inst, DEFAULT_DELTA_POS).unwrap();
        assert!(r.feasible && r.bounded);
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].contains("term 0"));
    }

    #[test]
    fn objective_examples() {
        let two_terms = GlmpInstance::new(
            "h",
            2,
            vec![vec![1.0, 0.0]],
            vec![1.0],
            vec![term(vec![1.0, 0.0], 1.0, 1.0), term(vec![0.0, 1.0], 1.0, 1.0)],
        )
        .unwrap();
        assert_eq!(objective_h(&two_terms, &[1.0, 0.0]).unwrap(), 2.0);
        assert_eq!(objective_h(&two_terms, &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(objective_nu(&two_terms, &[0.0, 0.0]).unwrap(), 0.0);
        assert!((objective_nu(&two_terms, &[1.0, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);

        let mixed = unit_interval(vec![
            term(vec![1.0], 1.0, 1.0),
            term(vec![-1.0], 3.0, -1.0),
        ]);
        assert!((objective_h(&mixed, &[0.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((objective_nu(&mixed, &[0.0]).unwrap() + 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_base_names_term() {
        let inst = unit_interval(vec![term(vec![1.0], 1.0, 1.0), term(vec![1.0], -1.0, 1.0)]);
        let err = objective_h(&inst, &[0.5]).unwrap_err();
        assert!(matches!(err, GlmpError::NonpositiveBase { term: 1, .. }));
        assert!(objective_nu(&inst, &[0.5]).is_err());
    }

    #[test]
    fn large_bases_use_log_route() {
        let inst = unit_interval(vec![term(vec![0.0], 1e200, 2.0), term(vec![0.0], 1e-200, 1.0)]);
        let h = objective_h(&inst, &[0.0]).unwrap();
        assert!((h / 1e200 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip_and_missing_field() {
        let inst = unit_interval(vec![term(vec![0.1], 1.0 / 3.0, -0.7)]);
        let back = GlmpInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
        let err = GlmpInstance::from_json(r#"{"name":"x","n":1,"m":0,"A":[],"b":[]}"#).unwrap_err();
        assert!(err.to_string().contains("terms"));
        let err = GlmpInstance::from_json(
            r#"{"name":"x","n":1,"m":2,"A":[[1]],"b":[1],"terms":[{"c":[1],"d":1,"alpha":1}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("\"m\""));
    }
}
