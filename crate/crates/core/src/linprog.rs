//! Dense two-phase primal simplex.
//!
//! Solves `min gᵀx  s.t.  Ax ≤ b,  lower ≤ x ≤ upper` where either bound may
//! be absent. Variables are shifted, reflected or split so that every column
//! of the working tableau is nonnegative, each inequality row receives a slack,
//! and rows with a negative right-hand side receive an artificial variable for
//! phase one.
//!
//! Pricing is Dantzig (most negative reduced cost) until the run has made
//! `3(m + n)` degenerate pivots, after which it switches permanently to Bland's
//! rule. Every tie is broken toward the lowest index, so identical inputs give
//! bit-identical outputs.

use thiserror::Error;

/// Tolerances shared by every LP solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpTolerances {
    /// Primal feasibility and pivot-element tolerance.
    pub feasibility: f64,
    /// Reduced-cost tolerance.
    pub optimality: f64,
    /// Phase-one objective above this means the region is empty.
    pub infeasibility: f64,
}

pub const TOLERANCES: LpTolerances = LpTolerances {
    feasibility: 1e-9,
    optimality: 1e-9,
    infeasibility: 1e-7,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("LP dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable {index} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { index: usize, lower: f64, upper: f64 },
    #[error("non-finite LP data: {0}")]
    NonFinite(&'static str),
    #[error("simplex stalled after {pivots} pivots")]
    Stalled { pivots: usize },
}

/// `min gᵀx` subject to `Ax ≤ b` and optional variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub g: Vec<f64>,
    /// Row-major constraint rows.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl LpProblem {
    pub fn new(g: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        Self {
            g,
            a,
            b,
            lower: None,
            upper: None,
        }
    }

    pub fn with_lower(mut self, lower: Vec<f64>) -> Self {
        self.lower = Some(lower);
        self
    }

    pub fn with_upper(mut self, upper: Vec<f64>) -> Self {
        self.upper = Some(upper);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.g.len()
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.g.len();
        if self.a.len() != self.b.len() {
            return Err(LpError::Dimension(format!(
                "{} constraint rows but {} right-hand sides",
                self.a.len(),
                self.b.len()
            )));
        }
        if let Some((i, row)) = self.a.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(LpError::Dimension(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        for (name, bounds) in [("lower", &self.lower), ("upper", &self.upper)] {
            if let Some(v) = bounds {
                if v.len() != n {
                    return Err(LpError::Dimension(format!(
                        "{name} bounds have {} entries, expected {n}",
                        v.len()
                    )));
                }
            }
        }
        if self.g.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if self.b.iter().any(|v| !v.is_finite()) || self.a.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(LpError::NonFinite("constraints"));
        }
        if let (Some(lo), Some(up)) = (&self.lower, &self.upper) {
            for (index, (&lower, &upper)) in lo.iter().zip(up).enumerate() {
                if lower > upper {
                    return Err(LpError::InvertedBounds {
                        index,
                        lower,
                        upper,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = shift + col
    Shifted { col: usize, shift: f64 },
    /// x = shift - col
    Reflected { col: usize, shift: f64 },
    /// x = plus - minus
    Split { plus: usize, minus: usize },
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `(rows + 1) × (cols + 1)`, row-major. The last row holds reduced costs,
    /// the last column the right-hand side.
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let inv = 1.0 / self.data[pr * w + pc];
        for c in 0..w {
            self.data[pr * w + c] *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (dst, &src) in row.iter_mut().zip(&pivot_row) {
                *dst -= factor * src;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Rewrites the objective row for cost vector `cost` under the current basis.
    fn price_out(&mut self, cost: &[f64]) {
        let w = self.cols + 1;
        let obj = self.rows * w;
        self.data[obj..obj + self.cols].copy_from_slice(&cost[..self.cols]);
        self.data[obj + self.cols] = 0.0;
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for c in 0..w {
                self.data[obj + c] -= cb * self.data[r * w + c];
            }
        }
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

struct Pivoter {
    degenerate: usize,
    bland_after: usize,
    pivots: usize,
    cap: usize,
}

impl Pivoter {
    fn run(&mut self, t: &mut Tableau, allowed: &[bool]) -> Result<PhaseOutcome, LpError> {
        let tol = TOLERANCES;
        loop {
            let bland = self.degenerate >= self.bland_after;
            let obj = t.rows;
            let mut entering = None;
            let mut best = -tol.optimality;
            for c in (0..t.cols).filter(|&c| allowed[c]) {
                let d = t.at(obj, c);
                if d < best {
                    entering = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..t.rows {
                let a = t.at(r, pc);
                if a <= tol.feasibility {
                    continue;
                }
                let ratio = t.rhs(r).max(0.0) / a;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        if (!tie && ratio < lratio) || (tie && t.basis[r] < t.basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((pr, ratio)) = leaving else {
                return Ok(PhaseOutcome::Unbounded);
            };
            if self.pivots >= self.cap {
                return Err(LpError::Stalled {
                    pivots: self.pivots,
                });
            }
            if ratio <= tol.feasibility {
                self.degenerate += 1;
            }
            t.pivot(pr, pc);
            self.pivots += 1;
        }
    }
}

/// Solves a linear program with the two-phase primal simplex method.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.check()?;
    let tol = TOLERANCES;
    let n = problem.num_vars();

    // Map original variables onto nonnegative columns; finite upper bounds on
    // shifted variables become extra rows.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for i in 0..n {
        let lo = problem.lower.as_ref().map(|v| v[i]).filter(|v| v.is_finite());
        let up = problem.upper.as_ref().map(|v| v[i]).filter(|v| v.is_finite());
        let map = match (lo, up) {
            (Some(l), u) => {
                let col = ncols;
                ncols += 1;
                if let Some(u) = u {
                    bound_rows.push((col, u - l));
                }
                VarMap::Shifted { col, shift: l }
            }
            (None, Some(u)) => {
                let col = ncols;
                ncols += 1;
                VarMap::Reflected { col, shift: u }
            }
            (None, None) => {
                let plus = ncols;
                ncols += 2;
                VarMap::Split {
                    plus,
                    minus: plus + 1,
                }
            }
        };
        maps.push(map);
    }

    // Constraint rows over the structural columns.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(problem.a.len() + bound_rows.len());
    for (arow, &bi) in problem.a.iter().zip(&problem.b) {
        let mut row = vec![0.0; ncols];
        let mut rhs = bi;
        for (i, &aij) in arow.iter().enumerate() {
            if aij == 0.0 {
                continue;
            }
            match maps[i] {
                VarMap::Shifted { col, shift } => {
                    row[col] += aij;
                    rhs -= aij * shift;
                }
                VarMap::Reflected { col, shift } => {
                    row[col] -= aij;
                    rhs -= aij * shift;
                }
                VarMap::Split { plus, minus } => {
                    row[plus] += aij;
                    row[minus] -= aij;
                }
            }
        }
        rows.push((row, rhs));
    }
    for &(col, width) in &bound_rows {
        let mut row = vec![0.0; ncols];
        row[col] = 1.0;
        rows.push((row, width));
    }

    let mut cost = vec![0.0; ncols];
    for (i, &gi) in problem.g.iter().enumerate() {
        match maps[i] {
            VarMap::Shifted { col, .. } => cost[col] += gi,
            VarMap::Reflected { col, .. } => cost[col] -= gi,
            VarMap::Split { plus, minus } => {
                cost[plus] += gi;
                cost[minus] -= gi;
            }
        }
    }

    let m = rows.len();
    let negative: Vec<bool> = rows.iter().map(|(_, rhs)| *rhs < 0.0).collect();
    let n_art = negative.iter().filter(|&&neg| neg).count();
    let slack0 = ncols;
    let art0 = ncols + m;
    let cols = ncols + m + n_art;
    let w = cols + 1;
    let mut data = vec![0.0; (m + 1) * w];
    let mut basis = vec![0usize; m];
    let mut next_art = art0;
    for (r, (row, rhs)) in rows.iter().enumerate() {
        let sign = if negative[r] { -1.0 } else { 1.0 };
        for (c, &v) in row.iter().enumerate() {
            data[r * w + c] = sign * v;
        }
        data[r * w + slack0 + r] = sign;
        data[r * w + cols] = sign * rhs;
        if negative[r] {
            data[r * w + next_art] = 1.0;
            basis[r] = next_art;
            next_art += 1;
        } else {
            basis[r] = slack0 + r;
        }
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        data,
        basis,
    };
    let mut pivoter = Pivoter {
        degenerate: 0,
        bland_after: 3 * (m + ncols),
        pivots: 0,
        cap: 50 * (m + ncols).max(1),
    };

    if n_art > 0 {
        let mut phase1_cost = vec![0.0; cols];
        for c in phase1_cost.iter_mut().skip(art0) {
            *c = 1.0;
        }
        tab.price_out(&phase1_cost);
        let allowed = vec![true; cols];
        // Phase one is bounded below by zero, so it can only end optimal.
        pivoter.run(&mut tab, &allowed)?;
        let infeasibility = -tab.at(m, cols);
        if infeasibility > tol.infeasibility {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![f64::NAN; n],
                value: f64::NAN,
                iterations: pivoter.pivots,
            });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] < art0 {
                continue;
            }
            let col = (0..art0).find(|&c| tab.at(r, c).abs() > tol.feasibility);
            if let Some(c) = col {
                tab.pivot(r, c);
                pivoter.pivots += 1;
            }
        }
    }

    let mut phase2_cost = cost.clone();
    phase2_cost.resize(cols, 0.0);
    tab.price_out(&phase2_cost);
    let allowed: Vec<bool> = (0..cols).map(|c| c < art0).collect();
    let outcome = pivoter.run(&mut tab, &allowed)?;
    if let PhaseOutcome::Unbounded = outcome {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![f64::NAN; n],
            value: f64::NEG_INFINITY,
            iterations: pivoter.pivots,
        });
    }

    let mut col_values = vec![0.0; cols];
    for r in 0..m {
        col_values[tab.basis[r]] = tab.rhs(r).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shifted { col, shift } => shift + col_values[col],
            VarMap::Reflected { col, shift } => shift - col_values[col],
            VarMap::Split { plus, minus } => col_values[plus] - col_values[minus],
        })
        .collect();
    let value = problem.g.iter().zip(&x).map(|(g, x)| g * x).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        value,
        iterations: pivoter.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_constraint() {
        let lp = LpProblem::new(vec![1.0], vec![vec![-1.0]], vec![-2.0]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
        assert!((sol.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_facet() {
        let lp = LpProblem::new(vec![-1.0, -1.0], vec![vec![1.0, 1.0]], vec![1.0])
            .with_lower(vec![0.0, 0.0]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value + 1.0).abs() < 1e-12);
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_region() {
        let lp = LpProblem::new(vec![1.0], vec![vec![1.0]], vec![-1.0]).with_lower(vec![0.0]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let lp = LpProblem::new(vec![-1.0], vec![vec![-1.0]], vec![0.0]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_reflection() {
        // min x - y  s.t.  x ≥ -3 (as a row), y ≤ 4 (as a bound)
        let lp = LpProblem::new(vec![1.0, -1.0], vec![vec![-1.0, 0.0]], vec![3.0])
            .with_upper(vec![f64::INFINITY, 4.0]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] + 3.0).abs() < 1e-12);
        assert!((sol.x[1] - 4.0).abs() < 1e-12);
        assert!((sol.value + 7.0).abs() < 1e-12);
    }

    #[test]
    fn box_bounds_both_sides() {
        let lp = LpProblem::new(vec![2.0, -1.0], vec![], vec![])
            .with_lower(vec![-1.0, 0.5])
            .with_upper(vec![3.0, 2.5]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.x, vec![-1.0, 2.5]);
    }

    #[test]
    fn redundant_equality_pair() {
        // x + y = 1 written twice as two inequalities each; min x.
        let a = vec![
            vec![1.0, 1.0],
            vec![-1.0, -1.0],
            vec![2.0, 2.0],
            vec![-2.0, -2.0],
        ];
        let lp = LpProblem::new(vec![1.0, 0.0], a, vec![1.0, -1.0, 2.0, -2.0])
            .with_lower(vec![0.0, 0.0]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.x[0].abs() < 1e-12);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let lp = LpProblem::new(vec![1.0, 2.0], vec![vec![1.0]], vec![1.0]);
        assert!(matches!(solve_lp(&lp), Err(LpError::Dimension(_))));
        let lp = LpProblem::new(vec![1.0], vec![], vec![])
            .with_lower(vec![2.0])
            .with_upper(vec![1.0]);
        assert!(matches!(solve_lp(&lp), Err(LpError::InvertedBounds { .. })));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under naive Dantzig pricing with largest-coefficient
        // ratio ties; the Bland switch must terminate it.
        let g = vec![-0.75, 150.0, -0.02, 6.0];
        let a = vec![
            vec![0.25, -60.0, -0.04, 9.0],
            vec![0.5, -90.0, -0.02, 3.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let lp = LpProblem::new(g, a, vec![0.0, 0.0, 1.0]).with_lower(vec![0.0; 4]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value + 0.05).abs() < 1e-9);
    }
}
