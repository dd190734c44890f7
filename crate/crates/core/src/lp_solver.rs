//! Dense two-phase primal simplex for `min c·z  s.t.  G z ≤ h, z ⪰ 0`.
//!
//! Every row gets a slack variable. Rows with a negative right-hand side are
//! negated and receive an artificial variable; phase 1 minimizes the sum of
//! the artificials, phase 2 the real objective with artificials barred from
//! re-entering. Bland's rule is the default pivoting rule, which guarantees
//! termination on degenerate problems.
//!
//! Once the simplex terminates at an optimal basis, the basic variables are
//! recomputed from the original data by an LU solve of the basis system and
//! the point is checked against the constraints before it is returned.

pub mod oracle;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::lp_model::LpProblem;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PivotRule {
    /// Smallest-index entering column, smallest-index leaving variable.
    Bland,
    /// Most negative reduced cost. Falls back to Bland after a long run of
    /// degenerate pivots.
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Absolute tolerance on constraint residuals of the returned point.
    pub feas_tol: f64,
    /// Entries and reduced costs below this magnitude are treated as zero.
    pub pivot_tol: f64,
    /// Pivot budget; `None` means `50·(num_vars + num_rows)`.
    pub max_iters: Option<usize>,
    pub pivot_rule: PivotRule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            pivot_tol: 1e-10,
            max_iters: None,
            pivot_rule: PivotRule::Bland,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Meaningful only when `status == Optimal`.
    pub z: DVector<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(p: &LpProblem, opts: &SolverOptions) -> Result<LpSolution> {
    if !p.nonneg {
        return Err(Error::InvalidArgument(
            "solver requires nonnegative variables; split signed variables first".into(),
        ));
    }
    if p.g.shape() != (p.h.len(), p.num_vars) || p.objective.len() != p.num_vars {
        return Err(Error::DimensionMismatch(format!(
            "G is {:?}, h has {} entries, objective has {} for {} variables",
            p.g.shape(),
            p.h.len(),
            p.objective.len(),
            p.num_vars
        )));
    }
    if p.g.iter().chain(p.h.iter()).chain(p.objective.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("LP data contains non-finite values".into()));
    }

    let max_iters = opts.max_iters.unwrap_or(50 * (p.num_vars + p.num_rows()).max(1));
    let mut t = Tableau::new(p);
    let mut iterations = 0;

    // phase 1
    if t.num_art > 0 {
        let mut cost = vec![0.0; t.cols];
        for c in cost.iter_mut().skip(t.art_start) {
            *c = 1.0;
        }
        t.set_costs(&cost);
        match t.run(t.cols, opts, max_iters, &mut iterations) {
            Outcome::Optimal => {}
            Outcome::IterationLimit => return Ok(t.solution(p, LpStatus::IterationLimit, iterations)),
            // phase 1 is bounded below by zero
            Outcome::Unbounded => return Err(Error::Numerical("unbounded phase-1 problem".into())),
        }
        if t.objective_value(&cost) > opts.feas_tol {
            return Ok(t.solution(p, LpStatus::Infeasible, iterations));
        }
        t.drive_out_artificials(opts.pivot_tol, &mut iterations);
    }

    // phase 2
    let mut cost = vec![0.0; t.cols];
    cost[..p.num_vars].copy_from_slice(p.objective.as_slice());
    t.set_costs(&cost);
    let status = match t.run(t.art_start, opts, max_iters, &mut iterations) {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterationLimit => LpStatus::IterationLimit,
    };
    if status != LpStatus::Optimal {
        return Ok(t.solution(p, status, iterations));
    }

    t.refine(p);
    let sol = t.solution(p, status, iterations);
    let violation = p.max_violation(&sol.z);
    if violation > opts.feas_tol {
        return Err(Error::Numerical(format!(
            "optimal point violates constraints by {violation:e} (tolerance {:e})",
            opts.feas_tol
        )));
    }
    Ok(sol)
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    rows: usize,
    cols: usize,
    num_vars: usize,
    art_start: usize,
    num_art: usize,
    /// +1 or −1: the sign each original row was multiplied by.
    row_sign: Vec<f64>,
    /// row-major `rows × cols`
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
}

impl Tableau {
    fn new(p: &LpProblem) -> Self {
        let rows = p.num_rows();
        let nv = p.num_vars;
        let row_sign: Vec<f64> = p.h.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let num_art = row_sign.iter().filter(|&&s| s < 0.0).count();
        let art_start = nv + rows;
        let cols = art_start + num_art;

        let mut a = vec![0.0; rows * cols];
        let mut rhs = vec![0.0; rows];
        let mut basis = vec![0; rows];
        let mut next_art = art_start;
        for i in 0..rows {
            let s = row_sign[i];
            let row = &mut a[i * cols..(i + 1) * cols];
            for j in 0..nv {
                row[j] = s * p.g[(i, j)];
            }
            row[nv + i] = s;
            rhs[i] = s * p.h[i];
            if s < 0.0 {
                row[next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            } else {
                basis[i] = nv + i;
            }
        }
        Self {
            rows,
            cols,
            num_vars: nv,
            art_start,
            num_art,
            row_sign,
            a,
            rhs,
            basis,
            reduced: vec![0.0; cols],
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    /// Reduced costs `c_j − c_Bᵀ B⁻¹ a_j` for the current basis.
    fn set_costs(&mut self, cost: &[f64]) {
        self.reduced.copy_from_slice(cost);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * self.cols..(i + 1) * self.cols];
            for (d, &v) in self.reduced.iter_mut().zip(row) {
                *d -= cb * v;
            }
        }
        for &b in &self.basis {
            self.reduced[b] = 0.0;
        }
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis.iter().zip(&self.rhs).map(|(&b, &v)| cost[b] * v).sum()
    }

    /// Simplex iterations over entering candidates `0..limit`.
    fn run(&mut self, limit: usize, opts: &SolverOptions, max_iters: usize, iterations: &mut usize) -> Outcome {
        let mut degenerate_run = 0usize;
        loop {
            let use_bland = match opts.pivot_rule {
                PivotRule::Bland => true,
                PivotRule::Dantzig => degenerate_run > self.cols,
            };
            let Some(col) = self.entering(limit, opts.pivot_tol, use_bland) else {
                return Outcome::Optimal;
            };
            let Some(row) = self.leaving(col, opts.pivot_tol, use_bland) else {
                return Outcome::Unbounded;
            };
            if *iterations >= max_iters {
                return Outcome::IterationLimit;
            }
            if self.rhs[row] <= opts.pivot_tol {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, col);
            *iterations += 1;
        }
    }

    fn entering(&self, limit: usize, tol: f64, bland: bool) -> Option<usize> {
        let candidates = self.reduced[..limit].iter().enumerate().filter(|(_, &d)| d < -tol);
        if bland {
            candidates.map(|(j, _)| j).next()
        } else {
            candidates
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(a.0.cmp(&b.0)))
                .map(|(j, _)| j)
        }
    }

    /// Minimum-ratio row. Near-ties go to the smallest basic variable index
    /// under Bland's rule and to the smallest row index otherwise.
    fn leaving(&self, col: usize, tol: f64, bland: bool) -> Option<usize> {
        let mut best = f64::INFINITY;
        for i in 0..self.rows {
            let v = self.at(i, col);
            if v > tol {
                best = best.min(self.rhs[i].max(0.0) / v);
            }
        }
        if !best.is_finite() {
            return None;
        }
        let slack = 1e-12 * (1.0 + best);
        let ties = (0..self.rows).filter(|&i| {
            let v = self.at(i, col);
            v > tol && self.rhs[i].max(0.0) / v <= best + slack
        });
        if bland {
            ties.min_by_key(|&i| self.basis[i])
        } else {
            ties.min()
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let cols = self.cols;
        let inv = 1.0 / self.at(row, col);
        {
            let pr = &mut self.a[row * cols..(row + 1) * cols];
            for v in pr.iter_mut() {
                *v *= inv;
            }
            pr[col] = 1.0;
        }
        self.rhs[row] *= inv;

        let pivot_row = self.a[row * cols..(row + 1) * cols].to_vec();
        let pivot_rhs = self.rhs[row];
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let factor = self.a[i * cols + col];
            if factor == 0.0 {
                continue;
            }
            let r = &mut self.a[i * cols..(i + 1) * cols];
            for (v, &p) in r.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            r[col] = 0.0;
            self.rhs[i] -= factor * pivot_rhs;
        }
        let factor = self.reduced[col];
        if factor != 0.0 {
            for (d, &p) in self.reduced.iter_mut().zip(&pivot_row) {
                *d -= factor * p;
            }
            self.reduced[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Pivot zero-level artificials out of the basis. Rows whose non-artificial
    /// entries are all zero are redundant and keep their artificial.
    fn drive_out_artificials(&mut self, tol: f64, iterations: &mut usize) {
        for i in 0..self.rows {
            if self.basis[i] < self.art_start {
                continue;
            }
            let best = (0..self.art_start)
                .filter(|j| !self.basis.contains(j))
                .map(|j| (j, self.at(i, j).abs()))
                .filter(|&(_, v)| v > tol)
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)));
            if let Some((j, _)) = best {
                self.pivot(i, j);
                *iterations += 1;
            }
        }
    }

    /// Recompute basic values from the original data: solve `B x_B = s∘h`.
    fn refine(&mut self, p: &LpProblem) {
        let rows = self.rows;
        if rows == 0 {
            return;
        }
        let mut b = DMatrix::zeros(rows, rows);
        let mut art_of_row = vec![usize::MAX; self.num_art];
        let mut next = 0;
        for (i, &s) in self.row_sign.iter().enumerate() {
            if s < 0.0 {
                art_of_row[next] = i;
                next += 1;
            }
        }
        for (k, &var) in self.basis.iter().enumerate() {
            for i in 0..rows {
                b[(i, k)] = if var < self.num_vars {
                    self.row_sign[i] * p.g[(i, var)]
                } else if var < self.art_start {
                    if var - self.num_vars == i { self.row_sign[i] } else { 0.0 }
                } else if art_of_row[var - self.art_start] == i {
                    1.0
                } else {
                    0.0
                };
            }
        }
        let rhs = DVector::from_fn(rows, |i, _| self.row_sign[i] * p.h[i]);
        if let Some(x) = b.lu().solve(&rhs) {
            if x.iter().all(|v| v.is_finite()) {
                self.rhs.copy_from_slice(x.as_slice());
            }
        }
    }

    fn solution(&self, p: &LpProblem, status: LpStatus, iterations: usize) -> LpSolution {
        let mut z = DVector::zeros(self.num_vars);
        for (&var, &v) in self.basis.iter().zip(&self.rhs) {
            if var < self.num_vars {
                z[var] = v;
            }
        }
        let objective_value = p.objective.dot(&z);
        LpSolution {
            status,
            z,
            objective_value,
            iterations,
        }
    }
}
