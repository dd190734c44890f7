//! Brute-force LP oracle for tests: enumerates every basic point of the
//! polyhedron `{z : G z ≤ h, z ⪰ 0}` and every extreme ray of its recession
//! cone. Shares no code with the simplex path.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LpSolution, LpStatus};
use crate::lp_model::LpProblem;
use crate::{Error, Result};

pub const MAX_ORACLE_SIZE: usize = 12;

const FEAS_TOL: f64 = 1e-9;
const RAY_TOL: f64 = 1e-9;

pub fn enumerate_vertices_oracle(p: &LpProblem) -> Result<LpSolution> {
    let nv = p.num_vars;
    let rows = p.num_rows();
    if nv + rows > MAX_ORACLE_SIZE {
        return Err(Error::OracleTooLarge {
            vars: nv,
            rows,
            limit: MAX_ORACLE_SIZE,
        });
    }
    if !p.nonneg {
        return Err(Error::InvalidArgument("oracle expects nonnegative variables".into()));
    }

    // all constraints as a·z ≤ b: the rows of G, then −z_j ≤ 0
    let total = rows + nv;
    let mut a = DMatrix::zeros(total, nv);
    let mut b = DVector::zeros(total);
    a.rows_mut(0, rows).copy_from(&p.g);
    b.rows_mut(0, rows).copy_from(&p.h);
    for j in 0..nv {
        a[(rows + j, j)] = -1.0;
    }

    let feasible = |z: &DVector<f64>| {
        let lhs = &a * z;
        lhs.iter().zip(b.iter()).all(|(l, r)| *l <= r + FEAS_TOL * (1.0 + r.abs()))
    };

    let mut examined = 0;
    let mut best: Option<(f64, DVector<f64>)> = None;
    if nv == 0 {
        examined = 1;
        let z = DVector::zeros(0);
        if feasible(&z) {
            best = Some((0.0, z));
        }
    } else {
        for active in (0..total).combinations(nv) {
            examined += 1;
            let m = DMatrix::from_fn(nv, nv, |i, j| a[(active[i], j)]);
            let rhs = DVector::from_fn(nv, |i, _| b[active[i]]);
            let Some(z) = solve_square(m, rhs) else { continue };
            if !feasible(&z) {
                continue;
            }
            let obj = p.objective.dot(&z);
            if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                best = Some((obj, z));
            }
        }
    }

    let Some((objective_value, z)) = best else {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            z: DVector::zeros(nv),
            objective_value: f64::NAN,
            iterations: examined,
        });
    };

    // Nonempty and pointed, so unbounded iff some extreme ray d of
    // {d : G d ≤ 0, d ⪰ 0, Σd = 1} has c·d < 0.
    if nv > 0 {
        for active in (0..total).combinations(nv - 1) {
            examined += 1;
            let mut m = DMatrix::zeros(nv, nv);
            let mut rhs = DVector::zeros(nv);
            for (i, &c) in active.iter().enumerate() {
                m.row_mut(i).copy_from(&a.row(c));
            }
            m.row_mut(nv - 1).fill(1.0);
            rhs[nv - 1] = 1.0;
            let Some(d) = solve_square(m, rhs) else { continue };
            let lhs = &a * &d;
            if lhs.iter().all(|&v| v <= FEAS_TOL) && p.objective.dot(&d) < -RAY_TOL {
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    z,
                    objective_value: f64::NEG_INFINITY,
                    iterations: examined,
                });
            }
        }
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        z,
        objective_value,
        iterations: examined,
    })
}

fn solve_square(m: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 || sv.min() < 1e-10 * max {
        return None;
    }
    m.full_piv_lu().solve(&rhs)
}

/// Random LP with `num_vars + rows ≤ max_size`, entries uniform in [−1, 1].
/// Roughly a third of the right-hand sides are negative, so a mix of
/// optimal, infeasible and unbounded problems comes out.
pub fn random_small_lp(seed: u64, max_size: usize) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = rng.random_range(1..max_size.min(6));
    let rows = rng.random_range(1..=(max_size - nv).min(6));
    let g = DMatrix::from_fn(rows, nv, |_, _| rng.random_range(-1.0..1.0));
    let h = DVector::from_fn(rows, |_, _| rng.random_range(-0.5..1.0));
    let objective = DVector::from_fn(nv, |_, _| rng.random_range(-1.0..1.0));
    LpProblem::new(objective, g, h, true).expect("consistent shapes")
}
