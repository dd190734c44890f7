//! ℓ₁ minimization under an ℓ₂ residual ball, by ADMM.
//!
//! The problem `min ‖z‖₁ s.t. ‖A x − b‖₂ ≤ ε, x = z` is split with a second
//! copy `w = A x − b` of the residual:
//!
//! ```text
//! min ‖z‖₁ + I{‖w‖₂ ≤ ε}   s.t.   x − z = 0,   A x − b − w = 0
//! ```
//!
//! Each iteration solves `(I + AᵀA) x = (z − u) + Aᵀ(b + w − v)`, soft-thresholds
//! for `z`, projects onto the ball for `w` and updates the scaled duals `u, v`.
//! The x-system does not involve the penalty, so it is factored once (through
//! the m×m matrix `I + AAᵀ`) and the penalty can be rebalanced freely.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{Method, RecoveryResult, SignConstraint, SolveStatus};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    /// Absolute tolerance on the primal and dual residual norms.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial penalty parameter.
    pub rho: f64,
    /// Residual balancing of the penalty during the first `adapt_iters` iterations.
    pub adaptive_rho: bool,
    pub adapt_iters: usize,
    pub sign: SignConstraint,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: 20_000,
            rho: 1.0,
            adaptive_rho: true,
            adapt_iters: 2_000,
            sign: SignConstraint::Free,
        }
    }
}

fn soft_threshold(v: f64, t: f64, sign: SignConstraint) -> f64 {
    match sign {
        SignConstraint::Free => v.signum() * (v.abs() - t).max(0.0),
        SignConstraint::Nonnegative => (v - t).max(0.0),
    }
}

fn project_ball(v: &mut DVector<f64>, radius: f64) {
    let norm = v.norm();
    if norm > radius {
        *v *= radius / norm;
    }
}

pub fn solve_bpdn_2(qa: &DMatrix<f64>, qy: &DVector<f64>, epsilon: f64, opts: &AdmmOptions) -> Result<RecoveryResult> {
    let started = Instant::now();
    let (m, n) = qa.shape();
    if qy.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {m} rows but measurement vector has {} entries",
            qy.len()
        )));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be finite and nonnegative, got {epsilon}")));
    }
    if !(opts.rho > 0.0 && opts.tol > 0.0) {
        return Err(Error::InvalidArgument("ADMM penalty and tolerance must be positive".into()));
    }

    let done = |x_hat: DVector<f64>, status, iterations| RecoveryResult {
        x_hat,
        method: Method::Bpdn2,
        status,
        iterations,
        wall_time: started.elapsed(),
    };

    // origin feasible: it is the unique minimizer
    if qy.norm() <= epsilon {
        return Ok(done(DVector::zeros(n), SolveStatus::Optimal, 0));
    }

    // (I + AᵀA)⁻¹ r = r − Aᵀ (I + AAᵀ)⁻¹ A r
    let inner = DMatrix::identity(m, m) + qa * qa.transpose();
    let chol = inner
        .cholesky()
        .ok_or_else(|| Error::Numerical("I + AAᵀ is not positive definite".into()))?;
    let solve_x = |r: &DVector<f64>| -> DVector<f64> {
        let t = chol.solve(&(qa * r));
        r - qa.tr_mul(&t)
    };

    let mut rho = opts.rho;
    let mut z = DVector::zeros(n);
    let mut w = -qy.clone();
    project_ball(&mut w, epsilon);
    let mut u = DVector::zeros(n);
    let mut v = DVector::zeros(m);

    for iter in 1..=opts.max_iters {
        let rhs = &z - &u + qa.tr_mul(&(qy + &w - &v));
        let x = solve_x(&rhs);

        let z_old = z.clone();
        let shrink = 1.0 / rho;
        z = (&x + &u).map(|e| soft_threshold(e, shrink, opts.sign));

        let ax = qa * &x;
        let w_old = w.clone();
        w = &ax - qy + &v;
        project_ball(&mut w, epsilon);

        let r_x = &x - &z;
        let r_w = &ax - qy - &w;
        u += &r_x;
        v += &r_w;

        let primal = (r_x.norm_squared() + r_w.norm_squared()).sqrt();
        let dual = rho * ((&z - &z_old) + qa.tr_mul(&(&w - &w_old))).norm();
        if primal <= opts.tol && dual <= opts.tol {
            return Ok(done(z, SolveStatus::Converged, iter));
        }

        if opts.adaptive_rho && iter <= opts.adapt_iters && iter % 10 == 0 {
            let scale = if primal > 10.0 * dual {
                2.0
            } else if dual > 10.0 * primal {
                0.5
            } else {
                1.0
            };
            if scale != 1.0 {
                rho *= scale;
                // scaled duals are y/ρ
                u /= scale;
                v /= scale;
            }
        }
    }
    Ok(done(z, SolveStatus::NonConverged, opts.max_iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::generate_unquantized;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Lasso `½‖Ax − b‖² + λ‖x‖₁` by cyclic coordinate descent.
    fn lasso(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let n = a.ncols();
        let mut x: DVector<f64> = DVector::zeros(n);
        let mut res = b.clone();
        for _ in 0..200_000 {
            let mut moved = 0.0f64;
            for j in 0..n {
                let col = a.column(j);
                let sq = col.norm_squared();
                let rho = col.dot(&res) + sq * x[j];
                let new = rho.signum() * (rho.abs() - lambda).max(0.0) / sq;
                let d = new - x[j];
                if d != 0.0 {
                    res.axpy(-d, &col, 1.0);
                    x[j] = new;
                    moved = moved.max(d.abs());
                }
            }
            if moved < 1e-14 {
                break;
            }
        }
        x
    }

    /// min ‖x‖₁ s.t. ‖Ax − b‖₂ ≤ ε via the lasso path: the residual grows with λ,
    /// and the constrained minimum sits where it reaches ε.
    fn ball_l1_oracle(a: &DMatrix<f64>, b: &DVector<f64>, eps: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, a.tr_mul(b).amax());
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let x = lasso(a, b, mid);
            if (a * &x - b).norm() > eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lasso(a, b, lo).lp_norm(1)
    }

    #[test]
    fn origin_when_ball_contains_measurements() {
        let qa = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.0, 1.0]);
        let qy = DVector::from_vec(vec![0.3, 0.4]);
        let r = solve_bpdn_2(&qa, &qy, 0.5, &AdmmOptions::default()).unwrap();
        assert!(r.x_hat.iter().all(|&v| v == 0.0));
        assert!(r.status.is_success());
    }

    #[test]
    fn identity_system_exact() {
        let qa = DMatrix::identity(4, 4);
        let qy = DVector::from_vec(vec![1.0, -2.0, 0.0, 0.5]);
        let r = solve_bpdn_2(&qa, &qy, 0.0, &AdmmOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((&r.x_hat - &qy).amax() < 1e-6);
    }

    #[test]
    fn residual_within_ball() {
        let p = generate_unquantized(60, 25, 4, 10.0, 3).unwrap();
        let eps = 0.2;
        let r = solve_bpdn_2(&p.a, &p.y, eps, &AdmmOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged, "{} iterations", r.iterations);
        assert!((&p.a * &r.x_hat - &p.y).norm() <= eps + 1e-6);
    }

    #[test]
    fn nonneg_variant() {
        let qa = DMatrix::identity(3, 3);
        let qy = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let opts = AdmmOptions {
            sign: SignConstraint::Nonnegative,
            ..AdmmOptions::default()
        };
        let r = solve_bpdn_2(&qa, &qy, 2.5, &opts).unwrap();
        assert!(r.x_hat.iter().all(|&v| v >= 0.0));
        assert!((&qa * &r.x_hat - &qy).norm() <= 2.5 + 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        let qa = DMatrix::identity(2, 2);
        assert!(solve_bpdn_2(&qa, &DVector::zeros(3), 0.1, &AdmmOptions::default()).is_err());
        assert!(solve_bpdn_2(&qa, &DVector::zeros(2), -0.1, &AdmmOptions::default()).is_err());
    }

    #[test]
    fn small_instances_match_lasso_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..25 {
            let m = rng.random_range(2..=4);
            let n = rng.random_range(m..=6);
            let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
            let b = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
            let eps = rng.random_range(0.05..0.8) * b.norm();
            let expected = ball_l1_oracle(&a, &b, eps);
            let r = solve_bpdn_2(&a, &b, eps, &AdmmOptions::default()).unwrap();
            assert!(r.status.is_success(), "case {case}");
            let got = r.x_hat.lp_norm(1);
            assert!((got - expected).abs() <= 1e-4, "case {case}: {got} vs {expected}");
            assert!((&a * &r.x_hat - &b).norm() <= eps + 1e-5, "case {case}");
        }
    }
}
