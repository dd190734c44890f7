//! Normalized iterative hard thresholding.
//!
//! `x ← H_k(x + μ Aᵀ(b − A x))` with the step `μ = ‖g_S‖² / ‖A_S g_S‖²`
//! computed on the current support `S`. When the support changes, the step
//! is halved until `μ ≤ (1 − c)‖x⁺ − x‖² / ‖A(x⁺ − x)‖²`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{Method, RecoveryResult, SolveStatus};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NihtOptions {
    /// Relative change `‖x⁺ − x‖ ≤ tol·‖x‖` at which iteration stops.
    pub tol: f64,
    pub max_iters: usize,
    /// Shrinkage constant `c` of the step acceptance test.
    pub c: f64,
    pub max_halvings: usize,
}

impl Default for NihtOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 1000,
            c: 0.01,
            max_halvings: 60,
        }
    }
}

/// Keep the `k` largest-magnitude entries; ties go to the lower index.
pub fn hard_threshold(v: &DVector<f64>, k: usize) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for j in top_k(v, k) {
        out[j] = v[j];
    }
    out
}

fn top_k(v: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    // stable sort keeps ascending index order among equal magnitudes
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
    idx.truncate(k);
    idx.retain(|&j| v[j] != 0.0);
    idx.sort_unstable();
    idx
}

fn support(v: &DVector<f64>) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, &e)| e != 0.0).map(|(j, _)| j).collect()
}

pub fn niht(qa: &DMatrix<f64>, qy: &DVector<f64>, k: usize, opts: &NihtOptions) -> Result<RecoveryResult> {
    let started = Instant::now();
    let (m, n) = qa.shape();
    if qy.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {m} rows but measurement vector has {} entries",
            qy.len()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("sparsity k={k} must be in 1..={n}")));
    }
    let done = |x_hat, status, iterations| RecoveryResult {
        x_hat,
        method: Method::Niht,
        status,
        iterations,
        wall_time: started.elapsed(),
    };

    let stall = 1e-14 * qy.norm().max(f64::MIN_POSITIVE);
    let mut x = DVector::zeros(n);
    for iter in 0..opts.max_iters {
        let residual = qy - qa * &x;
        if residual.norm() <= stall {
            return Ok(done(x, SolveStatus::Converged, iter));
        }
        let g = qa.tr_mul(&residual);
        let s = if iter == 0 { top_k(&g, k) } else { support(&x) };

        let mut g_s = DVector::zeros(n);
        for &j in &s {
            g_s[j] = g[j];
        }
        let a_gs = qa * &g_s;
        let denom = a_gs.norm_squared();
        if denom == 0.0 || g_s.norm_squared() == 0.0 {
            // stationary on the current support
            return Ok(done(x, SolveStatus::Converged, iter));
        }
        let mut mu = g_s.norm_squared() / denom;

        let mut next = hard_threshold(&(&x + mu * &g), k);
        for _ in 0..opts.max_halvings {
            if support(&next) == s {
                break;
            }
            let step = &next - &x;
            let a_step = (qa * &step).norm_squared();
            if a_step == 0.0 || mu <= (1.0 - opts.c) * step.norm_squared() / a_step {
                break;
            }
            mu /= 2.0;
            next = hard_threshold(&(&x + mu * &g), k);
        }

        let change = (&next - &x).norm();
        let scale = x.norm();
        x = next;
        if change <= opts.tol * scale {
            return Ok(done(x, SolveStatus::Converged, iter + 1));
        }
    }
    Ok(done(x, SolveStatus::NonConverged, opts.max_iters))
}
