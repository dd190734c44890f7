//! Recovery methods: the quantization-aware LP and the three comparison
//! methods (ℓ∞-constrained and ℓ₂-constrained basis pursuit denoising and
//! normalized iterative hard thresholding).

mod bpdn2;
mod niht;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::lp_model::{build_bpdn_inf_lp, build_bpdn_inf_lp_nonneg, build_qcs_lp, unsplit};
use crate::lp_solver::{solve_lp, LpStatus, SolverOptions};
use crate::problem::ProblemInstance;
use crate::{Error, Result};

pub use bpdn2::{solve_bpdn_2, AdmmOptions};
pub use niht::{hard_threshold, niht, NihtOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    QcsLp,
    BpdnInf,
    #[serde(rename = "bpdn-2")]
    Bpdn2,
    Niht,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::QcsLp, Method::BpdnInf, Method::Bpdn2, Method::Niht];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::QcsLp => "qcs-lp",
            Method::BpdnInf => "bpdn-inf",
            Method::Bpdn2 => "bpdn-2",
            Method::Niht => "niht",
        }
    }

    /// Whether the method takes a residual bound, i.e. has a Setting 1/2 variant.
    pub fn uses_setting(&self) -> bool {
        matches!(self, Method::BpdnInf | Method::Bpdn2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?} (expected qcs-lp, bpdn-inf, bpdn-2 or niht)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Converged,
    NonConverged,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Converged)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Converged => "converged",
            SolveStatus::NonConverged => "non-converged",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration-limit",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<LpStatus> for SolveStatus {
    fn from(s: LpStatus) -> Self {
        match s {
            LpStatus::Optimal => SolveStatus::Optimal,
            LpStatus::Infeasible => SolveStatus::Infeasible,
            LpStatus::Unbounded => SolveStatus::Unbounded,
            LpStatus::IterationLimit => SolveStatus::IterationLimit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: DVector<f64>,
    pub method: Method,
    pub status: SolveStatus,
    pub iterations: usize,
    pub wall_time: Duration,
}

/// Sign constraint for the basis pursuit baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConstraint {
    #[default]
    Free,
    Nonnegative,
}

fn lp_result(
    method: Method,
    sol: crate::lp_solver::LpSolution,
    n: usize,
    split: bool,
    started: Instant,
) -> RecoveryResult {
    let status = SolveStatus::from(sol.status);
    let x_hat = if !status.is_success() {
        DVector::zeros(n)
    } else if split {
        unsplit(&sol.z)
    } else {
        sol.z
    };
    RecoveryResult {
        x_hat,
        method,
        status,
        iterations: sol.iterations,
        wall_time: started.elapsed(),
    }
}

/// Minimum-ℓ₁ nonnegative solution of the quantization-consistent LP.
pub fn solve_qcs_lp_data(
    qa: &DMatrix<f64>,
    qy: &DVector<f64>,
    delta_a: f64,
    delta_y: f64,
    opts: &SolverOptions,
) -> Result<RecoveryResult> {
    let started = Instant::now();
    let lp = build_qcs_lp(qa, qy, delta_a, delta_y)?;
    let sol = solve_lp(&lp, opts)?;
    Ok(lp_result(Method::QcsLp, sol, qa.ncols(), false, started))
}

pub fn solve_qcs_lp(p: &ProblemInstance, opts: &SolverOptions) -> Result<RecoveryResult> {
    solve_qcs_lp_data(&p.qa, &p.qy, p.delta_a, p.delta_y, opts)
}

/// ℓ₁ minimization subject to `‖QA x − Qy‖∞ ≤ ε`.
pub fn solve_bpdn_inf(
    qa: &DMatrix<f64>,
    qy: &DVector<f64>,
    epsilon: f64,
    sign: SignConstraint,
    opts: &SolverOptions,
) -> Result<RecoveryResult> {
    let started = Instant::now();
    let n = qa.ncols();
    match sign {
        SignConstraint::Free => {
            let lp = build_bpdn_inf_lp(qa, qy, epsilon)?;
            Ok(lp_result(Method::BpdnInf, solve_lp(&lp, opts)?, n, true, started))
        }
        SignConstraint::Nonnegative => {
            let lp = build_bpdn_inf_lp_nonneg(qa, qy, epsilon)?;
            Ok(lp_result(Method::BpdnInf, solve_lp(&lp, opts)?, n, false, started))
        }
    }
}
