//! Sparse nonnegative regression when both the predictor matrix and the
//! measurements are only available in quantized form.
//!
//! The central object is an inequality-form linear program built from the
//! quantized data and the two worst-case quantization errors. Around it sit
//! a dense two-phase simplex solver, three comparison methods (ℓ∞- and
//! ℓ₂-constrained basis pursuit denoising and normalized iterative hard
//! thresholding), a coherence-based robustness radius, recovery metrics and
//! a seeded benchmark harness.

pub mod analysis;
pub mod baselines;
pub mod cli;
mod error;
pub mod harness;
pub mod lp_model;
pub mod lp_solver;
pub mod problem;
pub mod quantizer;

pub use error::{Error, Result};

pub use analysis::{compute_metrics, mutual_coherence, robustness_bound, CoherenceReport, MetricsRecord};
pub use baselines::{Method, RecoveryResult, SolveStatus};
pub use lp_model::{build_bpdn_inf_lp, build_lp_constraints, build_qcs_lp, LpProblem};
pub use lp_solver::{solve_lp, LpSolution, LpStatus, SolverOptions};
pub use problem::{generate_instance, ProblemInstance};
pub use quantizer::Quantizer;
