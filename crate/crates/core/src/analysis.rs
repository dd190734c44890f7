//! Coherence-based robustness analysis and recovery metrics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest absolute inner product between two distinct columns. Columns
/// are used as given, not normalized.
pub fn mutual_coherence(qa: &DMatrix<f64>) -> Result<f64> {
    let n = qa.ncols();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "mutual coherence needs at least two columns, got {n}"
        )));
    }
    let gram = qa.tr_mul(qa);
    let mut mu = 0.0f64;
    for j in 0..n {
        for h in j + 1..n {
            mu = mu.max(gram[(j, h)].abs());
        }
    }
    Ok(mu)
}

/// Largest column ℓ₂ norm.
pub fn max_column_norm(qa: &DMatrix<f64>) -> f64 {
    qa.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// The column-norm/coherence hypothesis `2(Δ_A + ρ)² < 2 − μ − ρ²`.
pub fn hypothesis_gap_ok(mu: f64, rho: f64, delta_a: f64) -> bool {
    2.0 * (delta_a + rho).powi(2) < 2.0 - mu - rho * rho
}

/// Cross-term coefficient `μ + Δ_A² + 2Δ_A·ρ` that bounds every perturbed
/// off-diagonal Gram entry.
fn off_diagonal_bound(mu: f64, rho: f64, delta_a: f64) -> f64 {
    mu + delta_a * delta_a + 2.0 * delta_a * rho
}

/// Smallest radius `T` for which the sparsity condition
///
/// ```text
/// k ≤ ½ (2 − ρ² + μ) / (μ + Δ_A² + 2Δ_A ρ + (ρ√m + Δ_A m)·2Δ_y / T)
/// ```
///
/// holds, i.e.
///
/// ```text
/// T = 2Δ_y (ρ√m + Δ_A m) / ((2 − ρ² + μ)/(2k) − (μ + Δ_A² + 2Δ_A ρ))
/// ```
///
/// Returns `None` when the hypothesis gap fails, when the denominator is not
/// strictly positive, or for `m = 0` / `k = 0`. With `Δ_y = 0` the radius is 0.
pub fn robustness_bound(mu: f64, rho: f64, delta_a: f64, delta_y: f64, m: usize, k: usize) -> Option<f64> {
    if m == 0 || k == 0 || !hypothesis_gap_ok(mu, rho, delta_a) {
        return None;
    }
    let denom = (2.0 - rho * rho + mu) / (2.0 * k as f64) - off_diagonal_bound(mu, rho, delta_a);
    if !(denom > 0.0) {
        return None;
    }
    let numer = 2.0 * delta_y * (rho * (m as f64).sqrt() + delta_a * m as f64);
    let t = numer / denom;
    t.is_finite().then_some(t)
}

/// Largest sparsity `k ≤ n` for which [`robustness_bound`] is finite.
pub fn max_guaranteed_sparsity(mu: f64, rho: f64, delta_a: f64, m: usize, n: usize) -> Option<usize> {
    if m == 0 || n == 0 || !hypothesis_gap_ok(mu, rho, delta_a) {
        return None;
    }
    let cross = off_diagonal_bound(mu, rho, delta_a);
    let mut k = if cross > 0.0 {
        // strict inequality k < (2 − ρ² + μ) / (2·cross)
        let ratio = (2.0 - rho * rho + mu) / (2.0 * cross);
        if ratio.is_finite() {
            ((ratio.ceil() - 1.0).max(0.0) as usize).min(n)
        } else {
            n
        }
    } else {
        n
    };
    // settle float edge cases against the bound itself
    while k > 0 && robustness_bound(mu, rho, delta_a, 1.0, m, k).is_none() {
        k -= 1;
    }
    while k < n && robustness_bound(mu, rho, delta_a, 1.0, m, k + 1).is_some() {
        k += 1;
    }
    (k > 0).then_some(k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub mu: f64,
    pub rho: f64,
    /// True when `rho` was supplied by the caller instead of measured.
    pub rho_override: bool,
    pub delta_a: f64,
    pub delta_y: f64,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub hypothesis_gap_ok: bool,
    pub k_max_for_t: Option<usize>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
}

impl CoherenceReport {
    /// Analyse `qa` for a `k`-sparse signal. `rho` defaults to the tight
    /// maximum column norm; an override must not be smaller than it.
    pub fn new(qa: &DMatrix<f64>, delta_a: f64, delta_y: f64, k: usize, rho: Option<f64>) -> Result<Self> {
        let mu = mutual_coherence(qa)?;
        let tight = max_column_norm(qa);
        let rho_value = match rho {
            Some(r) if r < tight => {
                return Err(Error::InvalidArgument(format!(
                    "rho override {r} is below the largest column norm {tight}"
                )))
            }
            Some(r) => r,
            None => tight,
        };
        let (m, n) = qa.shape();
        Ok(Self {
            mu,
            rho: rho_value,
            rho_override: rho.is_some(),
            delta_a,
            delta_y,
            m,
            n,
            k,
            hypothesis_gap_ok: hypothesis_gap_ok(mu, rho_value, delta_a),
            k_max_for_t: max_guaranteed_sparsity(mu, rho_value, delta_a, m, n),
            t: robustness_bound(mu, rho_value, delta_a, delta_y, m, k),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// ‖x̂ − x‖₂² / ‖x‖₂²
    pub rel_l2_sq: f64,
    /// ‖x̂ − x‖₁ / ‖x‖₁
    pub rel_l1: f64,
    /// fraction of estimated entries above `zero_tol`
    pub sparsity: f64,
    /// estimated nonzero where the truth is zero, over n − k
    pub fpr: f64,
    /// estimated zero where the truth is nonzero, over k
    pub fnr: f64,
    pub zero_tol: f64,
}

/// Recovery metrics of `x_hat` against `x_true`. An estimated entry counts
/// as nonzero iff its magnitude exceeds `zero_tol`; the truth is taken as is.
pub fn compute_metrics(x_hat: &DVector<f64>, x_true: &DVector<f64>, k: usize, zero_tol: f64) -> Result<MetricsRecord> {
    let n = x_true.len();
    if x_hat.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "estimate has {} entries, truth has {n}",
            x_hat.len()
        )));
    }
    if !(zero_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("zero_tol must be positive, got {zero_tol}")));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k={k} exceeds n={n}")));
    }
    let norm2_sq = x_true.norm_squared();
    let norm1 = x_true.lp_norm(1);
    if norm1 == 0.0 {
        return Err(Error::InvalidArgument("relative errors are undefined for an all-zero truth".into()));
    }
    let diff = x_hat - x_true;

    let mut nonzero = 0usize;
    let mut false_pos = 0usize;
    let mut false_neg = 0usize;
    for (&est, &truth) in x_hat.iter().zip(x_true.iter()) {
        let est_nz = est.abs() > zero_tol;
        if est_nz {
            nonzero += 1;
        }
        match (est_nz, truth != 0.0) {
            (true, false) => false_pos += 1,
            (false, true) => false_neg += 1,
            _ => {}
        }
    }
    let rate = |count: usize, over: usize| if over == 0 { 0.0 } else { count as f64 / over as f64 };

    Ok(MetricsRecord {
        rel_l2_sq: diff.norm_squared() / norm2_sq,
        rel_l1: diff.lp_norm(1) / norm1,
        sparsity: nonzero as f64 / n as f64,
        fpr: rate(false_pos, n - k),
        fnr: rate(false_neg, k),
        zero_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn coherence_examples() {
        assert_eq!(mutual_coherence(&DMatrix::identity(2, 2)).unwrap(), 0.0);
        let cols = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(mutual_coherence(&cols).unwrap(), 1.0);
        assert!(mutual_coherence(&DMatrix::from_element(3, 1, 1.0)).is_err());
    }

    #[test]
    fn coherence_is_unnormalized() {
        let cols = DMatrix::from_column_slice(2, 2, &[3.0, 0.0, 2.0, 1.0]);
        assert_eq!(mutual_coherence(&cols).unwrap(), 6.0);
    }

    #[test]
    fn bound_hand_value() {
        // numerator 2·0.1·(0.5·√40 + 0.01·40) = 0.71246
        // denominator 1.8/4 − (0.05 + 0.0001 + 0.01) = 0.3899
        let t = robustness_bound(0.05, 0.5, 0.01, 0.1, 40, 2).unwrap();
        let expected = 0.2 * (0.5 * 40f64.sqrt() + 0.4) / 0.3899;
        assert!((t - expected).abs() < 1e-12);
        assert!((t - 1.827).abs() < 1e-3);
    }

    #[test]
    fn bound_degenerate_cases() {
        assert_eq!(robustness_bound(0.05, 0.5, 0.01, 0.0, 40, 2), Some(0.0));
        // 2(0 + 1)² = 2 is not below 2 − 0 − 1 = 1
        assert_eq!(robustness_bound(0.0, 1.0, 0.0, 0.1, 40, 2), None);
        // denominator negative for large k
        assert_eq!(robustness_bound(0.05, 0.5, 0.01, 0.1, 40, 20), None);
        assert_eq!(robustness_bound(0.05, 0.5, 0.01, 0.1, 0, 2), None);
        assert_eq!(robustness_bound(0.05, 0.5, 0.01, 0.1, 40, 0), None);
    }

    #[test]
    fn bound_without_matrix_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let rho: f64 = rng.random_range(0.05..0.7);
            let mu: f64 = rng.random_range(0.0..0.2) * rho * rho;
            let dy: f64 = rng.random_range(0.0..0.5);
            let m = rng.random_range(1..200);
            let k = rng.random_range(1..4);
            let reference = 2.0 * dy * rho * (m as f64).sqrt() / ((2.0 - rho * rho + mu) / (2.0 * k as f64) - mu);
            match robustness_bound(mu, rho, 0.0, dy, m, k) {
                Some(t) => assert!((t - reference).abs() <= 1e-12 * reference.abs().max(1.0)),
                None => assert!(reference <= 0.0 || !reference.is_finite()),
            }
        }
    }

    #[test]
    fn k_max_matches_bound() {
        let (mu, rho, da) = (0.05, 0.5, 0.01);
        let k = max_guaranteed_sparsity(mu, rho, da, 40, 100).unwrap();
        assert!(robustness_bound(mu, rho, da, 0.1, 40, k).is_some());
        assert!(robustness_bound(mu, rho, da, 0.1, 40, k + 1).is_none());
        // 1.8 / (2·0.0601) = 14.97…
        assert_eq!(k, 14);
        assert_eq!(max_guaranteed_sparsity(0.0, 0.5, 0.0, 40, 100), Some(100));
        assert_eq!(max_guaranteed_sparsity(0.0, 1.0, 0.0, 40, 100), None);
    }

    #[test]
    fn report_on_identity() {
        let r = CoherenceReport::new(&(DMatrix::identity(4, 4) * 0.5), 0.0, 0.1, 2, None).unwrap();
        assert_eq!(r.mu, 0.0);
        assert_eq!(r.rho, 0.5);
        assert!(r.hypothesis_gap_ok);
        assert_eq!(r.k_max_for_t, Some(4));
        assert!(r.t.unwrap() > 0.0);
        assert!(CoherenceReport::new(&DMatrix::identity(4, 4), 0.0, 0.1, 2, Some(0.5)).is_err());
    }

    #[test]
    fn metrics_examples() {
        let truth = v(&[1.0, 0.0, 0.0]);
        let perfect = compute_metrics(&truth, &truth, 1, 1e-4).unwrap();
        assert_eq!(perfect.rel_l2_sq, 0.0);
        assert_eq!(perfect.rel_l1, 0.0);
        assert!((perfect.sparsity - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!((perfect.fpr, perfect.fnr), (0.0, 0.0));

        let zero = compute_metrics(&v(&[0.0, 0.0, 0.0]), &truth, 1, 1e-4).unwrap();
        assert_eq!((zero.rel_l2_sq, zero.rel_l1, zero.fnr, zero.fpr), (1.0, 1.0, 1.0, 0.0));

        let spurious = compute_metrics(&v(&[1.0, 0.5, 0.0]), &truth, 1, 1e-4).unwrap();
        assert_eq!(spurious.fpr, 0.5);
        assert_eq!(spurious.fnr, 0.0);
        assert_eq!(spurious.rel_l1, 0.5);
        assert_eq!(spurious.rel_l2_sq, 0.25);
    }

    #[test]
    fn metrics_errors() {
        let truth = v(&[1.0, 0.0]);
        assert!(compute_metrics(&v(&[0.0]), &truth, 1, 1e-4).is_err());
        assert!(compute_metrics(&truth, &v(&[0.0, 0.0]), 0, 1e-4).is_err());
        assert!(compute_metrics(&truth, &truth, 1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn coherence_permutation_invariant(
            vals in proptest::collection::vec(-5.0f64..5.0, 12),
            perm in Just((0..4).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let a = DMatrix::from_column_slice(3, 4, &vals);
            let shuffled = DMatrix::from_fn(3, 4, |i, j| a[(i, perm[j])]);
            prop_assert_eq!(mutual_coherence(&a).unwrap(), mutual_coherence(&shuffled).unwrap());
        }

        #[test]
        fn bound_monotone(
            rho in 0.05f64..0.7,
            mu_frac in 0.0f64..0.2,
            da in 0.0f64..0.01,
            dy in 0.0f64..1.0,
            ddy in 0.0f64..1.0,
            m in 1usize..100,
            k in 1usize..6,
        ) {
            let mu = mu_frac * rho * rho;
            if let Some(t) = robustness_bound(mu, rho, da, dy, m, k) {
                let more_noise = robustness_bound(mu, rho, da, dy + ddy, m, k).unwrap();
                prop_assert!(more_noise >= t);
                if let Some(t_next) = robustness_bound(mu, rho, da, dy, m, k + 1) {
                    prop_assert!(t_next >= t);
                }
            }
        }

        #[test]
        fn metric_ranges(
            hat in proptest::collection::vec(-2.0f64..2.0, 8),
            truth in proptest::collection::vec(0.0f64..2.0, 8),
        ) {
            let truth = DVector::from_vec(truth);
            prop_assume!(truth.lp_norm(1) > 0.0);
            let k = truth.iter().filter(|&&x| x != 0.0).count();
            let m = compute_metrics(&DVector::from_vec(hat), &truth, k, 1e-3).unwrap();
            for rate in [m.sparsity, m.fpr, m.fnr] {
                prop_assert!((0.0..=1.0).contains(&rate));
            }
            prop_assert!(m.rel_l2_sq >= 0.0 && m.rel_l1 >= 0.0);
        }
    }
}
