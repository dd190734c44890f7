//! Inequality-form linear programs built from quantized data.
//!
//! Every program here has the shape `min objective·z  s.t.  G z ≤ h`,
//! optionally with `z ⪰ 0`. For nonnegative signals the quantized-data
//! program works directly on `x`; the signed ℓ∞ baseline splits
//! `x = x⁺ − x⁻` so the solver still only sees nonnegative variables.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    /// Whether the variables are constrained to the nonnegative orthant.
    pub nonneg: bool,
}

impl LpProblem {
    pub fn new(objective: DVector<f64>, g: DMatrix<f64>, h: DVector<f64>, nonneg: bool) -> Result<Self> {
        let num_vars = objective.len();
        if g.ncols() != num_vars {
            return Err(Error::DimensionMismatch(format!(
                "constraint matrix has {} columns, objective has {num_vars} entries",
                g.ncols()
            )));
        }
        if g.nrows() != h.len() {
            return Err(Error::DimensionMismatch(format!(
                "constraint matrix has {} rows, right-hand side has {} entries",
                g.nrows(),
                h.len()
            )));
        }
        Ok(Self {
            num_vars,
            objective,
            g,
            h,
            nonneg,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.g.nrows()
    }

    /// Largest constraint violation `max(G z − h)`, clipped below at zero.
    pub fn max_violation(&self, z: &DVector<f64>) -> f64 {
        let mut worst = 0.0f64;
        let gz = &self.g * z;
        for (lhs, rhs) in gz.iter().zip(self.h.iter()) {
            worst = worst.max(lhs - rhs);
        }
        if self.nonneg {
            for &v in z.iter() {
                worst = worst.max(-v);
            }
        }
        worst
    }

    /// Plain-text dump: a header line, the objective row, then one line per
    /// inequality as coefficients followed by `<=` and the bound. Numbers use
    /// Rust's shortest round-trip formatting so the dump is lossless.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "lp vars {} rows {} nonneg {}",
            self.num_vars,
            self.num_rows(),
            self.nonneg
        );
        out.push_str("min");
        for c in self.objective.iter() {
            let _ = write!(out, " {c:?}");
        }
        out.push('\n');
        for i in 0..self.num_rows() {
            out.push_str("row");
            for j in 0..self.num_vars {
                let _ = write!(out, " {:?}", self.g[(i, j)]);
            }
            let _ = writeln!(out, " <= {:?}", self.h[i]);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidArgument(format!("LP dump: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty input".into()))?
            .split_whitespace()
            .collect();
        let (num_vars, num_rows, nonneg) = match header.as_slice() {
            ["lp", "vars", v, "rows", r, "nonneg", b] => (
                v.parse::<usize>().map_err(|e| bad(format!("vars: {e}")))?,
                r.parse::<usize>().map_err(|e| bad(format!("rows: {e}")))?,
                b.parse::<bool>().map_err(|e| bad(format!("nonneg: {e}")))?,
            ),
            _ => return Err(bad("malformed header".into())),
        };
        let parse_nums = |tokens: &[&str]| -> Result<Vec<f64>> {
            tokens
                .iter()
                .map(|t| t.parse::<f64>().map_err(|e| bad(format!("number {t:?}: {e}"))))
                .collect()
        };

        let obj_line: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("missing objective".into()))?
            .split_whitespace()
            .collect();
        if obj_line.first() != Some(&"min") || obj_line.len() != num_vars + 1 {
            return Err(bad("malformed objective row".into()));
        }
        let objective = DVector::from_vec(parse_nums(&obj_line[1..])?);

        let mut g = DMatrix::zeros(num_rows, num_vars);
        let mut h = DVector::zeros(num_rows);
        for i in 0..num_rows {
            let row: Vec<&str> = lines
                .next()
                .ok_or_else(|| bad(format!("missing row {i}")))?
                .split_whitespace()
                .collect();
            if row.len() != num_vars + 3 || row[0] != "row" || row[num_vars + 1] != "<=" {
                return Err(bad(format!("malformed row {i}")));
            }
            let coeffs = parse_nums(&row[1..=num_vars])?;
            for (j, c) in coeffs.into_iter().enumerate() {
                g[(i, j)] = c;
            }
            h[i] = parse_nums(&row[num_vars + 2..])?[0];
        }
        if lines.next().is_some() {
            return Err(bad("trailing content".into()));
        }
        Self::new(objective, g, h, nonneg)
    }
}

fn check_data(qa: &DMatrix<f64>, qy: &DVector<f64>) -> Result<()> {
    if qa.nrows() != qy.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows but measurement vector has {} entries",
            qa.nrows(),
            qy.len()
        )));
    }
    Ok(())
}

fn check_bound(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

/// Stacked constraints `C x ⪯ c` describing every nonnegative `x` that is
/// consistent with the quantized data for some matrix perturbation bounded
/// entrywise by `delta_a` and some measurement perturbation bounded by
/// `delta_y`:
///
/// ```text
/// C = [  QA − Δ_A·1 1ᵀ ]      c = [  Qy + Δ_y·1 ]
///     [ −QA − Δ_A·1 1ᵀ ]          [ −Qy + Δ_y·1 ]
/// ```
pub fn build_lp_constraints(
    qa: &DMatrix<f64>,
    qy: &DVector<f64>,
    delta_a: f64,
    delta_y: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_data(qa, qy)?;
    check_bound("delta_a", delta_a)?;
    check_bound("delta_y", delta_y)?;
    let (m, n) = qa.shape();
    let mut c_mat = DMatrix::zeros(2 * m, n);
    let mut c_vec = DVector::zeros(2 * m);
    for i in 0..m {
        for j in 0..n {
            c_mat[(i, j)] = qa[(i, j)] - delta_a;
            c_mat[(m + i, j)] = -qa[(i, j)] - delta_a;
        }
        c_vec[i] = qy[i] + delta_y;
        c_vec[m + i] = -qy[i] + delta_y;
    }
    Ok((c_mat, c_vec))
}

/// Minimum-ℓ₁ nonnegative signal consistent with the quantized data.
/// On the nonnegative orthant ‖x‖₁ = Σxᵢ, so the objective is all ones.
pub fn build_qcs_lp(qa: &DMatrix<f64>, qy: &DVector<f64>, delta_a: f64, delta_y: f64) -> Result<LpProblem> {
    let (g, h) = build_lp_constraints(qa, qy, delta_a, delta_y)?;
    LpProblem::new(DVector::from_element(qa.ncols(), 1.0), g, h, true)
}

/// ℓ₁ minimization under `‖QA x − Qy‖∞ ≤ ε` with a signed `x`, encoded with
/// variables `(x⁺, x⁻)`.
pub fn build_bpdn_inf_lp(qa: &DMatrix<f64>, qy: &DVector<f64>, epsilon: f64) -> Result<LpProblem> {
    check_data(qa, qy)?;
    check_bound("epsilon", epsilon)?;
    let (m, n) = qa.shape();
    let mut g = DMatrix::zeros(2 * m, 2 * n);
    let mut h = DVector::zeros(2 * m);
    for i in 0..m {
        for j in 0..n {
            let v = qa[(i, j)];
            g[(i, j)] = v;
            g[(i, n + j)] = -v;
            g[(m + i, j)] = -v;
            g[(m + i, n + j)] = v;
        }
        h[i] = qy[i] + epsilon;
        h[m + i] = -qy[i] + epsilon;
    }
    LpProblem::new(DVector::from_element(2 * n, 1.0), g, h, true)
}

/// Same constraint as [`build_bpdn_inf_lp`] restricted to `x ⪰ 0`.
pub fn build_bpdn_inf_lp_nonneg(qa: &DMatrix<f64>, qy: &DVector<f64>, epsilon: f64) -> Result<LpProblem> {
    check_bound("epsilon", epsilon)?;
    build_qcs_lp(qa, qy, 0.0, epsilon)
}

/// Recombine `(x⁺, x⁻)` into a signed vector.
pub fn unsplit(z: &DVector<f64>) -> DVector<f64> {
    let n = z.len() / 2;
    DVector::from_fn(n, |j, _| z[j] - z[n + j])
}

/// ℓ∞ residual bound when the matrix error is ignored.
pub fn epsilon_setting1(delta_y: f64) -> f64 {
    delta_y
}

/// ℓ∞ residual bound when the matrix error is folded into the measurements:
/// `|(QA x − Qy)ᵢ| ≤ Δ_A·k·r + Δ_y` for k-sparse `x` with entries below `r`.
pub fn epsilon_setting2(delta_a: f64, k: usize, r: f64, delta_y: f64) -> f64 {
    delta_a * k as f64 * r + delta_y
}

/// ℓ₂ counterpart of an ℓ∞ residual bound over `m` measurements.
pub fn epsilon_l2(epsilon_inf: f64, m: usize) -> f64 {
    (m as f64).sqrt() * epsilon_inf
}
