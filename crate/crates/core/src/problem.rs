//! Seeded problem instances: a nonnegative k-sparse signal, a Gaussian
//! sensing matrix, exact measurements and their quantized counterparts.
//!
//! All randomness comes from a `ChaCha8Rng` seeded with the instance seed,
//! drawn in a fixed order (row-major sensing matrix, support, amplitudes),
//! so an instance is reproducible across platforms.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::quantizer::Quantizer;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Upper bound on redraws when a draw saturates the quantizer.
const MAX_REDRAWS: u32 = 10_000;

/// What to do when an exact entry falls outside a quantizer's range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaturationPolicy {
    /// Redraw the sensing matrix and signal until nothing saturates.
    #[default]
    Redraw,
    /// Keep the draw; saturated entries break the error-bound invariant.
    Clip,
}

/// Shape and distribution parameters of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub r: f64,
    /// Rescale every column of the exact matrix to this ℓ₂ norm.
    pub column_norm: Option<f64>,
    pub saturation: SaturationPolicy,
}

impl InstanceConfig {
    pub fn new(n: usize, m: usize, k: usize, r: f64) -> Self {
        Self {
            n,
            m,
            k,
            r,
            column_norm: None,
            saturation: SaturationPolicy::default(),
        }
    }

    pub fn with_column_norm(mut self, norm: f64) -> Self {
        self.column_norm = Some(norm);
        self
    }

    pub fn with_saturation(mut self, policy: SaturationPolicy) -> Self {
        self.saturation = policy;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidArgument(format!(
                "dimensions must be positive (n={}, m={})",
                self.n, self.m
            )));
        }
        if self.k > self.n {
            return Err(Error::InvalidArgument(format!(
                "sparsity k={} exceeds n={}",
                self.k, self.n
            )));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidArgument(format!("amplitude bound r={} must be positive", self.r)));
        }
        if let Some(c) = self.column_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!("column norm {c} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub r: f64,
    pub seed: u64,
    pub column_norm: Option<f64>,
    /// Quantizers applied to the matrix and to the measurements; `None` means pass-through.
    pub quantizer_a: Option<Quantizer>,
    pub quantizer_y: Option<Quantizer>,
    pub a: DMatrix<f64>,
    pub x_true: DVector<f64>,
    pub y: DVector<f64>,
    pub qa: DMatrix<f64>,
    pub qy: DVector<f64>,
    pub delta_a: f64,
    pub delta_y: f64,
    /// Entries of (A, y) outside the quantizer range in the kept draw.
    pub saturated: usize,
    /// Draws discarded because they saturated (only under `SaturationPolicy::Redraw`).
    pub redraws: u32,
}

/// Benchmark instance: one quantizer for both matrix and measurements.
pub fn generate_instance(
    n: usize,
    m: usize,
    k: usize,
    r: f64,
    quantizer: &Quantizer,
    seed: u64,
) -> Result<ProblemInstance> {
    generate_with(&InstanceConfig::new(n, m, k, r), Some(quantizer), Some(quantizer), seed)
}

/// Instance with quantization disabled: Q(A) = A, Q(y) = y and both bounds zero.
pub fn generate_unquantized(n: usize, m: usize, k: usize, r: f64, seed: u64) -> Result<ProblemInstance> {
    generate_with(&InstanceConfig::new(n, m, k, r), None, None, seed)
}

pub fn generate_with(
    cfg: &InstanceConfig,
    quantizer_a: Option<&Quantizer>,
    quantizer_y: Option<&Quantizer>,
    seed: u64,
) -> Result<ProblemInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut redraws = 0;
    loop {
        let (a, x_true) = draw(cfg, &mut rng);
        let y = &a * &x_true;
        let saturated = count_saturated(quantizer_a, a.iter())
            + count_saturated(quantizer_y, y.iter());
        if saturated > 0 && cfg.saturation == SaturationPolicy::Redraw {
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(Error::InvalidArgument(format!(
                    "quantizer range too narrow: {MAX_REDRAWS} consecutive draws saturated"
                )));
            }
            continue;
        }
        let (qa, delta_a) = match quantizer_a {
            Some(q) => (q.quantize_matrix(&a), q.max_error()),
            None => (a.clone(), 0.0),
        };
        let (qy, delta_y) = match quantizer_y {
            Some(q) => (q.quantize_vector(&y), q.max_error()),
            None => (y.clone(), 0.0),
        };
        return Ok(ProblemInstance {
            n: cfg.n,
            m: cfg.m,
            k: cfg.k,
            r: cfg.r,
            seed,
            column_norm: cfg.column_norm,
            quantizer_a: quantizer_a.copied(),
            quantizer_y: quantizer_y.copied(),
            a,
            x_true,
            y,
            qa,
            qy,
            delta_a,
            delta_y,
            saturated,
            redraws,
        });
    }
}

fn draw(cfg: &InstanceConfig, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DVector<f64>) {
    let sd = 1.0 / (cfg.m as f64).sqrt();
    let mut a = DMatrix::zeros(cfg.m, cfg.n);
    for i in 0..cfg.m {
        for j in 0..cfg.n {
            let z: f64 = rng.sample(StandardNormal);
            a[(i, j)] = sd * z;
        }
    }
    if let Some(target) = cfg.column_norm {
        for mut col in a.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col *= target / norm;
            }
        }
    }

    let mut support = index::sample(rng, cfg.n, cfg.k).into_vec();
    support.sort_unstable();
    let mut x = DVector::zeros(cfg.n);
    for &j in &support {
        // 1 - u with u in [0, 1) lands in (0, 1], so every support entry is nonzero
        let u: f64 = rng.random();
        x[j] = cfg.r * (1.0 - u);
    }
    (a, x)
}

fn count_saturated<'a>(q: Option<&Quantizer>, values: impl Iterator<Item = &'a f64>) -> usize {
    match q {
        Some(q) => values.filter(|&&v| q.saturates(v)).count(),
        None => 0,
    }
}

impl ProblemInstance {
    /// Number of strictly positive entries of the true signal.
    pub fn support_size(&self) -> usize {
        self.x_true.iter().filter(|&&v| v > 0.0).count()
    }

    /// Checks every instance invariant; intended as a test oracle.
    pub fn verify(&self) -> bool {
        verify_instance(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            Error::MalformedInstance {
                field,
                reason: e.into_inner().to_string(),
            }
        })?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn verify_instance(p: &ProblemInstance) -> bool {
    let (m, n) = (p.m, p.n);
    if p.a.shape() != (m, n) || p.qa.shape() != (m, n) {
        return false;
    }
    if p.x_true.len() != n || p.y.len() != m || p.qy.len() != m || p.k > n {
        return false;
    }
    if !(p.delta_a >= 0.0 && p.delta_y >= 0.0 && p.r > 0.0) {
        return false;
    }

    // exactly k entries in (0, r], the rest exactly zero
    let mut positives = 0;
    for &v in p.x_true.iter() {
        if v == 0.0 {
            continue;
        }
        if !(v > 0.0 && v <= p.r) {
            return false;
        }
        positives += 1;
    }
    if positives != p.k {
        return false;
    }

    // y = A x up to accumulation roundoff
    let ax = &p.a * &p.x_true;
    let scale = (p.a.abs() * p.x_true.abs()).amax();
    if (ax - &p.y).amax() > 1e-10 * scale {
        return false;
    }

    let roundoff = |scale: f64| 1e-12 * scale.max(1.0);
    let a_scale = p.a.amax().max(p.qa.amax());
    if (&p.qa - &p.a).amax() > p.delta_a + roundoff(a_scale) {
        return false;
    }
    let y_scale = p.y.amax().max(p.qy.amax());
    if (&p.qy - &p.y).amax() > p.delta_y + roundoff(y_scale) {
        return false;
    }
    true
}

/// On-disk JSON layout. Matrices are dense row-major arrays.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    schema_version: u32,
    n: usize,
    m: usize,
    k: usize,
    r: f64,
    seed: u64,
    #[serde(default)]
    column_norm: Option<f64>,
    quantizer_a: Option<Quantizer>,
    quantizer_y: Option<Quantizer>,
    delta_a: f64,
    delta_y: f64,
    #[serde(default)]
    saturated: usize,
    #[serde(default)]
    redraws: u32,
    a: Vec<f64>,
    x_true: Vec<f64>,
    y: Vec<f64>,
    qa: Vec<f64>,
    qy: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl From<&ProblemInstance> for InstanceFile {
    fn from(p: &ProblemInstance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n: p.n,
            m: p.m,
            k: p.k,
            r: p.r,
            seed: p.seed,
            column_norm: p.column_norm,
            quantizer_a: p.quantizer_a,
            quantizer_y: p.quantizer_y,
            delta_a: p.delta_a,
            delta_y: p.delta_y,
            saturated: p.saturated,
            redraws: p.redraws,
            a: row_major(&p.a),
            x_true: p.x_true.as_slice().to_vec(),
            y: p.y.as_slice().to_vec(),
            qa: row_major(&p.qa),
            qy: p.qy.as_slice().to_vec(),
        }
    }
}

impl TryFrom<InstanceFile> for ProblemInstance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        let bad = |field: &str, reason: String| Error::MalformedInstance {
            field: field.to_string(),
            reason,
        };
        if f.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", f.schema_version),
            ));
        }
        if f.n == 0 {
            return Err(bad("n", "must be positive".into()));
        }
        if f.m == 0 {
            return Err(bad("m", "must be positive".into()));
        }
        if f.k > f.n {
            return Err(bad("k", format!("{} exceeds n={}", f.k, f.n)));
        }
        if !(f.r > 0.0) {
            return Err(bad("r", format!("{} must be positive", f.r)));
        }
        if !(f.delta_a >= 0.0) {
            return Err(bad("delta_a", format!("{} must be nonnegative", f.delta_a)));
        }
        if !(f.delta_y >= 0.0) {
            return Err(bad("delta_y", format!("{} must be nonnegative", f.delta_y)));
        }
        let check_len = |field: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(bad(field, format!("expected {want} entries, got {got}")))
            }
        };
        check_len("a", f.a.len(), f.m * f.n)?;
        check_len("qa", f.qa.len(), f.m * f.n)?;
        check_len("x_true", f.x_true.len(), f.n)?;
        check_len("y", f.y.len(), f.m)?;
        check_len("qy", f.qy.len(), f.m)?;

        Ok(ProblemInstance {
            n: f.n,
            m: f.m,
            k: f.k,
            r: f.r,
            seed: f.seed,
            column_norm: f.column_norm,
            quantizer_a: f.quantizer_a,
            quantizer_y: f.quantizer_y,
            a: DMatrix::from_row_slice(f.m, f.n, &f.a),
            x_true: DVector::from_vec(f.x_true),
            y: DVector::from_vec(f.y),
            qa: DMatrix::from_row_slice(f.m, f.n, &f.qa),
            qy: DVector::from_vec(f.qy),
            delta_a: f.delta_a,
            delta_y: f.delta_y,
            saturated: f.saturated,
            redraws: f.redraws,
        })
    }
}
