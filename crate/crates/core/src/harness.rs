//! Quantization-level sweeps over seeded trials.
//!
//! A sweep runs every configured method on one instance per
//! (levels, trial) pair and records the recovery metrics. Trials are
//! independent and may run on a thread pool; rows are sorted by
//! (levels, trial, method, setting) before they are written, so output is
//! byte-identical regardless of scheduling. Wall-clock times are kept out of
//! the raw and aggregate CSVs and go to a separate timing file.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{compute_metrics, MetricsRecord};
use crate::baselines::{
    niht, solve_bpdn_2, solve_bpdn_inf, solve_qcs_lp, AdmmOptions, Method, NihtOptions, RecoveryResult,
    SignConstraint, SolveStatus,
};
use crate::lp_model::{epsilon_l2, epsilon_setting1, epsilon_setting2};
use crate::lp_solver::SolverOptions;
use crate::problem::{generate_instance, ProblemInstance};
use crate::quantizer::Quantizer;
use crate::{Error, Result};

pub const RAW_HEADER: [&str; 13] = [
    "levels", "trial", "seed", "method", "setting", "status", "rel_l2_sq", "rel_l1", "sparsity", "fpr", "fnr",
    "iterations", "redraws",
];

pub const AGGREGATE_HEADER: [&str; 10] = [
    "levels", "method", "setting", "trials", "failures", "rel_l2_sq", "rel_l1", "sparsity", "fpr", "fnr",
];

pub const TIMING_HEADER: [&str; 5] = ["levels", "trial", "method", "setting", "wall_time_ms"];

/// How the residual bound of the basis pursuit baselines is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    /// Matrix quantization ignored: `‖QA x − Qy‖∞ ≤ Δ_y`.
    #[serde(rename = "1")]
    One,
    /// Matrix error moved onto the measurements: `≤ Δ_A k r + Δ_y`.
    #[serde(rename = "2")]
    Two,
}

impl Setting {
    pub fn epsilon_inf(&self, p: &ProblemInstance) -> f64 {
        match self {
            Setting::One => epsilon_setting1(p.delta_y),
            Setting::Two => epsilon_setting2(p.delta_a, p.k, p.r, p.delta_y),
        }
    }

    pub fn epsilon_l2(&self, p: &ProblemInstance) -> f64 {
        epsilon_l2(self.epsilon_inf(p), p.m)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Setting::One => "1",
            Setting::Two => "2",
        }
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Setting::One),
            "2" => Ok(Setting::Two),
            _ => Err(Error::InvalidArgument(format!("unknown setting {s:?} (expected 1 or 2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingChoice {
    #[serde(rename = "1")]
    Setting1,
    #[serde(rename = "2")]
    Setting2,
    Both,
}

impl SettingChoice {
    pub fn settings(&self) -> &'static [Setting] {
        match self {
            SettingChoice::Setting1 => &[Setting::One],
            SettingChoice::Setting2 => &[Setting::Two],
            SettingChoice::Both => &[Setting::One, Setting::Two],
        }
    }
}

impl FromStr for SettingChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(SettingChoice::Setting1),
            "2" => Ok(SettingChoice::Setting2),
            "both" => Ok(SettingChoice::Both),
            _ => Err(Error::InvalidArgument(format!("unknown setting {s:?} (expected 1, 2 or both)"))),
        }
    }
}

/// Solver knobs shared by every method.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MethodOptions {
    pub lp: SolverOptions,
    pub admm: AdmmOptions,
    pub niht: NihtOptions,
    /// Sign constraint applied to both basis pursuit baselines.
    pub baseline_sign: SignConstraint,
}

/// Run one method on an instance. `setting` is required for the basis
/// pursuit baselines and ignored otherwise.
pub fn recover(
    p: &ProblemInstance,
    method: Method,
    setting: Option<Setting>,
    opts: &MethodOptions,
) -> Result<RecoveryResult> {
    let need_setting = || {
        setting.ok_or_else(|| Error::InvalidArgument(format!("method {method} needs a residual-bound setting")))
    };
    match method {
        Method::QcsLp => solve_qcs_lp(p, &opts.lp),
        Method::BpdnInf => {
            let eps = need_setting()?.epsilon_inf(p);
            solve_bpdn_inf(&p.qa, &p.qy, eps, opts.baseline_sign, &opts.lp)
        }
        Method::Bpdn2 => {
            let eps = need_setting()?.epsilon_l2(p);
            let admm = AdmmOptions {
                sign: opts.baseline_sign,
                ..opts.admm
            };
            solve_bpdn_2(&p.qa, &p.qy, eps, &admm)
        }
        Method::Niht => niht(&p.qa, &p.qy, p.k, &opts.niht),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub r: f64,
    pub levels_list: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub bpdn_setting: SettingChoice,
    /// Absolute threshold for counting an estimated entry as nonzero;
    /// defaults to `1e-4·r`.
    pub zero_tol: Option<f64>,
    pub baseline_sign: SignConstraint,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n: 100,
            m: 40,
            k: 10,
            r: 10.0,
            levels_list: vec![100, 250, 500, 1000, 2500, 5000],
            trials: 20,
            base_seed: 0,
            methods: Method::ALL.to_vec(),
            bpdn_setting: SettingChoice::Both,
            zero_tol: None,
            baseline_sign: SignConstraint::Free,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol.unwrap_or(1e-4 * self.r)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.m == 0 || self.k == 0 || self.k > self.n {
            return bad(format!("need 1 ≤ k ≤ n and m ≥ 1 (n={}, m={}, k={})", self.n, self.m, self.k));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad(format!("r must be positive, got {}", self.r));
        }
        if self.levels_list.is_empty() || self.levels_list.iter().any(|&l| l < 2) {
            return bad(format!("levels_list entries must be ≥ 2, got {:?}", self.levels_list));
        }
        if self.trials == 0 {
            return bad("trials must be ≥ 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if !(self.zero_tol() > 0.0) {
            return bad(format!("zero_tol must be positive, got {}", self.zero_tol()));
        }
        Ok(())
    }

    /// (method, setting) pairs in output order; duplicates collapse.
    pub fn combos(&self) -> Vec<(Method, Option<Setting>)> {
        let mut out = Vec::new();
        for &method in &self.methods {
            if method.uses_setting() {
                out.extend(self.bpdn_setting.settings().iter().map(|&s| (method, Some(s))));
            } else {
                out.push((method, None));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn expected_rows(&self) -> usize {
        self.levels_list.len() * self.trials * self.combos().len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub levels: usize,
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub setting: Option<Setting>,
    /// `None` when the solver returned an error instead of a result.
    pub status: Option<SolveStatus>,
    pub metrics: Option<MetricsRecord>,
    pub iterations: usize,
    pub redraws: u32,
    pub wall_time: Duration,
}

impl SweepRow {
    fn sort_key(&self) -> (usize, usize, Method, Option<Setting>) {
        (self.levels, self.trial, self.method, self.setting)
    }

    pub fn status_str(&self) -> &'static str {
        self.status.map_or("error", |s| s.as_str())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Instance seed for one (levels, trial) cell of a sweep.
pub fn trial_seed(base_seed: u64, levels: usize, trial: usize) -> u64 {
    let h = splitmix64(base_seed);
    let h = splitmix64(h ^ levels as u64);
    splitmix64(h ^ (trial as u64).rotate_left(32))
}

pub fn run_trial(cfg: &SweepConfig, levels: usize, trial: usize, opts: &MethodOptions) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let q = Quantizer::symmetric(levels, cfg.r)?;
    let seed = trial_seed(cfg.base_seed, levels, trial);
    let p = generate_instance(cfg.n, cfg.m, cfg.k, cfg.r, &q, seed)?;
    let opts = MethodOptions {
        baseline_sign: cfg.baseline_sign,
        ..*opts
    };

    let rows = cfg
        .combos()
        .into_iter()
        .map(|(method, setting)| {
            let mut row = SweepRow {
                levels,
                trial,
                seed,
                method,
                setting,
                status: None,
                metrics: None,
                iterations: 0,
                redraws: p.redraws,
                wall_time: Duration::ZERO,
            };
            if let Ok(res) = recover(&p, method, setting, &opts) {
                row.status = Some(res.status);
                row.iterations = res.iterations;
                row.wall_time = res.wall_time;
                row.metrics = compute_metrics(&res.x_hat, &p.x_true, p.k, cfg.zero_tol()).ok();
            }
            row
        })
        .collect();
    Ok(rows)
}

/// Every (levels, trial) cell, sorted. `parallel` spreads trials over the
/// rayon pool; the result is identical either way.
pub fn run_sweep(cfg: &SweepConfig, opts: &MethodOptions, parallel: bool) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .levels_list
        .iter()
        .flat_map(|&l| (0..cfg.trials).map(move |t| (l, t)))
        .collect();
    let chunks: Vec<Vec<SweepRow>> = if parallel {
        cells
            .par_iter()
            .map(|&(l, t)| run_trial(cfg, l, t, opts))
            .collect::<Result<_>>()?
    } else {
        cells
            .iter()
            .map(|&(l, t)| run_trial(cfg, l, t, opts))
            .collect::<Result<_>>()?
    };
    let mut rows: Vec<SweepRow> = chunks.into_iter().flatten().collect();
    rows.sort_by_key(|r| r.sort_key());
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub levels: usize,
    pub method: Method,
    pub setting: Option<Setting>,
    pub trials: usize,
    /// Rows without a successful status or without metrics.
    pub failures: usize,
    /// Means over the successful rows; NaN if there are none.
    pub rel_l2_sq: f64,
    pub rel_l1: f64,
    pub sparsity: f64,
    pub fpr: f64,
    pub fnr: f64,
}

pub fn aggregate(rows: &[SweepRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(usize, Method, Option<Setting>), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.levels, r.method, r.setting)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((levels, method, setting), group)| {
            let ok: Vec<&MetricsRecord> = group
                .iter()
                .filter(|r| r.status.is_some_and(|s| s.is_success()))
                .filter_map(|r| r.metrics.as_ref())
                .collect();
            let mean = |f: fn(&MetricsRecord) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|m| f(m)).sum::<f64>() / ok.len() as f64
                }
            };
            AggregateRow {
                levels,
                method,
                setting,
                trials: group.len(),
                failures: group.len() - ok.len(),
                rel_l2_sq: mean(|m| m.rel_l2_sq),
                rel_l1: mean(|m| m.rel_l1),
                sparsity: mean(|m| m.sparsity),
                fpr: mean(|m| m.fpr),
                fnr: mean(|m| m.fnr),
            }
        })
        .collect()
}

fn setting_str(s: Option<Setting>) -> &'static str {
    s.map_or("", |s| s.as_str())
}

struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_nan() {
            f.write_str("NaN")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

pub fn write_raw_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RAW_HEADER)?;
    for r in rows {
        let m = r.metrics;
        let metric = |f: fn(&MetricsRecord) -> f64| Num(m.as_ref().map_or(f64::NAN, f)).to_string();
        w.write_record([
            r.levels.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.method.to_string(),
            setting_str(r.setting).to_string(),
            r.status_str().to_string(),
            metric(|m| m.rel_l2_sq),
            metric(|m| m.rel_l1),
            metric(|m| m.sparsity),
            metric(|m| m.fpr),
            metric(|m| m.fnr),
            r.iterations.to_string(),
            r.redraws.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.levels.to_string(),
            r.method.to_string(),
            setting_str(r.setting).to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
            Num(r.rel_l2_sq).to_string(),
            Num(r.rel_l1).to_string(),
            Num(r.sparsity).to_string(),
            Num(r.fpr).to_string(),
            Num(r.fnr).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMING_HEADER)?;
    for r in rows {
        w.write_record([
            r.levels.to_string(),
            r.trial.to_string(),
            r.method.to_string(),
            setting_str(r.setting).to_string(),
            format!("{:.3}", r.wall_time.as_secs_f64() * 1e3),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `raw.csv`, `aggregate.csv` and `timings.csv` into `dir`.
pub fn write_sweep_outputs(rows: &[SweepRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_raw_csv(rows, std::fs::File::create(dir.join("raw.csv"))?)?;
    write_aggregate_csv(&aggregate(rows), std::fs::File::create(dir.join("aggregate.csv"))?)?;
    write_timing_csv(rows, std::fs::File::create(dir.join("timings.csv"))?)?;
    Ok(())
}
