//! Command-line front end. Machine-readable JSON goes to stdout, diagnostics
//! to stderr. Exit codes: 0 success, 1 usage or input error, 2 solver failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analysis::{compute_metrics, CoherenceReport};
use crate::baselines::{Method, SignConstraint};
use crate::harness::{aggregate, recover, run_sweep, write_sweep_outputs, MethodOptions, Setting, SettingChoice, SweepConfig};
use crate::problem::{generate_with, InstanceConfig, ProblemInstance, SaturationPolicy};
use crate::quantizer::Quantizer;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "quantlp", version, about = "Sparse recovery from quantized predictors and measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded instance and write it as JSON.
    Gen(GenArgs),
    /// Recover the signal of an instance with one method and print its metrics.
    Solve(SolveArgs),
    /// Print coherence, column-norm bound and robustness radius of an instance.
    Analyze(AnalyzeArgs),
    /// Run a quantization-level sweep and write CSV files.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 40)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 10.0)]
    pub r: f64,
    /// Quantization levels over [-r, r] for both A and y.
    #[arg(long, default_value_t = 1000)]
    pub levels: usize,
    /// Separate level count for A (overrides --levels).
    #[arg(long)]
    pub levels_a: Option<usize>,
    /// Separate level count for y (overrides --levels).
    #[arg(long)]
    pub levels_y: Option<usize>,
    /// Skip quantization entirely (Q(A) = A, Q(y) = y).
    #[arg(long)]
    pub unquantized: bool,
    /// Rescale every column of A to this ℓ₂ norm before quantizing.
    #[arg(long)]
    pub col_norm: Option<f64>,
    /// Redraw saturating samples (default) or keep them clipped.
    #[arg(long, value_parser = parse_saturation, default_value = "redraw")]
    pub saturation: SaturationPolicy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    /// Residual-bound setting for bpdn-inf and bpdn-2.
    #[arg(long, value_parser = parse_setting)]
    pub setting: Option<Setting>,
    /// Threshold for counting an entry as nonzero; defaults to 1e-4·r.
    #[arg(long)]
    pub zero_tol: Option<f64>,
    /// Constrain the basis pursuit baselines to x ⪰ 0.
    #[arg(long)]
    pub nonneg_baselines: bool,
    /// Include the estimate in the output.
    #[arg(long)]
    pub print_x: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Column-norm bound to use instead of the measured maximum.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Sparsity to evaluate the radius for; defaults to the instance's k.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML file with sweep settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Comma-separated level counts.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Option<Vec<Method>>,
    /// 1, 2 or both.
    #[arg(long, value_parser = parse_setting_choice)]
    pub setting: Option<SettingChoice>,
    #[arg(long)]
    pub zero_tol: Option<f64>,
    #[arg(long)]
    pub nonneg_baselines: bool,
    /// Run trials on one thread.
    #[arg(long)]
    pub serial: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_setting_choice(s: &str) -> Result<SettingChoice, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_saturation(s: &str) -> Result<SaturationPolicy, String> {
    match s {
        "redraw" => Ok(SaturationPolicy::Redraw),
        "clip" => Ok(SaturationPolicy::Clip),
        _ => Err(format!("unknown saturation policy {s:?} (expected redraw or clip)")),
    }
}

enum Failure {
    Usage(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => Failure::Solver(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type CmdResult = std::result::Result<serde_json::Value, Failure>;

/// Parse `args` (including the program name) and execute.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a, err),
    };
    match result {
        Ok(payload) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&payload).expect("JSON values serialize"));
            EXIT_OK
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Solver(msg)) => {
            let _ = writeln!(err, "solver failure: {msg}");
            EXIT_SOLVER
        }
    }
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let mut cfg = InstanceConfig::new(a.n, a.m, a.k, a.r).with_saturation(a.saturation);
    if let Some(c) = a.col_norm {
        cfg = cfg.with_column_norm(c);
    }
    let (qa, qy) = if a.unquantized {
        (None, None)
    } else {
        (
            Some(Quantizer::symmetric(a.levels_a.unwrap_or(a.levels), a.r)?),
            Some(Quantizer::symmetric(a.levels_y.unwrap_or(a.levels), a.r)?),
        )
    };
    let p = generate_with(&cfg, qa.as_ref(), qy.as_ref(), a.seed)?;
    p.save(&a.out)?;
    Ok(json!({
        "out": a.out.display().to_string(),
        "n": p.n,
        "m": p.m,
        "k": p.k,
        "seed": p.seed,
        "delta_a": p.delta_a,
        "delta_y": p.delta_y,
        "saturated": p.saturated,
        "redraws": p.redraws,
    }))
}

fn load_instance(path: &std::path::Path) -> std::result::Result<ProblemInstance, Failure> {
    ProblemInstance::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let p = load_instance(&a.input)?;
    if a.method.uses_setting() && a.setting.is_none() {
        return Err(Failure::Usage(format!("--setting 1|2 is required for {}", a.method)));
    }
    let opts = MethodOptions {
        baseline_sign: if a.nonneg_baselines {
            SignConstraint::Nonnegative
        } else {
            SignConstraint::Free
        },
        ..MethodOptions::default()
    };
    let setting = if a.method.uses_setting() { a.setting } else { None };
    let res = recover(&p, a.method, setting, &opts)?;
    if !res.status.is_success() {
        return Err(Failure::Solver(format!("{} finished with status {}", a.method, res.status)));
    }
    let zero_tol = a.zero_tol.unwrap_or(1e-4 * p.r);
    let metrics = compute_metrics(&res.x_hat, &p.x_true, p.k, zero_tol)?;
    let mut payload = json!({
        "method": a.method,
        "setting": setting.map(|s| s.as_str()),
        "status": res.status,
        "iterations": res.iterations,
        "wall_time_ms": res.wall_time.as_secs_f64() * 1e3,
        "metrics": metrics,
    });
    if a.print_x {
        payload["x_hat"] = json!(res.x_hat.as_slice());
    }
    Ok(payload)
}

fn cmd_analyze(a: AnalyzeArgs) -> CmdResult {
    let p = load_instance(&a.input)?;
    let report = CoherenceReport::new(&p.qa, p.delta_a, p.delta_y, a.k.unwrap_or(p.k), a.rho)?;
    Ok(serde_json::to_value(report).expect("report serializes"))
}

fn cmd_sweep(a: SweepArgs, err: &mut dyn Write) -> CmdResult {
    let mut cfg = match &a.config {
        Some(path) => SweepConfig::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => SweepConfig::default(),
    };
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.m {
        cfg.m = v;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.r {
        cfg.r = v;
    }
    if let Some(v) = a.levels {
        cfg.levels_list = v;
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.seed {
        cfg.base_seed = v;
    }
    if let Some(v) = a.methods {
        cfg.methods = v;
    }
    if let Some(v) = a.setting {
        cfg.bpdn_setting = v;
    }
    if a.zero_tol.is_some() {
        cfg.zero_tol = a.zero_tol;
    }
    if a.nonneg_baselines {
        cfg.baseline_sign = SignConstraint::Nonnegative;
    }
    cfg.validate()?;

    let _ = writeln!(
        err,
        "sweep: {} levels x {} trials x {} method/setting combos",
        cfg.levels_list.len(),
        cfg.trials,
        cfg.combos().len()
    );
    let rows = run_sweep(&cfg, &MethodOptions::default(), !a.serial)?;
    write_sweep_outputs(&rows, &a.out_dir)?;
    let failures = aggregate(&rows).iter().map(|r| r.failures).sum::<usize>();
    Ok(json!({
        "rows": rows.len(),
        "failures": failures,
        "out_dir": a.out_dir.display().to_string(),
        "files": ["raw.csv", "aggregate.csv", "timings.csv"],
    }))
}
