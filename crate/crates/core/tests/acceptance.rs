//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary
//! (`harness = false`) so the lines come out in order; exits nonzero if
//! any criterion fails.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use quantlp::analysis::{robustness_bound, CoherenceReport};
use quantlp::baselines::{solve_qcs_lp, Method};
use quantlp::harness::{aggregate, run_sweep, write_sweep_outputs, AggregateRow, MethodOptions, Setting, SweepConfig};
use quantlp::lp_model::build_lp_constraints;
use quantlp::lp_solver::oracle::{enumerate_vertices_oracle, random_small_lp};
use quantlp::problem::{generate_unquantized, generate_with, InstanceConfig};
use quantlp::{generate_instance, solve_lp, LpStatus, Quantizer, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// x_true lies in the LP's feasible polytope on full-size (100 × 40, k = 10) instances.
fn truth_feasibility() -> Outcome {
    let started = Instant::now();
    let mut ok = 0;
    let mut worst = f64::NEG_INFINITY;
    for levels in [100, 5000] {
        let q = Quantizer::symmetric(levels, 10.0).unwrap();
        for seed in 0..100 {
            let p = generate_instance(100, 40, 10, 10.0, &q, seed).unwrap();
            let (c_mat, c_vec) = build_lp_constraints(&p.qa, &p.qy, p.delta_a, p.delta_y).unwrap();
            let slack = (&c_mat * &p.x_true - &c_vec).max();
            worst = worst.max(slack);
            if slack <= 1e-9 {
                ok += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    outcome(
        ok == 200 && elapsed < Duration::from_secs(30),
        format!("{ok}/200 feasible, max(Cx − c) = {worst:.3e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

/// Membership in the polytope agrees with the existence of a bounded
/// perturbation of QA that explains Qy within Δ_y.
fn polytope_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let q = Quantizer::symmetric(7, 1.0).unwrap();
    let (mut agree, mut members, mut grid_sound) = (0, 0, 0);
    let total = 500;
    for _ in 0..total {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(1..=3);
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
        let qa = q.quantize_matrix(&a);
        let qy = q.quantize_vector(&(&a * &x0));
        let (da, dy) = (q.max_error(), q.max_error());

        // probe around x0 with a spread wide enough to leave the polytope often
        let spread = rng.random_range(0.0..3.0);
        let x = DVector::from_fn(n, |j, _| (x0[j] + spread * rng.random_range(-1.0..1.0)).max(0.0));

        let (c_mat, c_vec) = build_lp_constraints(&qa, &qy, da, dy).unwrap();
        let in_polytope = (&c_mat * &x - &c_vec).iter().all(|&v| v <= 0.0);

        // extremal oracle: with x ⪰ 0 the perturbation term δ_A·x ranges over
        // [−Δ_A‖x‖₁, Δ_A‖x‖₁], reached at δ_A = ∓Δ_A in every entry
        let s = x.sum();
        let extremal = (0..m).all(|i| {
            let r = qy[i] - qa.row(i).dot(&x.transpose());
            r - da * s <= dy && r + da * s >= -dy
        });

        // grid oracle: enumerate δ_A rows over {−Δ_A, 0, Δ_A}ⁿ; the reachable
        // residuals form an interval spanned by the grid extremes
        let grid = (0..m).all(|i| {
            let r = qy[i] - qa.row(i).dot(&x.transpose());
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut found_point = false;
            for code in 0..3usize.pow(n as u32) {
                let mut shift = 0.0;
                let mut c = code;
                for j in 0..n {
                    shift += (c % 3) as f64 * da * x[j] - da * x[j];
                    c /= 3;
                }
                let res = r + shift;
                found_point |= res.abs() <= dy;
                lo = lo.min(res);
                hi = hi.max(res);
            }
            // a grid point inside the band certifies membership on its own
            if found_point {
                return true;
            }
            lo <= dy && hi >= -dy
        });

        if in_polytope == extremal {
            agree += 1;
        }
        if in_polytope == grid {
            grid_sound += 1;
        }
        members += usize::from(in_polytope);
    }
    outcome(
        agree == total && grid_sound == total && members > 50 && members < total - 50,
        format!("extremal {agree}/{total}, grid {grid_sound}/{total}, {members} members"),
    )
}

/// Dense simplex against vertex enumeration on small random LPs.
fn solver_oracle() -> Outcome {
    let opts = SolverOptions::default();
    let (mut ok, mut optimal) = (0, 0);
    let mut first_bad = None;
    for seed in 0..200 {
        let lp = random_small_lp(seed, 10);
        let got = solve_lp(&lp, &opts).unwrap();
        let want = enumerate_vertices_oracle(&lp).unwrap();
        let matches = got.status == want.status
            && (got.status != LpStatus::Optimal
                || (got.objective_value - want.objective_value).abs() <= 1e-8);
        if matches {
            ok += 1;
            optimal += usize::from(got.status == LpStatus::Optimal);
        } else if first_bad.is_none() {
            first_bad = Some(format!(
                "; seed {seed}: {:?} {} vs {:?} {}",
                got.status, got.objective_value, want.status, want.objective_value
            ));
        }
    }
    outcome(
        ok == 200,
        format!("{ok}/200 agree ({optimal} optimal){}", first_bad.unwrap_or_default()),
    )
}

/// Without quantization the LP recovers the signal exactly.
fn noiseless_recovery() -> Outcome {
    let mut errs: Vec<f64> = (0..20)
        .map(|seed| {
            let p = generate_unquantized(100, 40, 10, 10.0, 1000 + seed).unwrap();
            let r = solve_qcs_lp(&p, &SolverOptions::default()).unwrap();
            (&r.x_hat - &p.x_true).norm() / p.x_true.norm()
        })
        .collect();
    errs.sort_by(f64::total_cmp);
    let median = 0.5 * (errs[9] + errs[10]);
    outcome(median <= 1e-6, format!("median relative ℓ₂ error {median:.3e} over 20 instances"))
}

fn find<'a>(agg: &'a [AggregateRow], levels: usize, method: Method, setting: Option<Setting>) -> &'a AggregateRow {
    agg.iter()
        .find(|r| r.levels == levels && r.method == method && r.setting == setting)
        .expect("combination present in sweep")
}

/// Qualitative regimes of the quantization-level sweep.
fn sweep_regimes(cfg: &SweepConfig) -> (Outcome, Vec<quantlp::harness::SweepRow>) {
    let started = Instant::now();
    let rows = run_sweep(cfg, &MethodOptions::default(), true).unwrap();
    let elapsed = started.elapsed();
    let agg = aggregate(&rows);

    let lp_1000 = find(&agg, 1000, Method::QcsLp, None);
    let inf1_1000 = find(&agg, 1000, Method::BpdnInf, Some(Setting::One));
    let inf2_1000 = find(&agg, 1000, Method::BpdnInf, Some(Setting::Two));
    let lp_100 = find(&agg, 100, Method::QcsLp, None);
    let lp_5000 = find(&agg, 5000, Method::QcsLp, None);

    let a = (0.08..=0.20).contains(&lp_1000.sparsity) && (0.25..=0.55).contains(&inf1_1000.sparsity);
    let b = lp_1000.rel_l2_sq < inf2_1000.rel_l2_sq;
    let c = lp_5000.rel_l2_sq < lp_100.rel_l2_sq;
    let fast = elapsed < Duration::from_secs(600);
    let detail = format!(
        "{} trials; sparsity LP {:.3}, BPDN∞/1 {:.3} [{}]; rel_l2_sq@1000 LP {:.4} vs BPDN∞/2 {:.4} [{}]; \
         LP@5000 {:.5} vs LP@100 {:.4} [{}]; {} rows in {:.1} s",
        cfg.trials,
        lp_1000.sparsity,
        inf1_1000.sparsity,
        if a { "ok" } else { "out of band" },
        lp_1000.rel_l2_sq,
        inf2_1000.rel_l2_sq,
        if b { "ok" } else { "not lower" },
        lp_5000.rel_l2_sq,
        lp_100.rel_l2_sq,
        if c { "ok" } else { "not lower" },
        rows.len(),
        elapsed.as_secs_f64(),
    );
    (outcome(a && b && c && fast, detail), rows)
}

/// ‖x̂ − x‖₁ < T on instances where the coherence hypothesis holds.
fn robustness_radius() -> Outcome {
    // columns of norm 0.5 keep μ and ρ inside the hypothesis; a fine A
    // quantizer keeps the Δ_A·‖x‖₁ slack of the polytope below Δ_y
    let cfg = InstanceConfig::new(100, 40, 3, 10.0).with_column_norm(0.5);
    let qa = Quantizer::symmetric(1_000_000, 10.0).unwrap();
    let qy = Quantizer::symmetric(1000, 10.0).unwrap();
    let (mut held, mut finite) = (0, 0);
    let mut worst_ratio = 0.0f64;
    let total = 60;
    for seed in 0..total {
        let p = generate_with(&cfg, Some(&qa), Some(&qy), 5000 + seed).unwrap();
        let report = CoherenceReport::new(&p.qa, p.delta_a, p.delta_y, p.k, None).unwrap();
        let Some(t) = report.t else { continue };
        finite += 1;
        let r = solve_qcs_lp(&p, &SolverOptions::default()).unwrap();
        let err = (&r.x_hat - &p.x_true).lp_norm(1);
        worst_ratio = worst_ratio.max(err / t);
        if r.status.is_success() && err < t {
            held += 1;
        }
    }
    outcome(
        finite >= 50 && held == finite,
        format!("{held}/{finite} within T ({total} drawn), max ‖x̂ − x‖₁/T = {worst_ratio:.3}"),
    )
}

/// With Δ_A = 0 the radius reduces to the perturbation-free expression.
fn bound_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut checked, mut ok, mut none_consistent) = (0, 0, true);
    let mut worst = 0.0f64;
    while checked < 100 {
        let rho = rng.random_range(0.05..0.8);
        let mu = rng.random_range(0.0..rho * rho);
        let dy = rng.random_range(1e-4..1.0);
        let m = rng.random_range(1..200);
        let k = rng.random_range(1..6);
        let denom = (2.0 - rho * rho + mu) / (2.0 * k as f64) - mu;
        let reference = 2.0 * dy * rho * (m as f64).sqrt() / denom;
        match robustness_bound(mu, rho, 0.0, dy, m, k) {
            Some(t) => {
                checked += 1;
                let rel = (t - reference).abs() / reference.abs().max(1.0);
                worst = worst.max(rel);
                if rel <= 1e-12 {
                    ok += 1;
                }
            }
            None => none_consistent &= !(denom > 0.0 && 2.0 * rho * rho < 2.0 - mu - rho * rho),
        }
    }
    outcome(
        ok == 100 && none_consistent,
        format!("{ok}/100 within 1e-12 (max relative gap {worst:.2e})"),
    )
}

/// Two runs of the same sweep produce byte-identical CSV files.
fn determinism(cfg: &SweepConfig, first: &[quantlp::harness::SweepRow]) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = (dir.path().join("run1"), dir.path().join("run2"));
    write_sweep_outputs(first, &d1).unwrap();
    let second = run_sweep(cfg, &MethodOptions::default(), true).unwrap();
    write_sweep_outputs(&second, &d2).unwrap();
    let same = |name: &str| std::fs::read(d1.join(name)).unwrap() == std::fs::read(d2.join(name)).unwrap();
    let (raw, agg) = (same("raw.csv"), same("aggregate.csv"));
    outcome(raw && agg, format!("raw.csv identical: {raw}, aggregate.csv identical: {agg}"))
}

fn main() {
    let sweep_cfg = SweepConfig::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    results.push(("truth feasibility", truth_feasibility()));
    results.push(("polytope equivalence", polytope_equivalence()));
    results.push(("LP solver vs vertex enumeration", solver_oracle()));
    results.push(("noiseless exact recovery", noiseless_recovery()));
    let (sweep, rows) = sweep_regimes(&sweep_cfg);
    results.push(("sweep regimes", sweep));
    results.push(("robustness radius", robustness_radius()));
    results.push(("bound reduction at Δ_A = 0", bound_reduction()));
    results.push(("determinism", determinism(&sweep_cfg, &rows)));

    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {} {}: {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
