//! Acceptance criteria A1 to A10, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach the output;
//! the process exits non-zero when any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;
use softpu::dataset::{
    gen_gscar, gen_mela, gen_pu_benchmark, pu_labelize, EtaSpec, FeatureDomain, GscarConfig, Link, MelaConfig,
    PuBenchmarkConfig,
};
use softpu::dataset::ClassStats;
use softpu::experiment::{run_experiment, ExperimentConfig};
use softpu::metrics::{auc_spu, auc_spu_bound, fpr_spu, mixture_coefficients, real_roc, roc_spu, tpr_spu, CurveKind};
use softpu::oracle::{
    exhaustive_frontier, mela_problem, noisy_mela_problem, random_problem, slice_density, verify_mela_optimality,
    verify_noisy_gap,
};
use softpu::rng::seeded;
use softpu::soft_labeler::{
    empirical_calibration, fit_prior, posterior_pass_probability, CheckRecord, DiscretePrior, FitOptions,
};
use softpu::trainer::{loss_gradient, train, Architecture, ScoringModel, TrainConfig};
use softpu::{SoftDataset, SoftSample};

type Outcome = Result<String, String>;

/// Id, title, check, time budget in seconds.
type Criterion = (&'static str, &'static str, fn() -> Outcome, u64);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn a1_metric_exactness() -> Outcome {
    // sum S = 4.25, sum S*Y = 2.75, sum (1 - S) = 5.75, sum (1 - S) Y = 2.25
    let s = [1.0, 0.0, 0.5, 0.25, 0.75, 0.0, 1.0, 0.5, 0.0, 0.25];
    let y = [true, true, false, true, false, false, true, true, false, false];
    let cases = [
        (tpr_spu(&s, &y).map_err(e2s)?, 11.0 / 17.0),
        (fpr_spu(&s, &y).map_err(e2s)?, 9.0 / 23.0),
    ];
    // sum S = 3.6, sum S*Y = 1.6, sum (1 - S) = 6.4, sum (1 - S) Y = 3.4
    let s2 = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.0, 0.0];
    let y2 = [true, false, true, false, true, false, true, false, true, false];
    let more = [
        (tpr_spu(&s2, &y2).map_err(e2s)?, 4.0 / 9.0),
        (fpr_spu(&s2, &y2).map_err(e2s)?, 17.0 / 32.0),
    ];
    let mut worst: f64 = 0.0;
    for (got, want) in cases.into_iter().chain(more) {
        worst = worst.max((got - want).abs());
    }
    ensure(worst <= 1e-12, || format!("max error {worst:e} > 1e-12"))?;
    Ok(format!("max error {worst:e}"))
}

fn random_pair(trial: usize, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    const N: usize = 500;
    let pi = rng.random_range(0.05..0.95);
    let s: Vec<f64> = (0..N)
        .map(|_| match trial % 4 {
            0 => rng.random::<f64>(),
            1 => rng.random_range(0..5) as f64 / 4.0,
            2 => (rng.random::<f64>() < pi) as u8 as f64,
            _ => {
                if rng.random::<f64>() < 0.7 {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            }
        })
        .collect();
    let noise = [0.0, 0.1, 1.0, 10.0][(trial / 4) % 4];
    let scores = s
        .iter()
        .map(|&v| if noise >= 10.0 { rng.random() } else { v + noise * rng.random::<f64>() })
        .collect();
    (s, scores)
}

fn a2_bound() -> Outcome {
    let mut rng = seeded(2);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut trials = 0;
    while trials < 1000 {
        let (s, scores) = random_pair(trials, &mut rng);
        let mass: f64 = s.iter().sum();
        if mass <= 0.0 || mass >= s.len() as f64 {
            continue;
        }
        let auc = auc_spu(&s, &scores).map_err(e2s)?;
        let bound = auc_spu_bound(&s).map_err(e2s)?;
        worst = worst.max(auc - bound);
        if auc > bound + 1e-9 {
            violations += 1;
        }
        trials += 1;
    }
    ensure(violations == 0, || format!("{violations} of 1000 pairs exceed the bound"))?;
    let n = 10_001;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let bound = auc_spu_bound(&grid).map_err(e2s)?;
    let off = (bound - 5.0 / 6.0).abs();
    ensure(off <= 0.005, || format!("uniform-grid bound {bound} is {off} from 5/6"))?;
    Ok(format!(
        "0/1000 violations, max AUC_SPU - bound {worst:.3e}; uniform grid bound {bound:.6}"
    ))
}

fn a3_linear_relation() -> Outcome {
    let ds = gen_gscar(&GscarConfig {
        n: 100_000,
        pi: 0.1,
        seed: 3,
    })
    .map_err(e2s)?;
    let s = ds.soft_labels();
    let y = ds.true_labels().map_err(e2s)?;
    let scores: Vec<f64> = ds.features().map(|x| x[0] + 0.5 * x[1]).collect();
    let stats = ClassStats::estimate(&s, &y).map_err(e2s)?;
    let k = mixture_coefficients(stats.pi, stats.s_p, stats.s_n).map_err(e2s)?;
    let spu = roc_spu(&s, &scores).map_err(e2s)?;
    let real = real_roc(&y, &scores).map_err(e2s)?;
    ensure(spu.points().len() == real.points().len(), || {
        "SPU and real sweeps have different lengths".into()
    })?;
    let mut worst: f64 = 0.0;
    for (p, r) in spu.points().iter().zip(real.points()) {
        let tpr = (p.y - (k.a * r.y + k.b * r.x)).abs();
        let fpr = (p.x - (k.c * r.y + k.d * r.x)).abs();
        worst = worst.max(tpr).max(fpr);
    }
    ensure(worst <= 0.02, || format!("rate deviation {worst} > 0.02"))?;
    let auc_dev = (spu.auc() - k.map_auc(real.auc())).abs();
    ensure(auc_dev <= 0.02, || format!("AUC deviation {auc_dev} > 0.02"))?;
    Ok(format!(
        "{} thresholds, max rate deviation {worst:.4}, AUC deviation {auc_dev:.4}",
        spu.points().len()
    ))
}

fn a4_calibration() -> Outcome {
    let ds = gen_gscar(&GscarConfig {
        n: 200_000,
        pi: 0.1,
        seed: 4,
    })
    .map_err(e2s)?;
    let bins = empirical_calibration(&ds.soft_labels(), &ds.true_labels().map_err(e2s)?).map_err(e2s)?;
    let mut parts = Vec::new();
    for level in [0.25, 0.5, 0.75] {
        let bin = bins
            .iter()
            .find(|b| b.soft_label == level)
            .ok_or_else(|| format!("no samples at S = {level}"))?;
        let off = (bin.positive_rate - level).abs();
        ensure(off <= 0.02, || {
            format!("P(Y=1|S={level}) = {} (n = {})", bin.positive_rate, bin.count)
        })?;
        parts.push(format!("S={level}: {:.4}", bin.positive_rate));
    }
    Ok(parts.join(", "))
}

fn a5_threshold_frontier() -> Outcome {
    let mut rng = seeded(5);
    let mut checked = 0;
    for i in 0..60 {
        let cells = 1 + i % 12;
        let problem = random_problem(cells, &mut rng).map_err(e2s)?;
        let frontier = exhaustive_frontier(&problem, CurveKind::Spu).map_err(e2s)?;
        for mask in problem.threshold_classifiers(CurveKind::Spu) {
            let (fpr, tpr) = problem.rates(mask, CurveKind::Spu);
            ensure(frontier.contains(fpr, tpr, 1e-9), || {
                format!("problem {i}: eta_s threshold {mask:#b} at ({fpr}, {tpr}) is off the frontier")
            })?;
            checked += 1;
        }
    }
    Ok(format!("60 problems, {checked} threshold classifiers on the frontier"))
}

fn a6_mela() -> Outcome {
    let mut rng = seeded(6);
    let links = [
        Link::IDENTITY,
        Link::Affine {
            intercept: 0.1,
            slope: 0.8,
        },
        Link::LogisticWarp { steepness: 4.0 },
    ];
    for i in 0..30 {
        let problem = mela_problem(8 + i % 5, links[i % 3], &mut rng).map_err(e2s)?;
        let report = verify_mela_optimality(&problem).map_err(e2s)?;
        ensure(report.passed, || {
            format!(
                "MELA problem {i}: only SPU-optimal {:?}, only real-optimal {:?}",
                report.only_spu, report.only_real
            )
        })?;
    }
    let mut parts = vec!["30 MELA problems identical".to_string()];
    for eps in [0.02, 0.05, 0.1] {
        let mut worst_ratio: f64 = 0.0;
        for i in 0..100 {
            let problem = noisy_mela_problem(6 + i % 7, Link::IDENTITY, eps, &mut rng).map_err(e2s)?;
            let m = slice_density(&problem, 2.0 * eps);
            let report = verify_noisy_gap(&problem, eps, 1.0, m).map_err(e2s)?;
            ensure(report.passed, || {
                format!(
                    "eps {eps}, problem {i}: tpr deficit {}, fpr excess {}, auc gap {} vs bounds {} / {}; {:?}",
                    report.max_tpr_deficit,
                    report.max_fpr_excess,
                    report.auc_gap,
                    report.rate_bound,
                    report.auc_bound,
                    report.precondition_violations
                )
            })?;
            if report.rate_bound > 0.0 {
                let r = (report.max_tpr_deficit.max(report.max_fpr_excess) / report.rate_bound)
                    .max(report.auc_gap / report.auc_bound);
                worst_ratio = worst_ratio.max(r);
            }
        }
        parts.push(format!("eps {eps}: 100/100 within bounds (max gap/bound {worst_ratio:.3})"));
    }
    Ok(parts.join("; "))
}

fn a7_direction() -> Outcome {
    let mut wins = 0;
    let mut deltas = Vec::new();
    for seed in 0..10u64 {
        let cfg: ExperimentConfig = serde_json::from_value(serde_json::json!({
            "dataset": { "generator": "pu_benchmark", "n": 10000, "pi": 0.3 },
            "soft_labels": { "kind": "column" },
            "model": { "architecture": { "kind": "linear_logistic" } },
            "seed": seed
        }))
        .map_err(e2s)?;
        let outcome = run_experiment(&cfg).map_err(e2s)?;
        let delta = outcome
            .report
            .real_auc_delta
            .ok_or("benchmark report lacks a real AUC delta")?;
        wins += (delta > 0.0) as usize;
        deltas.push(delta);
    }
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let detail = format!(
        "soft arm wins {wins}/10, mean delta {mean:.4}, deltas [{}]",
        deltas.iter().map(|d| format!("{d:+.4}")).collect::<Vec<_>>().join(", ")
    );
    ensure(wins >= 9 && mean > 0.01, || detail.clone())?;
    Ok(detail)
}

fn binary_target(n: usize, means: &[f64], seed: u64) -> Result<SoftDataset, String> {
    let levels: Vec<f64> = means.to_vec();
    let mela = gen_mela(&MelaConfig {
        n,
        eta: EtaSpec {
            domain: FeatureDomain::Discrete,
            levels,
        },
        link: Link::IDENTITY,
        epsilon: 0.0,
        c_h: 1.0,
        seed,
    })
    .map_err(e2s)?;
    Ok(mela.dataset)
}

fn relative_gradient_error(model: &ScoringModel, batch: &SoftDataset, l2: f64) -> Result<f64, String> {
    let analytic = loss_gradient(model, batch, l2).map_err(e2s)?;
    let h = 1e-5;
    let mut numeric = Vec::with_capacity(analytic.len());
    for j in 0..model.params.len() {
        let mut plus = model.clone();
        plus.params[j] += h;
        let mut minus = model.clone();
        minus.params[j] -= h;
        numeric.push((plus.loss(batch, l2) - minus.loss(batch, l2)) / (2.0 * h));
    }
    let scale = analytic
        .iter()
        .chain(&numeric)
        .fold(0.0f64, |m, g| m.max(g.abs()))
        .max(1e-12);
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max))
}

fn a8_trainer() -> Outcome {
    let means = [0.2, 0.7];
    let ds = binary_target(50_000, &means, 8)?;
    let trained = train(&ds, Architecture::LinearLogistic, &TrainConfig::default()).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for (cell, &want) in means.iter().enumerate() {
        let got = trained.model.score(&[cell as f64]);
        worst = worst.max((got - want).abs());
    }
    ensure(worst <= 0.02, || format!("linear scores miss the cell means by {worst}"))?;

    let mut rng = seeded(80);
    let mut worst_grad: f64 = 0.0;
    for i in 0..100 {
        let dim = rng.random_range(1..5);
        let arch = if i % 2 == 0 {
            Architecture::LinearLogistic
        } else {
            Architecture::Mlp {
                hidden: rng.random_range(1..6),
            }
        };
        let params = (0..arch.param_count(dim))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let model = ScoringModel::from_params(arch, dim, params).map_err(e2s)?;
        let samples = (0..rng.random_range(1..20))
            .map(|_| {
                let x = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                SoftSample::new(x, rng.random(), None)
            })
            .collect();
        let names = (0..dim).map(|j| format!("x{j}")).collect();
        let batch = SoftDataset::new(samples, names, softpu::dataset::Provenance::Loaded).map_err(e2s)?;
        let l2 = if i % 3 == 0 { 0.1 } else { 0.0 };
        worst_grad = worst_grad.max(relative_gradient_error(&model, &batch, l2)?);
    }
    ensure(worst_grad <= 1e-4, || format!("gradient relative error {worst_grad:e} > 1e-4"))?;
    Ok(format!(
        "max |score - E[S|X]| {worst:.4}; max gradient relative error {worst_grad:.2e} over 100 checks"
    ))
}

fn a9_bayes_labeler() -> Outcome {
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let uniform = DiscretePrior::uniform(grid).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for n in 0..=20u32 {
        for k in 0..=n {
            let rec = CheckRecord::new(n, k).map_err(e2s)?;
            let got = posterior_pass_probability(&rec, &uniform).map_err(e2s)?;
            worst = worst.max((got - (k as f64 + 1.0) / (n as f64 + 2.0)).abs());
        }
    }
    ensure(worst <= 1e-3, || format!("uniform-prior posterior mean off by {worst}"))?;

    let mut parts = vec![format!("uniform prior max error {worst:.2e}")];
    let mut rng = seeded(9);
    for theta in [0.3, 0.8] {
        let records: Vec<CheckRecord> = (0..2000)
            .map(|_| {
                let n = rng.random_range(1..=20u32);
                let k = (0..n).filter(|_| rng.random::<f64>() < theta).count() as u32;
                CheckRecord::new(n, k)
            })
            .collect::<softpu::Result<_>>()
            .map_err(e2s)?;
        let fit = fit_prior(&records, &FitOptions::default()).map_err(e2s)?;
        let mass = fit.prior.mass_within(theta - 0.1, theta + 0.1);
        ensure(mass >= 0.8, || format!("theta {theta}: only {mass} mass within 0.1"))?;
        let rising = fit.objective_trace.windows(2).filter(|w| w[1] > w[0]).count();
        ensure(rising == 0, || format!("theta {theta}: objective rose {rising} times"))?;
        let w = fit.prior.weights();
        let total: f64 = w.iter().sum();
        ensure((total - 1.0).abs() <= 1e-12 && w.iter().all(|&v| v >= 0.0), || {
            format!("theta {theta}: weights sum to {total}")
        })?;
        parts.push(format!(
            "theta {theta}: mass {mass:.3} in {} iterations",
            fit.iterations
        ));
    }
    Ok(parts.join("; "))
}

fn write_config(dir: &Path, name: &str, value: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn run_cli(sub: &str, config: &Path, out: &Path) -> Result<(), String> {
    let output = Command::new(env!("CARGO_BIN_EXE_softpu"))
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("SOFTPU_OUT_DIR")
        .output()
        .map_err(e2s)?;
    ensure(output.status.success(), || {
        format!("{sub} failed: {}", String::from_utf8_lossy(&output.stderr))
    })
}

/// Every file in `dir`, with the wall clock removed from JSON reports.
fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(e2s)? {
        let path = entry.map_err(e2s)?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let mut bytes = fs::read(&path).map_err(e2s)?;
        if name == "report.json" {
            let mut v: serde_json::Value = serde_json::from_slice(&bytes).map_err(e2s)?;
            v["wall_clock_seconds"] = 0.0.into();
            bytes = serde_json::to_vec(&v).map_err(e2s)?;
        }
        files.push((name, bytes));
    }
    files.sort();
    Ok(files)
}

fn a10_determinism() -> Outcome {
    // Library level: generators and trainers.
    let same = |label: &str, a: String, b: String| ensure(a == b, || format!("{label} differs between runs"));
    let gscar = || gen_gscar(&GscarConfig { n: 2000, pi: 0.2, seed: 10 }).map(|d| format!("{d:?}"));
    same("gen_gscar", gscar().map_err(e2s)?, gscar().map_err(e2s)?)?;
    let bench = || gen_pu_benchmark(&PuBenchmarkConfig::new(2000, 0.3, 10)).map(|d| format!("{d:?}"));
    same("gen_pu_benchmark", bench().map_err(e2s)?, bench().map_err(e2s)?)?;
    let labelled = gen_gscar(&GscarConfig { n: 2000, pi: 0.2, seed: 11 }).map_err(e2s)?;
    let pu = || pu_labelize(&labelled, 10).map(|d| format!("{d:?}"));
    same("pu_labelize", pu().map_err(e2s)?, pu().map_err(e2s)?)?;
    let mela = || binary_target(2000, &[0.1, 0.5, 0.9], 10).map(|d| format!("{d:?}"));
    same("gen_mela", mela()?, mela()?)?;
    let data = binary_target(2000, &[0.1, 0.5, 0.9], 12)?;
    for arch in [Architecture::LinearLogistic, Architecture::Mlp { hidden: 4 }] {
        let cfg = TrainConfig {
            epochs: 3,
            seed: 10,
            ..TrainConfig::default()
        };
        let run = || train(&data, arch, &cfg).and_then(|m| m.to_json());
        same("trainer", run().map_err(e2s)?, run().map_err(e2s)?)?;
    }

    // CLI level: each subcommand twice into separate directories.
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let dir = tmp.path();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures");
    let records = fixtures.join("check_records.csv");
    let configs = [
        (
            "generate",
            write_config(
                dir,
                "generate.json",
                serde_json::json!({
                    "dataset": { "generator": "pu_benchmark", "n": 500, "pi": 0.3 },
                    "seed": 1
                }),
            ),
        ),
        (
            "experiment",
            write_config(
                dir,
                "experiment.json",
                serde_json::json!({
                    "dataset": { "generator": "gscar", "n": 2000, "pi": 0.2 },
                    "model": { "architecture": { "kind": "mlp", "hidden": 4 }, "train": { "learning_rate": 0.5, "epochs": 3, "batch_size": 64 } },
                    "seed": 1
                }),
            ),
        ),
        (
            "fit-prior",
            write_config(
                dir,
                "fit_prior.json",
                serde_json::json!({ "records": records, "options": { "grid_size": 51, "lambda": 0.001, "step_size": 0.5, "max_iters": 300, "tol": 1e-10 } }),
            ),
        ),
        (
            "frontier",
            write_config(
                dir,
                "frontier.json",
                serde_json::json!({ "random": { "cells": 8, "family": "noisy", "epsilon": 0.05 }, "epsilon": 0.05, "c_h": 1.0, "seed": 1 }),
            ),
        ),
    ];
    let mut compared = Vec::new();
    for (sub, cfg) in &configs {
        let a = dir.join(format!("{sub}-a"));
        let b = dir.join(format!("{sub}-b"));
        run_cli(sub, cfg, &a)?;
        run_cli(sub, cfg, &b)?;
        ensure(snapshot(&a)? == snapshot(&b)?, || format!("{sub} outputs differ"))?;
        compared.push(*sub);
    }
    // eval and bound-check consume the generated data and a trained model.
    let data_csv = dir.join("generate-a/dataset.csv");
    let model = dir.join("experiment-a/soft_arm_model.json");
    let eval_data = dir.join("eval_data.csv");
    fs::write(
        &eval_data,
        {
            let ds = gen_gscar(&GscarConfig { n: 800, pi: 0.2, seed: 2 }).map_err(e2s)?;
            let mut buf = Vec::new();
            softpu::dataset::write_csv(&ds, &mut buf).map_err(e2s)?;
            buf
        },
    )
    .map_err(e2s)?;
    let eval_cfg = write_config(dir, "eval.json", serde_json::json!({ "dataset": eval_data, "model": model }));
    let bound_cfg = write_config(dir, "bound.json", serde_json::json!({ "dataset": eval_data, "model": model }));
    for (sub, cfg) in [("eval", &eval_cfg), ("bound-check", &bound_cfg)] {
        let a = dir.join(format!("{sub}-a"));
        let b = dir.join(format!("{sub}-b"));
        run_cli(sub, cfg, &a)?;
        run_cli(sub, cfg, &b)?;
        ensure(snapshot(&a)? == snapshot(&b)?, || format!("{sub} outputs differ"))?;
        compared.push(sub);
    }
    ensure(data_csv.exists(), || "generate wrote no dataset.csv".into())?;
    Ok(format!(
        "4 generators, 2 trainers, subcommands {} byte-identical",
        compared.join(", ")
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("A1", "metric exactness", a1_metric_exactness, 1),
        ("A2", "AUC_SPU upper bound", a2_bound, 30),
        ("A3", "GSCAR linear relation", a3_linear_relation, 60),
        ("A4", "GSCAR calibration", a4_calibration, 60),
        ("A5", "eta_s thresholds on the SPU frontier", a5_threshold_frontier, 60),
        ("A6", "MELA and noisy-MELA frontiers", a6_mela, 120),
        ("A7", "soft arm beats hard-label baseline", a7_direction, 300),
        ("A8", "trainer convergence and gradients", a8_trainer, 120),
        ("A9", "Bayes labeler and prior fit", a9_bayes_labeler, 60),
        ("A10", "determinism", a10_determinism, 300),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed > Duration::from_secs(budget) {
                Err(format!("{detail}; took {elapsed:.1?}, budget {budget} s"))
            } else {
                Ok(detail)
            }
        });
        match result {
            Ok(detail) => println!("{id} PASS  {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL  {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
