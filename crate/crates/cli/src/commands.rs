use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use softpu::dataset::{gen_gscar, gen_mela, gen_pu_benchmark, load_csv, write_csv, CsvSchema, Link, PuBenchmarkConfig};
use softpu::experiment::{run_experiment, DatasetSpec, ExperimentConfig, Pipeline};
use softpu::metrics::{auc_spu, auc_spu_bound, fpr_spu, real_rates, real_roc, roc_spu, tpr_spu, CurveKind};
use softpu::oracle::{
    exhaustive_frontier, mela_problem, noisy_mela_problem, random_problem, slice_density, verify_mela_optimality,
    verify_noisy_gap, DiscreteProblem, Frontier, MelaReport, NoisyGapReport, FRONTIER_TOL,
};
use softpu::rng::{derive_seed, seeded};
use softpu::soft_labeler::{bayes_soft_label, fit_prior as fit, read_records_csv, FitOptions, PriorFit};
use softpu::trainer::{threshold_classify, TrainedModel};
use softpu::SoftDataset;

const DEFAULT_OUT_DIR: &str = "softpu-out";

pub struct Context {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub env_out: Option<PathBuf>,
}

impl Context {
    /// Parses the config file, with `--seed` written over its `seed` field.
    fn read_config<T: DeserializeOwned>(&self) -> Result<T> {
        let path = self.config.as_ref().context("--config <path> is required")?;
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("config {} is not valid JSON", path.display()))?;
        if let (Some(seed), Some(obj)) = (self.seed, value.as_object_mut()) {
            obj.insert("seed".into(), seed.into());
        }
        serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Relative paths in a config are taken relative to the config file.
    fn resolve(&self, p: &Path) -> PathBuf {
        match self.config.as_ref().and_then(|c| c.parent()) {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// `--out`, else the environment override, else the config, else the default.
    fn out_dir(&self, from_config: Option<&Path>) -> Result<PathBuf> {
        let dir = self
            .out
            .clone()
            .or_else(|| self.env_out.clone())
            .or_else(|| from_config.map(|p| self.resolve(p)))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(dir)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("invalid JSON in {}", path.display()))
}

fn write_dataset(path: &Path, ds: &SoftDataset) -> Result<()> {
    let mut out = create(path)?;
    write_csv(ds, &mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct GenerateConfig {
    dataset: DatasetSpec,
    seed: Option<u64>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct MelaProvenance {
    link: Link,
    epsilon: f64,
    c_h: f64,
    cell_eta: Vec<f64>,
    cell_link: Vec<f64>,
    cell_mean_s: Vec<f64>,
}

#[derive(Serialize)]
struct ProvenanceRecord {
    provenance: String,
    seed: u64,
    /// The spec as run, with the derived generator seed filled in.
    dataset: DatasetSpec,
    rows: usize,
    features: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mela: Option<MelaProvenance>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    soft_label_sources: Vec<String>,
}

/// Writes `dataset.csv` and `provenance.json`. The generator seed is derived
/// from the master seed exactly as `experiment` derives it.
pub fn generate(ctx: &Context) -> Result<()> {
    let cfg: GenerateConfig = ctx.read_config()?;
    let seed = cfg.seed.context("seed is mandatory (config `seed` or --seed)")?;
    let gen_seed = derive_seed(seed, 0);
    let mut mela = None;
    let mut sources = Vec::new();
    let (ds, spec) = match cfg.dataset {
        DatasetSpec::Gscar(c) => {
            let c = softpu::dataset::GscarConfig { seed: gen_seed, ..c };
            (gen_gscar(&c)?, DatasetSpec::Gscar(c))
        }
        DatasetSpec::Mela(c) => {
            let c = softpu::dataset::MelaConfig { seed: gen_seed, ..c };
            let out = gen_mela(&c)?;
            mela = Some(MelaProvenance {
                link: c.link,
                epsilon: c.epsilon,
                c_h: c.c_h,
                cell_eta: out.cell_eta.clone(),
                cell_link: out.cell_link.clone(),
                cell_mean_s: out.cell_mean_s.clone(),
            });
            (out.dataset, DatasetSpec::Mela(c))
        }
        DatasetSpec::PuBenchmark(c) => {
            let c = PuBenchmarkConfig { seed: gen_seed, ..c };
            sources = c.source_features();
            (gen_pu_benchmark(&c)?, DatasetSpec::PuBenchmark(c))
        }
        DatasetSpec::Csv { .. } => bail!("dataset: generate needs a generator, not a CSV source"),
    };
    let dir = ctx.out_dir(cfg.output_dir.as_deref())?;
    write_dataset(&dir.join("dataset.csv"), &ds)?;
    write_json(
        &dir.join("provenance.json"),
        &ProvenanceRecord {
            provenance: ds.provenance().to_string(),
            seed,
            dataset: spec,
            rows: ds.len(),
            features: ds.feature_names().to_vec(),
            mela,
            soft_label_sources: sources,
        },
    )?;
    println!("wrote {} rows to {}", ds.len(), dir.join("dataset.csv").display());
    Ok(())
}

/// Writes `report.json`, one CSV per ROC curve, and both arms' models.
pub fn experiment(ctx: &Context) -> Result<()> {
    let mut cfg: ExperimentConfig = ctx.read_config()?;
    if let DatasetSpec::Csv { path, .. } = &mut cfg.dataset {
        *path = ctx.resolve(path);
    }
    let dir = ctx.out_dir(cfg.output_dir.as_deref())?;
    let outcome = run_experiment(&cfg)?;
    for (stem, curve) in &outcome.curves {
        let mut out = create(&dir.join(format!("{stem}.csv")))?;
        curve.write_csv(&mut out)?;
        out.flush()?;
    }
    write_json(&dir.join("soft_arm_model.json"), &outcome.soft_model)?;
    write_json(&dir.join("baseline_model.json"), &outcome.baseline_model)?;
    write_json(&dir.join("report.json"), &outcome.report)?;
    let r = &outcome.report;
    match r.real_auc_delta {
        Some(d) => println!("soft-arm minus baseline test AUC: {d:+.4}"),
        None => println!("no true labels: real AUC not reported"),
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelFile {
    Pipeline(Pipeline),
    Bare(TrainedModel),
}

impl ModelFile {
    fn scores(&self, data: &SoftDataset) -> Result<Vec<f64>> {
        Ok(match self {
            ModelFile::Pipeline(p) => p.scores(data)?,
            ModelFile::Bare(m) => m.model.scores(data)?,
        })
    }
}

#[derive(Deserialize)]
struct EvalConfig {
    dataset: PathBuf,
    #[serde(default)]
    schema: Option<CsvSchema>,
    model: PathBuf,
    #[serde(default = "default_thresholds")]
    thresholds: Vec<f64>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

fn default_thresholds() -> Vec<f64> {
    vec![0.5]
}

#[derive(Serialize)]
struct EvalRates {
    threshold: f64,
    tpr_spu: f64,
    fpr_spu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tpr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fpr: Option<f64>,
}

#[derive(Serialize)]
struct EvalReport {
    rows: usize,
    auc_spu: f64,
    auc_spu_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    auc: Option<f64>,
    rates: Vec<EvalRates>,
}

/// Writes `roc_spu.csv`, `roc.csv` when true labels exist, and `eval.json`.
pub fn eval(ctx: &Context) -> Result<()> {
    let cfg: EvalConfig = ctx.read_config()?;
    let data = load_csv(ctx.resolve(&cfg.dataset), cfg.schema.as_ref())?;
    let model: ModelFile = read_json(&ctx.resolve(&cfg.model))?;
    let scores = model.scores(&data)?;
    let soft = data.soft_labels();
    let truth = data.has_true_labels().then(|| data.true_labels()).transpose()?;

    let dir = ctx.out_dir(cfg.output_dir.as_deref())?;
    let spu = roc_spu(&soft, &scores)?;
    let mut out = create(&dir.join("roc_spu.csv"))?;
    spu.write_csv(&mut out)?;
    out.flush()?;
    let mut auc = None;
    if let Some(y) = &truth {
        let curve = real_roc(y, &scores)?;
        let mut out = create(&dir.join("roc.csv"))?;
        curve.write_csv(&mut out)?;
        out.flush()?;
        auc = Some(curve.auc());
    }
    let rates = cfg
        .thresholds
        .iter()
        .map(|&t| {
            let pred = threshold_classify(&scores, t);
            let real = truth.as_ref().map(|y| real_rates(y, &pred)).transpose()?;
            Ok(EvalRates {
                threshold: t,
                tpr_spu: tpr_spu(&soft, &pred)?,
                fpr_spu: fpr_spu(&soft, &pred)?,
                tpr: real.map(|r| r.tpr),
                fpr: real.map(|r| r.fpr),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = EvalReport {
        rows: data.len(),
        auc_spu: spu.auc(),
        auc_spu_bound: auc_spu_bound(&soft)?,
        auc,
        rates,
    };
    write_json(&dir.join("eval.json"), &report)?;
    println!("AUC_SPU {:.6} (bound {:.6})", report.auc_spu, report.auc_spu_bound);
    Ok(())
}

#[derive(Deserialize)]
struct BoundCheckConfig {
    dataset: PathBuf,
    #[serde(default)]
    schema: Option<CsvSchema>,
    /// CSV with a `score` column, one row per sample.
    #[serde(default)]
    scores: Option<PathBuf>,
    /// Alternatively, a saved model to score the dataset with.
    #[serde(default)]
    model: Option<PathBuf>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct BoundCheck {
    rows: usize,
    auc_spu: f64,
    bound: f64,
    margin: f64,
    holds: bool,
}

fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == "score")
        .context("scores file needs a `score` column")?;
    rdr.records()
        .enumerate()
        .map(|(i, r)| {
            r?.get(col)
                .and_then(|v| v.parse::<f64>().ok())
                .with_context(|| format!("scores row {}: not a number", i + 1))
        })
        .collect()
}

/// Writes `bound_check.json`; fails when AUC_SPU exceeds the bound.
pub fn bound_check(ctx: &Context) -> Result<()> {
    let cfg: BoundCheckConfig = ctx.read_config()?;
    let data = load_csv(ctx.resolve(&cfg.dataset), cfg.schema.as_ref())?;
    let scores = match (&cfg.scores, &cfg.model) {
        (Some(p), None) => read_scores(&ctx.resolve(p))?,
        (None, Some(p)) => read_json::<ModelFile>(&ctx.resolve(p))?.scores(&data)?,
        _ => bail!("bound-check needs exactly one of `scores` or `model`"),
    };
    let soft = data.soft_labels();
    let auc = auc_spu(&soft, &scores)?;
    let bound = auc_spu_bound(&soft)?;
    let report = BoundCheck {
        rows: data.len(),
        auc_spu: auc,
        bound,
        margin: bound - auc,
        holds: auc <= bound + 1e-9,
    };
    let dir = ctx.out_dir(cfg.output_dir.as_deref())?;
    write_json(&dir.join("bound_check.json"), &report)?;
    println!("AUC_SPU {:.6} <= bound {:.6} (margin {:.6})", auc, bound, report.margin);
    if !report.holds {
        bail!("AUC_SPU {auc} exceeds the bound {bound}");
    }
    Ok(())
}

#[derive(Deserialize)]
struct FitPriorConfig {
    /// `user_id,n,k` rows.
    records: PathBuf,
    #[serde(default)]
    options: FitOptions,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

/// Writes `prior.json` (grid, weights, objective trace) and
/// `soft_labels.csv` with `1 - E[theta | n, k]` per user.
pub fn fit_prior(ctx: &Context) -> Result<()> {
    let cfg: FitPriorConfig = ctx.read_config()?;
    let path = ctx.resolve(&cfg.records);
    let file = File::open(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let rows = read_records_csv(file)?;
    let records: Vec<_> = rows.iter().map(|(_, r)| *r).collect();
    let result: PriorFit = fit(&records, &cfg.options)?;
    let dir = ctx.out_dir(cfg.output_dir.as_deref())?;
    write_json(&dir.join("prior.json"), &result)?;
    let mut out = create(&dir.join("soft_labels.csv"))?;
    writeln!(out, "user_id,n,k,soft_label")?;
    for (user, r) in &rows {
        writeln!(out, "{},{},{},{}", user, r.n, r.k, bayes_soft_label(r, &result.prior)?)?;
    }
    out.flush()?;
    println!(
        "{} records, {} iterations, objective {:.8}{}",
        records.len(),
        result.iterations,
        result.objective_trace.last().copied().unwrap_or(f64::NAN),
        if result.converged { "" } else { " (not converged)" }
    );
    Ok(())
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum Family {
    Random,
    Mela,
    Noisy,
}

#[derive(Deserialize)]
struct RandomProblemSpec {
    cells: usize,
    family: Family,
    #[serde(default = "identity")]
    link: Link,
    #[serde(default)]
    epsilon: f64,
}

fn identity() -> Link {
    Link::IDENTITY
}

#[derive(Deserialize)]
struct FrontierConfig {
    #[serde(default)]
    problem: Option<PathBuf>,
    #[serde(default)]
    random: Option<RandomProblemSpec>,
    /// Runs the noisy-gap check with this `epsilon` when given.
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default = "one")]
    c_h: f64,
    /// Slice-density constant; defaults to the smallest the problem admits.
    #[serde(default)]
    m: Option<f64>,
    seed: Option<u64>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize)]
struct FrontierReport {
    problem: DiscreteProblem,
    real: Frontier,
    spu: Frontier,
    /// Every `eta_s` threshold lies on the substitute frontier.
    spu_thresholds_on_frontier: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    mela: Option<MelaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mela_rejected: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noisy: Option<NoisyGapReport>,
}

fn write_frontier_csv(path: &Path, f: &Frontier) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "fpr,tpr")?;
    for p in &f.points {
        writeln!(out, "{},{}", p.fpr, p.tpr)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `frontier.json` and one CSV per frontier.
pub fn frontier(ctx: &Context) -> Result<()> {
    let cfg: FrontierConfig = ctx.read_config()?;
    let problem = match (&cfg.problem, &cfg.random) {
        (Some(p), None) => read_json::<DiscreteProblem>(&ctx.resolve(p))?,
        (None, Some(spec)) => {
            let seed = cfg.seed.context("seed is mandatory for random problems")?;
            let mut rng = seeded(seed);
            match spec.family {
                Family::Random => random_problem(spec.cells, &mut rng)?,
                Family::Mela => mela_problem(spec.cells, spec.link, &mut rng)?,
                Family::Noisy => noisy_mela_problem(spec.cells, spec.link, spec.epsilon, &mut rng)?,
            }
        }
        _ => bail!("frontier needs exactly one of `problem` or `random`"),
    };
    let real = exhaustive_frontier(&problem, CurveKind::Real)?;
    let spu = exhaustive_frontier(&problem, CurveKind::Spu)?;
    let spu_thresholds_on_frontier = problem.threshold_classifiers(CurveKind::Spu).into_iter().all(|mask| {
        let (x, y) = problem.rates(mask, CurveKind::Spu);
        spu.contains(x, y, FRONTIER_TOL)
    });
    let (mela, mela_rejected) = match verify_mela_optimality(&problem) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let noisy = cfg
        .epsilon
        .map(|eps| {
            let m = cfg.m.unwrap_or_else(|| slice_density(&problem, 2.0 * eps / cfg.c_h));
            verify_noisy_gap(&problem, eps, cfg.c_h, m)
        })
        .transpose()?;

    let dir = ctx.out_dir(cfg.output_dir.as_deref())?;
    write_frontier_csv(&dir.join("frontier_real.csv"), &real)?;
    write_frontier_csv(&dir.join("frontier_spu.csv"), &spu)?;
    let report = FrontierReport {
        problem,
        real,
        spu,
        spu_thresholds_on_frontier,
        mela,
        mela_rejected,
        noisy,
    };
    write_json(&dir.join("frontier.json"), &report)?;
    println!(
        "{} cells; eta_s thresholds on substitute frontier: {}",
        report.problem.len(),
        report.spu_thresholds_on_frontier
    );
    if let Some(n) = &report.noisy {
        println!(
            "noisy gaps: tpr {:.3e}, fpr {:.3e}, auc {:.3e} (bounds {:.3e}, {:.3e})",
            n.max_tpr_deficit, n.max_fpr_excess, n.auc_gap, n.rate_bound, n.auc_bound
        );
    }
    Ok(())
}
