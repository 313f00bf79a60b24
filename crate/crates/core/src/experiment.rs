//! Config-driven experiments: a soft-label arm against a hard-label baseline.
//!
//! The soft arm trains on soft labels with the soft-label source features
//! removed. The baseline treats only labelled samples (`S = 1`) as positive
//! and keeps every feature. Both arms share one seeded 70/15/15 split;
//! substitute metrics are reported on validation and real metrics on test.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{
    gen_gscar, gen_mela, gen_pu_benchmark, load_csv, ClassStats, CsvSchema, GscarConfig, MelaConfig, Provenance,
    PuBenchmarkConfig, SoftDataset,
};
use crate::error::{Error, Result};
use crate::metrics::{auc_spu, auc_spu_bound, fpr_spu, mixture_coefficients, real_auc, real_rates, real_roc, roc_spu, tpr_spu, RocCurve};
use crate::rng::{derive_seed, seeded};
use crate::soft_labeler::{bayes_soft_label, fit_prior, rule_soft_label, CheckRecord, FitOptions, RuleStats};
use crate::trainer::{threshold_classify, train, Architecture, TrainConfig, TrainedModel};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const MIN_SPLIT_SIZE: usize = 10;

/// Stream offsets under the master seed.
const DATA_STREAM: u64 = 0;
const SPLIT_STREAM: u64 = 2;
const SOFT_ARM_STREAM: u64 = 3;
const BASELINE_STREAM: u64 = 4;

/// Where the data comes from. Generator seeds are replaced by one derived
/// from the experiment seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum DatasetSpec {
    Gscar(GscarConfig),
    Mela(MelaConfig),
    PuBenchmark(PuBenchmarkConfig),
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: Option<CsvSchema>,
    },
}

impl DatasetSpec {
    /// Builds the dataset, plus the names of the features the generator
    /// used to make its soft labels.
    pub fn load(&self, seed: u64) -> Result<(SoftDataset, Vec<String>)> {
        let seed = derive_seed(seed, DATA_STREAM);
        Ok(match self {
            DatasetSpec::Gscar(cfg) => (gen_gscar(&GscarConfig { seed, ..cfg.clone() })?, Vec::new()),
            DatasetSpec::Mela(cfg) => (gen_mela(&MelaConfig { seed, ..cfg.clone() })?.dataset, Vec::new()),
            DatasetSpec::PuBenchmark(cfg) => {
                let cfg = PuBenchmarkConfig { seed, ..cfg.clone() };
                (gen_pu_benchmark(&cfg)?, cfg.source_features())
            }
            DatasetSpec::Csv { path, schema } => {
                if !path.exists() {
                    return Err(Error::config("dataset.path", format!("{} does not exist", path.display())));
                }
                (load_csv(path, schema.as_ref())?, Vec::new())
            }
        })
    }
}

/// How soft labels are obtained. Rule and Bayes labels never lower an
/// existing label, so labelled positives stay at 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SoftLabelSpec {
    /// Use the dataset's soft-label column as is.
    #[default]
    Column,
    /// `rule_column` holds each sample's rule index; other values mean no
    /// rule applies.
    Rule { rule_column: String, rules: Vec<RuleStats> },
    /// Per-sample check records in two columns; the prior is fitted on all
    /// samples.
    Bayes {
        trials_column: String,
        passes_column: String,
        #[serde(default)]
        fit: FitOptions,
    },
}

impl SoftLabelSpec {
    /// Relabels `data`; returns it with the columns the labels came from.
    pub fn apply(&self, data: SoftDataset) -> Result<(SoftDataset, Vec<String>)> {
        let column = |name: &str| {
            data.feature_index(name)
                .ok_or_else(|| Error::config("soft_labels", format!("no feature column '{name}'")))
        };
        match self {
            SoftLabelSpec::Column => Ok((data, Vec::new())),
            SoftLabelSpec::Rule { rule_column, rules } => {
                let j = column(rule_column)?;
                let per_rule = rules.iter().map(rule_soft_label).collect::<Result<Vec<_>>>()?;
                let labels: Vec<f64> = data
                    .samples()
                    .iter()
                    .map(|s| {
                        let r = s.features[j];
                        let hit = (r >= 0.0 && r.fract() == 0.0)
                            .then(|| per_rule.get(r as usize))
                            .flatten()
                            .copied()
                            .unwrap_or(0.0);
                        s.soft_label.max(hit)
                    })
                    .collect();
                Ok((data.with_soft_labels(&labels)?, vec![rule_column.clone()]))
            }
            SoftLabelSpec::Bayes {
                trials_column,
                passes_column,
                fit,
            } => {
                let (jn, jk) = (column(trials_column)?, column(passes_column)?);
                let records = data
                    .samples()
                    .iter()
                    .enumerate()
                    .map(|(row, s)| {
                        let (n, k) = (s.features[jn], s.features[jk]);
                        if n < 0.0 || k < 0.0 || n.fract() != 0.0 || k.fract() != 0.0 {
                            return Err(Error::config(
                                "soft_labels",
                                format!("row {}: trials and passes must be non-negative integers", row + 1),
                            ));
                        }
                        CheckRecord::new(n as u32, k as u32)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let prior = fit_prior(&records, fit)?.prior;
                let labels = records
                    .iter()
                    .zip(data.samples())
                    .map(|(r, s)| Ok(s.soft_label.max(bayes_soft_label(r, &prior)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok((
                    data.with_soft_labels(&labels)?,
                    vec![trials_column.clone(), passes_column.clone()],
                ))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    /// The seed inside is replaced per arm.
    #[serde(default)]
    pub train: TrainConfig,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            architecture: Architecture::LinearLogistic,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSpec {
    /// Thresholds at which rates are reported.
    pub thresholds: Vec<f64>,
}

impl Default for EvaluationSpec {
    fn default() -> Self {
        Self {
            thresholds: vec![0.25, 0.5, 0.75],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub soft_labels: SoftLabelSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub evaluation: EvaluationSpec,
    /// Extra features hidden from the soft arm, on top of the soft-label
    /// sources the generator and labeler report.
    #[serde(default)]
    pub drop_features: Vec<String>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Hex SHA-256 of the canonical config JSON and the crate version.
    pub fn version_hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self)?);
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub split: Split,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRates {
    pub threshold: f64,
    pub split: Split,
    pub tpr_spu: f64,
    pub fpr_spu: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub name: String,
    pub features: Vec<String>,
    pub metrics: Vec<Metric>,
    pub thresholds: Vec<ThresholdRates>,
    pub loss_trace: Vec<f64>,
}

impl ArmReport {
    pub fn metric(&self, name: &str, split: Split) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.name == name && m.split == split)
            .map(|m| m.value)
    }
}

/// Linear map from real to substitute AUC, evaluated on test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub split: Split,
    pub pi: f64,
    pub s_p: f64,
    pub s_n: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Per arm: `(observed AUC_SPU, mapped real AUC)`.
    pub soft_arm: (f64, f64),
    pub baseline: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub version_hash: String,
    pub config: ExperimentConfig,
    pub provenance: Provenance,
    pub split_sizes: SplitSizes,
    /// Upper bound on AUC_SPU implied by the validation soft labels alone.
    pub auc_spu_bound: Metric,
    pub soft_arm: ArmReport,
    pub baseline: ArmReport,
    /// Soft-arm minus baseline real AUC on test, when true labels exist.
    pub real_auc_delta: Option<f64>,
    pub coefficients: Option<CoefficientTable>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    /// JSON with the wall-clock field zeroed, for byte comparisons.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.wall_clock_seconds = 0.0;
        Ok(serde_json::to_string_pretty(&copy)?)
    }
}

/// Report plus the ROC plot data behind it.
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    /// `(file stem, curve)`, e.g. `("soft_arm_validation_roc_spu", ..)`.
    pub curves: Vec<(String, RocCurve)>,
    pub soft_model: Pipeline,
    pub baseline_model: Pipeline,
}

/// Seeded 70/15/15 index split; each part must hold at least
/// [`MIN_SPLIT_SIZE`] samples.
pub fn split_indices(n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let n_train = n * 70 / 100;
    let n_val = n * 15 / 100;
    let n_test = n - n_train - n_val;
    for (split, size) in [("train", n_train), ("validation", n_val), ("test", n_test)] {
        if size < MIN_SPLIT_SIZE {
            return Err(Error::SplitTooSmall {
                split,
                size,
                min: MIN_SPLIT_SIZE,
            });
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded(seed));
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok((idx, val, test))
}

/// Per-feature centring and scaling fitted on a training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub features: Vec<String>,
    pub mean: Vec<f64>,
    /// Standard deviation, or 1 for constant features.
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn fit(train: &SoftDataset) -> Self {
        let d = train.feature_dim();
        let n = train.len() as f64;
        let mut mean = vec![0.0; d];
        for x in train.features() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for x in train.features() {
            for j in 0..d {
                var[j] += (x[j] - mean[j]).powi(2) / n;
            }
        }
        Self {
            features: train.feature_names().to_vec(),
            mean,
            scale: var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect(),
        }
    }

    /// The same statistics restricted to `names`.
    pub fn subset(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                self.features
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::config("features", format!("unknown feature '{n}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            features: names.to_vec(),
            mean: idx.iter().map(|&i| self.mean[i]).collect(),
            scale: idx.iter().map(|&i| self.scale[i]).collect(),
        })
    }

    /// Picks this scaler's columns from `data` by name and standardizes them.
    pub fn apply(&self, data: &SoftDataset) -> Result<SoftDataset> {
        data.select_features(&self.features)?.map_features(|x| {
            x.iter()
                .zip(self.mean.iter().zip(&self.scale))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
    }
}

/// A trained arm ready to score raw data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub scaler: Scaler,
    pub trained: TrainedModel,
}

impl Pipeline {
    pub fn scores(&self, data: &SoftDataset) -> Result<Vec<f64>> {
        self.trained.model.scores(&self.scaler.apply(data)?)
    }
}

struct ArmData<'a> {
    scaler: Scaler,
    train: SoftDataset,
    val: &'a SoftDataset,
    test: &'a SoftDataset,
}

#[allow(clippy::too_many_arguments)]
fn run_arm(
    name: &str,
    data: ArmData<'_>,
    val_soft: &[f64],
    test_soft: &[f64],
    test_truth: Option<&[bool]>,
    spec: &ModelSpec,
    seed: u64,
    thresholds: &[f64],
    curves: &mut Vec<(String, RocCurve)>,
) -> Result<(ArmReport, Pipeline, Vec<f64>)> {
    let cfg = TrainConfig { seed, ..spec.train.clone() };
    let trained = train(&data.scaler.apply(&data.train)?, spec.architecture, &cfg)?;
    let pipeline = Pipeline {
        scaler: data.scaler,
        trained,
    };
    let val_scores = pipeline.scores(data.val)?;
    let test_scores = pipeline.scores(data.test)?;

    let mut metrics = vec![
        Metric {
            name: "auc_spu".into(),
            split: Split::Validation,
            value: auc_spu(val_soft, &val_scores)?,
        },
        Metric {
            name: "auc_spu".into(),
            split: Split::Test,
            value: auc_spu(test_soft, &test_scores)?,
        },
    ];
    curves.push((format!("{name}_validation_roc_spu"), roc_spu(val_soft, &val_scores)?));
    if let Some(truth) = test_truth {
        metrics.push(Metric {
            name: "auc".into(),
            split: Split::Test,
            value: real_auc(truth, &test_scores)?,
        });
        curves.push((format!("{name}_test_roc"), real_roc(truth, &test_scores)?));
    }

    let mut rates = Vec::new();
    for &t in thresholds {
        let pred = threshold_classify(&val_scores, t);
        rates.push(ThresholdRates {
            threshold: t,
            split: Split::Validation,
            tpr_spu: tpr_spu(val_soft, &pred)?,
            fpr_spu: fpr_spu(val_soft, &pred)?,
            tpr: None,
            fpr: None,
        });
        let pred = threshold_classify(&test_scores, t);
        let real = test_truth.map(|y| real_rates(y, &pred)).transpose()?;
        rates.push(ThresholdRates {
            threshold: t,
            split: Split::Test,
            tpr_spu: tpr_spu(test_soft, &pred)?,
            fpr_spu: fpr_spu(test_soft, &pred)?,
            tpr: real.map(|r| r.tpr),
            fpr: real.map(|r| r.fpr),
        });
    }

    let report = ArmReport {
        name: name.to_string(),
        features: pipeline.scaler.features.clone(),
        metrics,
        thresholds: rates,
        loss_trace: pipeline.trained.loss_trace.clone(),
    };
    Ok((report, pipeline, test_scores))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let started = Instant::now();
    let (raw, generator_sources) = cfg.dataset.load(cfg.seed)?;
    let provenance = raw.provenance();
    let (data, labeler_sources) = cfg.soft_labels.apply(raw)?;

    let mut hidden: Vec<String> = generator_sources;
    hidden.extend(labeler_sources);
    hidden.extend(cfg.drop_features.iter().cloned());
    hidden.dedup();
    for name in &hidden {
        if data.feature_index(name).is_none() {
            return Err(Error::config("drop_features", format!("no feature column '{name}'")));
        }
    }

    let (tr, va, te) = split_indices(data.len(), derive_seed(cfg.seed, SPLIT_STREAM))?;
    let (train_set, val_set, test_set) = (data.select(&tr), data.select(&va), data.select(&te));
    let scaler = Scaler::fit(&train_set);

    let val_soft = val_set.soft_labels();
    let test_soft = test_set.soft_labels();
    let test_truth = test_set.has_true_labels().then(|| test_set.true_labels()).transpose()?;

    let soft_features: Vec<String> = data
        .feature_names()
        .iter()
        .filter(|f| !hidden.contains(f))
        .cloned()
        .collect();
    let soft_data = ArmData {
        scaler: scaler.subset(&soft_features)?,
        train: train_set.clone(),
        val: &val_set,
        test: &test_set,
    };
    let hard: Vec<f64> = train_set
        .soft_labels()
        .iter()
        .map(|&s| if s == 1.0 { 1.0 } else { 0.0 })
        .collect();
    let baseline_data = ArmData {
        scaler,
        train: train_set.with_soft_labels(&hard)?,
        val: &val_set,
        test: &test_set,
    };

    let mut curves = Vec::new();
    let thresholds = &cfg.evaluation.thresholds;
    let (soft_arm, soft_model, soft_scores) = run_arm(
        "soft_arm",
        soft_data,
        &val_soft,
        &test_soft,
        test_truth.as_deref(),
        &cfg.model,
        derive_seed(cfg.seed, SOFT_ARM_STREAM),
        thresholds,
        &mut curves,
    )?;
    let (baseline, baseline_model, baseline_scores) = run_arm(
        "baseline",
        baseline_data,
        &val_soft,
        &test_soft,
        test_truth.as_deref(),
        &cfg.model,
        derive_seed(cfg.seed, BASELINE_STREAM),
        thresholds,
        &mut curves,
    )?;

    let real_auc_delta = match (soft_arm.metric("auc", Split::Test), baseline.metric("auc", Split::Test)) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };

    let coefficients = match (&test_truth, provenance) {
        (Some(truth), Provenance::Gscar) => {
            let stats = ClassStats::estimate(&test_soft, truth)?;
            let k = mixture_coefficients(stats.pi, stats.s_p, stats.s_n)?;
            let pair = |scores: &[f64]| -> Result<(f64, f64)> {
                Ok((auc_spu(&test_soft, scores)?, k.map_auc(real_auc(truth, scores)?)))
            };
            Some(CoefficientTable {
                split: Split::Test,
                pi: k.pi,
                s_p: k.s_p,
                s_n: k.s_n,
                a: k.a,
                b: k.b,
                c: k.c,
                d: k.d,
                soft_arm: pair(&soft_scores)?,
                baseline: pair(&baseline_scores)?,
            })
        }
        _ => None,
    };

    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        version_hash: cfg.version_hash()?,
        config: cfg.clone(),
        provenance,
        split_sizes: SplitSizes {
            train: tr.len(),
            validation: va.len(),
            test: te.len(),
        },
        auc_spu_bound: Metric {
            name: "auc_spu_bound".into(),
            split: Split::Validation,
            value: auc_spu_bound(&val_soft)?,
        },
        soft_arm,
        baseline,
        real_auc_delta,
        coefficients,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutcome {
        report,
        curves,
        soft_model,
        baseline_model,
    })
}
