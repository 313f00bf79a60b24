//! Soft-labelled samples and datasets.
//!
//! A [`SoftDataset`] is immutable once built: constructors validate that
//! every soft label lies in `[0, 1]` and that all samples share one feature
//! dimension, and every transformation returns a new dataset.

mod csv_io;
mod synthetic;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, read_csv, write_csv, CsvSchema, SOFT_LABEL_COLUMN, TRUE_LABEL_COLUMN};
pub use synthetic::{
    gen_gscar, gen_mela, gen_pu_benchmark, gscar_label_distribution, gscar_zero_mass, pu_labelize,
    EtaSpec, FeatureDomain, GscarConfig, Link, MelaConfig, MelaDataset, PuBenchmarkConfig,
    GSCAR_LEVELS, PROPENSITY_FEATURE,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftSample {
    pub features: Vec<f64>,
    pub soft_label: f64,
    pub true_label: Option<bool>,
}

impl SoftSample {
    pub fn new(features: Vec<f64>, soft_label: f64, true_label: Option<bool>) -> Self {
        Self {
            features,
            soft_label,
            true_label,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Loaded,
    Gscar,
    Mela,
    NoisyMela,
    PuIfied,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Loaded => "loaded",
            Provenance::Gscar => "gscar",
            Provenance::Mela => "mela",
            Provenance::NoisyMela => "noisy-mela",
            Provenance::PuIfied => "pu-ified",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "loaded" => Provenance::Loaded,
            "gscar" => Provenance::Gscar,
            "mela" => Provenance::Mela,
            "noisy-mela" => Provenance::NoisyMela,
            "pu-ified" => Provenance::PuIfied,
            _ => return None,
        })
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftDataset {
    samples: Vec<SoftSample>,
    feature_names: Vec<String>,
    provenance: Provenance,
}

impl SoftDataset {
    /// Checks that every soft label lies in `[0, 1]` and every sample is as
    /// wide as `feature_names`. True labels may be present on any subset.
    pub fn new(
        samples: Vec<SoftSample>,
        feature_names: Vec<String>,
        provenance: Provenance,
    ) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::config("feature_names", "at least one feature is required"));
        }
        for (index, s) in samples.iter().enumerate() {
            if s.features.len() != feature_names.len() {
                return Err(Error::FeatureDim {
                    index,
                    expected: feature_names.len(),
                    found: s.features.len(),
                });
            }
            if !(0.0..=1.0).contains(&s.soft_label) {
                return Err(Error::SoftLabelRange {
                    index,
                    value: s.soft_label,
                });
            }
        }
        Ok(Self {
            samples,
            feature_names,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn samples(&self) -> &[SoftSample] {
        &self.samples
    }

    pub fn soft_labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.soft_label).collect()
    }

    /// All true labels, or the index of the first sample lacking one.
    pub fn true_labels(&self) -> Result<Vec<bool>> {
        self.samples
            .iter()
            .enumerate()
            .map(|(index, s)| s.true_label.ok_or(Error::MissingTrueLabel { index }))
            .collect()
    }

    pub fn has_true_labels(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.true_label.is_some())
    }

    pub fn features(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|s| s.features.as_slice())
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> SoftDataset {
        SoftDataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            provenance: self.provenance,
        }
    }

    /// Copy with only the named feature columns, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<SoftDataset> {
        let idx = names
            .iter()
            .map(|name| {
                self.feature_index(name)
                    .ok_or_else(|| Error::config("features", format!("unknown feature '{name}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let samples = self
            .samples
            .iter()
            .map(|s| SoftSample {
                features: idx.iter().map(|&i| s.features[i]).collect(),
                soft_label: s.soft_label,
                true_label: s.true_label,
            })
            .collect();
        SoftDataset::new(samples, names.to_vec(), self.provenance)
    }

    /// Copy without the named feature columns.
    pub fn drop_features(&self, names: &[String]) -> Result<SoftDataset> {
        let mut drop = Vec::with_capacity(names.len());
        for name in names {
            let idx = self
                .feature_index(name)
                .ok_or_else(|| Error::config("features", format!("unknown feature '{name}'")))?;
            drop.push(idx);
        }
        let keep: Vec<usize> = (0..self.feature_dim()).filter(|i| !drop.contains(i)).collect();
        let feature_names = keep.iter().map(|&i| self.feature_names[i].clone()).collect();
        let samples = self
            .samples
            .iter()
            .map(|s| SoftSample {
                features: keep.iter().map(|&i| s.features[i]).collect(),
                soft_label: s.soft_label,
                true_label: s.true_label,
            })
            .collect();
        SoftDataset::new(samples, feature_names, self.provenance)
    }

    /// Same samples with replaced soft labels.
    pub fn with_soft_labels(&self, labels: &[f64]) -> Result<SoftDataset> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: labels.len(),
            });
        }
        let samples = self
            .samples
            .iter()
            .zip(labels)
            .map(|(s, &soft_label)| SoftSample {
                soft_label,
                ..s.clone()
            })
            .collect();
        SoftDataset::new(samples, self.feature_names.clone(), self.provenance)
    }

    /// Same samples with features mapped by `f`; names are kept.
    pub fn map_features(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<SoftDataset> {
        let samples = self
            .samples
            .iter()
            .map(|s| SoftSample {
                features: f(&s.features),
                ..s.clone()
            })
            .collect();
        SoftDataset::new(samples, self.feature_names.clone(), self.provenance)
    }
}

/// Plug-in estimates of the class prior and the per-class mean soft labels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub pi: f64,
    pub s_p: f64,
    pub s_n: f64,
}

impl ClassStats {
    pub fn estimate(soft_labels: &[f64], labels: &[bool]) -> Result<Self> {
        if soft_labels.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: soft_labels.len(),
                right: labels.len(),
            });
        }
        let (mut n_pos, mut n_neg, mut sum_pos, mut sum_neg) = (0usize, 0usize, 0.0, 0.0);
        for (&s, &y) in soft_labels.iter().zip(labels) {
            if y {
                n_pos += 1;
                sum_pos += s;
            } else {
                n_neg += 1;
                sum_neg += s;
            }
        }
        if n_pos == 0 {
            return Err(Error::EmptyClass { class: 1 });
        }
        if n_neg == 0 {
            return Err(Error::EmptyClass { class: 0 });
        }
        Ok(Self {
            pi: n_pos as f64 / labels.len() as f64,
            s_p: sum_pos / n_pos as f64,
            s_n: sum_neg / n_neg as f64,
        })
    }
}
