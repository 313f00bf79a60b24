//! Soft-label cross-entropy training.
//!
//! Minimising `-(1/N) sum [s ln g + (1 - s) ln(1 - g)]` drives the score
//! `g(x)` toward `E[S | X = x]`, so thresholding the trained score
//! approximates thresholding the conditional mean soft label.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{SoftDataset, SoftSample};
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    LinearLogistic,
    /// One `tanh` hidden layer feeding a logistic output.
    Mlp { hidden: usize },
}

impl Architecture {
    pub const DEFAULT_HIDDEN: usize = 16;

    pub fn param_count(&self, feature_dim: usize) -> usize {
        match *self {
            Architecture::LinearLogistic => feature_dim + 1,
            Architecture::Mlp { hidden } => hidden * feature_dim + 2 * hidden + 1,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Flat parameter layout:
/// - linear: `[w_0 .. w_{d-1}, b]`
/// - mlp: `[W (hidden x d, row-major), b_hidden (hidden), v (hidden), c]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoringModel {
    pub architecture: Architecture,
    pub feature_dim: usize,
    pub params: Vec<f64>,
}

impl ScoringModel {
    /// Zero linear weights; hidden and output weights of an MLP uniform in
    /// `[-0.1, 0.1]`, biases zero.
    pub fn init(architecture: Architecture, feature_dim: usize, rng: &mut impl Rng) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::config("feature_dim", "must be positive"));
        }
        let mut params = vec![0.0; architecture.param_count(feature_dim)];
        if let Architecture::Mlp { hidden } = architecture {
            if hidden == 0 {
                return Err(Error::config("hidden", "must be positive"));
            }
            let (w_end, v_start) = (hidden * feature_dim, hidden * feature_dim + hidden);
            for p in params[..w_end].iter_mut() {
                *p = rng.random_range(-0.1..=0.1);
            }
            for p in params[v_start..v_start + hidden].iter_mut() {
                *p = rng.random_range(-0.1..=0.1);
            }
        }
        Ok(Self {
            architecture,
            feature_dim,
            params,
        })
    }

    pub fn from_params(architecture: Architecture, feature_dim: usize, params: Vec<f64>) -> Result<Self> {
        let expected = architecture.param_count(feature_dim);
        if params.len() != expected {
            return Err(Error::LengthMismatch {
                left: expected,
                right: params.len(),
            });
        }
        Ok(Self {
            architecture,
            feature_dim,
            params,
        })
    }

    /// Indices of parameters that carry the l2 penalty (all non-biases).
    fn is_weight(&self, i: usize) -> bool {
        match self.architecture {
            Architecture::LinearLogistic => i < self.feature_dim,
            Architecture::Mlp { hidden } => {
                let d = self.feature_dim;
                i < hidden * d || (hidden * d + hidden..hidden * d + 2 * hidden).contains(&i)
            }
        }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let d = self.feature_dim;
        match self.architecture {
            Architecture::LinearLogistic => {
                x.iter().zip(&self.params[..d]).map(|(a, w)| a * w).sum::<f64>() + self.params[d]
            }
            Architecture::Mlp { hidden } => {
                let (w, rest) = self.params.split_at(hidden * d);
                let (b, rest) = rest.split_at(hidden);
                let (v, c) = rest.split_at(hidden);
                (0..hidden)
                    .map(|k| {
                        let pre: f64 = w[k * d..(k + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
                        v[k] * (pre + b[k]).tanh()
                    })
                    .sum::<f64>()
                    + c[0]
            }
        }
    }

    /// Model output in `(0, 1)`.
    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn scores(&self, data: &SoftDataset) -> Result<Vec<f64>> {
        if data.feature_dim() != self.feature_dim {
            return Err(Error::LengthMismatch {
                left: self.feature_dim,
                right: data.feature_dim(),
            });
        }
        Ok(data.features().map(|x| self.score(x)).collect())
    }

    /// Mean soft cross-entropy plus `l2 / 2 * |weights|^2`, and its gradient.
    fn loss_and_gradient<'a>(&self, batch: impl Iterator<Item = &'a SoftSample>, l2: f64) -> (f64, Vec<f64>) {
        let d = self.feature_dim;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut count = 0usize;
        let mut act = Vec::new();
        for sample in batch {
            count += 1;
            let x = &sample.features;
            let s = sample.soft_label;
            match self.architecture {
                Architecture::LinearLogistic => {
                    let z = self.logit(x);
                    loss += softplus(z) - s * z;
                    let r = sigmoid(z) - s;
                    for (g, xi) in grad[..d].iter_mut().zip(x) {
                        *g += r * xi;
                    }
                    grad[d] += r;
                }
                Architecture::Mlp { hidden } => {
                    let (w, rest) = self.params.split_at(hidden * d);
                    let (b, rest) = rest.split_at(hidden);
                    let (v, c) = rest.split_at(hidden);
                    act.clear();
                    act.extend((0..hidden).map(|k| {
                        let pre: f64 = w[k * d..(k + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
                        (pre + b[k]).tanh()
                    }));
                    let z = act.iter().zip(v).map(|(a, v)| a * v).sum::<f64>() + c[0];
                    loss += softplus(z) - s * z;
                    let r = sigmoid(z) - s;
                    let (gw, grest) = grad.split_at_mut(hidden * d);
                    let (gb, grest) = grest.split_at_mut(hidden);
                    let (gv, gc) = grest.split_at_mut(hidden);
                    gc[0] += r;
                    for k in 0..hidden {
                        gv[k] += r * act[k];
                        let delta = r * v[k] * (1.0 - act[k] * act[k]);
                        gb[k] += delta;
                        for (g, xi) in gw[k * d..(k + 1) * d].iter_mut().zip(x) {
                            *g += delta * xi;
                        }
                    }
                }
            }
        }
        let n = count.max(1) as f64;
        loss /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        if l2 > 0.0 {
            for (i, (g, p)) in grad.iter_mut().zip(&self.params).enumerate() {
                if self.is_weight(i) {
                    *g += l2 * p;
                    loss += 0.5 * l2 * p * p;
                }
            }
        }
        (loss, grad)
    }

    /// Training objective on `batch`: mean soft cross-entropy plus the l2 term.
    pub fn loss(&self, batch: &SoftDataset, l2: f64) -> f64 {
        self.loss_and_gradient(batch.samples().iter(), l2).0
    }
}

/// `-(1/N) sum [s ln g + (1 - s) ln(1 - g)]` for scores strictly in `(0, 1)`.
pub fn soft_ce_loss(scores: &[f64], soft_labels: &[f64]) -> Result<f64> {
    if scores.len() != soft_labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: soft_labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for (index, (&g, &s)) in scores.iter().zip(soft_labels).enumerate() {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::ScoreRange { index, value: g });
        }
        total -= s * g.ln() + (1.0 - s) * (-g).ln_1p();
    }
    Ok(total / scores.len() as f64)
}

/// Analytic gradient of the training objective on `batch`.
pub fn loss_gradient(model: &ScoringModel, batch: &SoftDataset, l2: f64) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if batch.feature_dim() != model.feature_dim {
        return Err(Error::LengthMismatch {
            left: model.feature_dim,
            right: batch.feature_dim(),
        });
    }
    Ok(model.loss_and_gradient(batch.samples().iter(), l2).1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 20,
            batch_size: 128,
            seed: 0,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::config("l2", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: ScoringModel,
    /// Mean training objective over each epoch's mini-batches.
    pub loss_trace: Vec<f64>,
    pub seed: u64,
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let saved: TrainedModel = serde_json::from_str(text)?;
        ScoringModel::from_params(
            saved.model.architecture,
            saved.model.feature_dim,
            saved.model.params.clone(),
        )?;
        Ok(saved)
    }
}

/// Mini-batch gradient descent on the soft cross-entropy.
///
/// The seed drives initialisation and then one shuffle per epoch, in that
/// order, so runs are bit-reproducible.
pub fn train(data: &SoftDataset, architecture: Architecture, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = seeded(cfg.seed);
    let mut model = ScoringModel::init(architecture, data.feature_dim(), &mut rng)?;
    let samples = data.samples();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let (loss, grad) = model.loss_and_gradient(chunk.iter().map(|&i| &samples[i]), cfg.l2);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                trace.push(f64::NAN);
                return Err(Error::NonFiniteLoss { epoch, trace });
            }
            epoch_loss += loss * chunk.len() as f64;
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * g;
            }
        }
        trace.push(epoch_loss / samples.len() as f64);
    }
    Ok(TrainedModel {
        model,
        loss_trace: trace,
        seed: cfg.seed,
    })
}

/// `[score > t]` elementwise.
pub fn threshold_classify(scores: &[f64], t: f64) -> Vec<bool> {
    scores.iter().map(|&g| g > t).collect()
}
