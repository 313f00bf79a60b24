//! Synthetic generators and the PU-ification mechanism.
//!
//! All generators are pure functions of their config (seed included). The
//! per-sample draw order is fixed and documented on each generator.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Provenance, SoftDataset, SoftSample};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, SeededRng};

/// Soft-label values used by the generalized-SCAR generator.
pub const GSCAR_LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Name of the column appended by [`pu_labelize`].
pub const PROPENSITY_FEATURE: &str = "label_propensity";

/// Half the distance between the two class-conditional Gaussian means.
const GSCAR_HALF_SEPARATION: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GscarConfig {
    pub n: usize,
    pub pi: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Total negative-class mass on the nonzero levels, `13 pi / (15 (1 - pi))`.
fn gscar_nonzero_negative_mass(pi: f64) -> f64 {
    (1..=4)
        .map(|k| pi * (4 - k) as f64 / (5.0 * k as f64 * (1.0 - pi)))
        .sum()
}

/// `P(S = 0 | Y = 0)`: the mass left over after levels `1/4 .. 1`.
pub fn gscar_zero_mass(pi: f64) -> f64 {
    1.0 - gscar_nonzero_negative_mass(pi)
}

/// `P(S = k/4 | Y = y)` for `k = 0..=4`.
///
/// Positives spread evenly over the five levels. Negatives put
/// `pi (4 - k) / (5 k (1 - pi))` on level `k >= 1` and the remainder on 0,
/// which makes `P(Y = 1 | S = s) = s` for the three interior levels.
pub fn gscar_label_distribution(pi: f64, positive: bool) -> Result<[f64; 5]> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::config("pi", format!("{pi} is not in (0, 1)")));
    }
    let nonzero = gscar_nonzero_negative_mass(pi);
    if nonzero > 1.0 {
        return Err(Error::InfeasiblePrior { pi, mass: nonzero });
    }
    if positive {
        return Ok([0.2; 5]);
    }
    let mut p = [0.0; 5];
    for (k, slot) in p.iter_mut().enumerate().skip(1) {
        *slot = pi * (4 - k) as f64 / (5.0 * k as f64 * (1.0 - pi));
    }
    p[0] = 1.0 - nonzero;
    Ok(p)
}

fn pick(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Generalized-SCAR data: labels independent of features given the class.
///
/// Per sample: `Y ~ Bernoulli(pi)`, then `S` from
/// [`gscar_label_distribution`], then two features from a unit-covariance
/// Gaussian centred at `(+1, 0)` for positives and `(-1, 0)` for negatives.
pub fn gen_gscar(cfg: &GscarConfig) -> Result<SoftDataset> {
    if cfg.n == 0 {
        return Err(Error::config("n", "must be positive"));
    }
    let pos = gscar_label_distribution(cfg.pi, true)?;
    let neg = gscar_label_distribution(cfg.pi, false)?;
    let mut rng = seeded(cfg.seed);
    let samples = (0..cfg.n)
        .map(|_| {
            let y = rng.random::<f64>() < cfg.pi;
            let level = pick(if y { &pos } else { &neg }, rng.random::<f64>());
            let centre = if y { GSCAR_HALF_SEPARATION } else { -GSCAR_HALF_SEPARATION };
            let f0 = centre + rng.sample::<f64, _>(StandardNormal);
            let f1 = rng.sample::<f64, _>(StandardNormal);
            SoftSample::new(vec![f0, f1], GSCAR_LEVELS[level], Some(y))
        })
        .collect();
    SoftDataset::new(samples, vec!["f0".into(), "f1".into()], Provenance::Gscar)
}

/// Turns a fully labelled dataset into a non-SCAR PU dataset.
///
/// Per sample: `u ~ Uniform[0, 0.5]`, then `v ~ Uniform[0, 1)`; the sample is
/// labelled (soft label 1) iff it is positive and `v < u`. Everything else
/// gets soft label 0. `u` is appended as the feature [`PROPENSITY_FEATURE`];
/// true labels are kept for held-out evaluation.
pub fn pu_labelize(fully_labeled: &SoftDataset, seed: u64) -> Result<SoftDataset> {
    let truth = fully_labeled.true_labels()?;
    let mut rng = seeded(seed);
    let samples = fully_labeled
        .samples()
        .iter()
        .zip(truth)
        .map(|(s, y)| {
            let u = 0.5 * rng.random::<f64>();
            let v = rng.random::<f64>();
            let mut features = s.features.clone();
            features.push(u);
            SoftSample::new(features, if y && v < u { 1.0 } else { 0.0 }, Some(y))
        })
        .collect();
    let mut names = fully_labeled.feature_names().to_vec();
    names.push(PROPENSITY_FEATURE.to_string());
    SoftDataset::new(samples, names, Provenance::PuIfied)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureDomain {
    /// `X` uniform over the cell indices `0..m`.
    Discrete,
    /// `X ~ Uniform[0, 1)`, cell `floor(m X)`.
    Continuous,
}

/// Piecewise-constant `P(Y = 1 | X)`: one level per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaSpec {
    pub domain: FeatureDomain,
    pub levels: Vec<f64>,
}

impl EtaSpec {
    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::config("eta.levels", "at least one cell is required"));
        }
        if let Some((i, v)) = self
            .levels
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::config("eta.levels", format!("level {i} = {v} is outside [0, 1]")));
        }
        Ok(())
    }
}

/// Monotone link `h` from `P(Y = 1 | X)` to `E[S | X]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Link {
    Affine { intercept: f64, slope: f64 },
    /// Logistic curve centred at 1/2, rescaled to map `[0, 1]` onto `[0, 1]`.
    LogisticWarp { steepness: f64 },
}

impl Link {
    pub const IDENTITY: Link = Link::Affine {
        intercept: 0.0,
        slope: 1.0,
    };

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Link::Affine { intercept, slope } => intercept + slope * t,
            Link::LogisticWarp { steepness } => {
                let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
                let lo = sig(-steepness / 2.0);
                let hi = sig(steepness / 2.0);
                (sig(steepness * (t - 0.5)) - lo) / (hi - lo)
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Link::Affine { slope, .. } => slope,
            Link::LogisticWarp { steepness } => {
                let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
                let s = sig(steepness * (t - 0.5));
                steepness * s * (1.0 - s) / (sig(steepness / 2.0) - sig(-steepness / 2.0))
            }
        }
    }

    /// Checks `h' >= c_h` and strict increase on a 1001-point grid of `[0, 1]`.
    pub fn validate(&self, c_h: f64) -> Result<()> {
        if let Link::LogisticWarp { steepness } = *self {
            if !(steepness > 0.0) {
                return Err(Error::config("link.steepness", "must be positive"));
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let d = self.derivative(t);
            if d < c_h {
                return Err(Error::config(
                    "link",
                    format!("h'({t}) = {d} is below c_h = {c_h}"),
                ));
            }
            let v = self.eval(t);
            if v <= prev {
                return Err(Error::config("link", format!("h is not increasing at {t}")));
            }
            prev = v;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MelaConfig {
    pub n: usize,
    pub eta: EtaSpec,
    pub link: Link,
    /// Largest allowed `|E[S|X] - h(P(Y=1|X))|`; 0 gives exact MELA.
    pub epsilon: f64,
    pub c_h: f64,
    #[serde(default)]
    pub seed: u64,
}

/// A MELA sample together with the conditional means it was drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MelaDataset {
    pub dataset: SoftDataset,
    /// Cell of every sample.
    pub cell: Vec<usize>,
    pub cell_eta: Vec<f64>,
    /// `h(eta)` per cell.
    pub cell_link: Vec<f64>,
    /// Realized `E[S | X]` per cell; within `epsilon` of `cell_link`.
    pub cell_mean_s: Vec<f64>,
}

impl MelaDataset {
    /// Exact `E[S | X]` at every sample.
    pub fn conditional_mean(&self) -> Vec<f64> {
        self.cell.iter().map(|&c| self.cell_mean_s[c]).collect()
    }
}

/// Samples `S` on the five-point grid with the given mean: mass split
/// between the two grid points bracketing `mean`.
fn sample_grid_with_mean(mean: f64, u: f64) -> f64 {
    let scaled = mean * 4.0;
    let lo = scaled.floor().min(4.0);
    let frac = scaled - lo;
    if u < frac {
        (lo + 1.0) / 4.0
    } else {
        lo / 4.0
    }
}

/// MELA / noisy-MELA data.
///
/// Before any sample, each cell draws a perturbation
/// `delta_c = epsilon (2 w_c - 1)` with `w_c ~ Uniform[0, 1)` and fixes
/// `E[S | cell] = clamp(h(eta_c) + delta_c, 0, 1)`. Per sample: `X`, then
/// `Y ~ Bernoulli(eta(X))`, then `S` on `{0, 1/4, 1/2, 3/4, 1}` with the
/// cell's mean.
pub fn gen_mela(cfg: &MelaConfig) -> Result<MelaDataset> {
    if cfg.n == 0 {
        return Err(Error::config("n", "must be positive"));
    }
    if !(cfg.epsilon >= 0.0 && cfg.epsilon.is_finite()) {
        return Err(Error::config("epsilon", "must be finite and >= 0"));
    }
    if !(cfg.c_h > 0.0) {
        return Err(Error::config("c_h", "must be positive"));
    }
    cfg.eta.validate()?;
    cfg.link.validate(cfg.c_h)?;
    let m = cfg.eta.levels.len();
    let cell_link: Vec<f64> = cfg.eta.levels.iter().map(|&e| cfg.link.eval(e)).collect();
    if let Some((i, v)) = cell_link.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::config("link", format!("h(eta) = {v} of cell {i} is outside [0, 1]")));
    }

    let mut rng = seeded(cfg.seed);
    let cell_mean_s: Vec<f64> = cell_link
        .iter()
        .map(|&h| {
            let w = rng.random::<f64>();
            if cfg.epsilon == 0.0 {
                h
            } else {
                (h + cfg.epsilon * (2.0 * w - 1.0)).clamp(0.0, 1.0)
            }
        })
        .collect();

    let mut cells = Vec::with_capacity(cfg.n);
    let mut samples = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let (x, c) = draw_cell(&mut rng, cfg.eta.domain, m);
        let y = rng.random::<f64>() < cfg.eta.levels[c];
        let s = sample_grid_with_mean(cell_mean_s[c], rng.random::<f64>());
        cells.push(c);
        samples.push(SoftSample::new(vec![x], s, Some(y)));
    }
    let provenance = if cfg.epsilon == 0.0 {
        Provenance::Mela
    } else {
        Provenance::NoisyMela
    };
    Ok(MelaDataset {
        dataset: SoftDataset::new(samples, vec!["x".into()], provenance)?,
        cell: cells,
        cell_eta: cfg.eta.levels.clone(),
        cell_link,
        cell_mean_s,
    })
}

fn draw_cell(rng: &mut SeededRng, domain: FeatureDomain, m: usize) -> (f64, usize) {
    match domain {
        FeatureDomain::Discrete => {
            let c = rng.random_range(0..m);
            (c as f64, c)
        }
        FeatureDomain::Continuous => {
            let x = rng.random::<f64>();
            (x, ((x * m as f64) as usize).min(m - 1))
        }
    }
}

/// Fully labelled tabular data pushed through [`pu_labelize`], with a
/// rule-based soft label on the unlabelled rows.
///
/// Classes are Gaussian: `informative_dim` features `x*` shifted by
/// `separation` for positives and `source_dim` features `z*` shifted by
/// `source_separation`. Unlabelled samples get
/// `soft_max * sigmoid(rule_slope * (mean(z) - source_separation / 2))`;
/// the `z*` columns are the soft-label source features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PuBenchmarkConfig {
    pub n: usize,
    pub pi: f64,
    #[serde(default = "PuBenchmarkConfig::default_informative_dim")]
    pub informative_dim: usize,
    #[serde(default = "PuBenchmarkConfig::default_source_dim")]
    pub source_dim: usize,
    #[serde(default = "PuBenchmarkConfig::default_separation")]
    pub separation: f64,
    #[serde(default = "PuBenchmarkConfig::default_source_separation")]
    pub source_separation: f64,
    #[serde(default = "PuBenchmarkConfig::default_soft_max")]
    pub soft_max: f64,
    #[serde(default = "PuBenchmarkConfig::default_rule_slope")]
    pub rule_slope: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PuBenchmarkConfig {
    fn default_informative_dim() -> usize {
        6
    }
    fn default_source_dim() -> usize {
        2
    }
    fn default_separation() -> f64 {
        0.7
    }
    fn default_source_separation() -> f64 {
        0.4
    }
    fn default_soft_max() -> f64 {
        0.8
    }
    fn default_rule_slope() -> f64 {
        2.0
    }

    pub fn new(n: usize, pi: f64, seed: u64) -> Self {
        Self {
            n,
            pi,
            informative_dim: Self::default_informative_dim(),
            source_dim: Self::default_source_dim(),
            separation: Self::default_separation(),
            source_separation: Self::default_source_separation(),
            soft_max: Self::default_soft_max(),
            rule_slope: Self::default_rule_slope(),
            seed,
        }
    }

    pub fn source_features(&self) -> Vec<String> {
        (0..self.source_dim).map(|j| format!("z{j}")).collect()
    }
}

/// See [`PuBenchmarkConfig`]. Per sample: `Y`, then the `x*`, then the `z*`;
/// labelling uses an independent stream derived from the seed.
pub fn gen_pu_benchmark(cfg: &PuBenchmarkConfig) -> Result<SoftDataset> {
    if cfg.n == 0 {
        return Err(Error::config("n", "must be positive"));
    }
    if !(cfg.pi > 0.0 && cfg.pi < 1.0) {
        return Err(Error::config("pi", "must be in (0, 1)"));
    }
    if cfg.informative_dim + cfg.source_dim == 0 {
        return Err(Error::config("informative_dim", "need at least one feature"));
    }
    if !(0.0..1.0).contains(&cfg.soft_max) {
        return Err(Error::config("soft_max", "must be in [0, 1)"));
    }
    let mut rng = seeded(cfg.seed);
    let samples = (0..cfg.n)
        .map(|_| {
            let y = rng.random::<f64>() < cfg.pi;
            let mut f = Vec::with_capacity(cfg.informative_dim + cfg.source_dim);
            for _ in 0..cfg.informative_dim {
                let shift = if y { cfg.separation } else { 0.0 };
                f.push(shift + rng.sample::<f64, _>(StandardNormal));
            }
            for _ in 0..cfg.source_dim {
                let shift = if y { cfg.source_separation } else { 0.0 };
                f.push(shift + rng.sample::<f64, _>(StandardNormal));
            }
            SoftSample::new(f, 0.0, Some(y))
        })
        .collect();
    let mut names: Vec<String> = (0..cfg.informative_dim).map(|j| format!("x{j}")).collect();
    names.extend(cfg.source_features());
    let full = SoftDataset::new(samples, names, Provenance::Loaded)?;
    let pu = pu_labelize(&full, derive_seed(cfg.seed, 1))?;

    let z0 = cfg.informative_dim;
    let labels: Vec<f64> = pu
        .samples()
        .iter()
        .map(|s| {
            if s.soft_label == 1.0 {
                return 1.0;
            }
            if cfg.source_dim == 0 {
                return 0.0;
            }
            let zbar = s.features[z0..z0 + cfg.source_dim].iter().sum::<f64>() / cfg.source_dim as f64;
            let t = cfg.rule_slope * (zbar - cfg.source_separation / 2.0);
            cfg.soft_max / (1.0 + (-t).exp())
        })
        .collect();
    pu.with_soft_labels(&labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gscar_distribution_sums_to_one() {
        for &pi in &[0.01, 0.1, 0.3, 0.5, 15.0 / 28.0 - 1e-9] {
            for &pos in &[true, false] {
                let p = gscar_label_distribution(pi, pos).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(p.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn gscar_zero_mass_closed_form() {
        // 1 - 13 pi / (15 (1 - pi)) at pi = 0.1
        let expected = 1.0 - 13.0 * 0.1 / (15.0 * 0.9);
        assert!((gscar_zero_mass(0.1) - expected).abs() < 1e-15);
        assert!((gscar_zero_mass(0.1) - 0.9037).abs() < 1e-4);
    }

    #[test]
    fn gscar_calibration_exact_in_population() {
        let pi = 0.1;
        let pos = gscar_label_distribution(pi, true).unwrap();
        let neg = gscar_label_distribution(pi, false).unwrap();
        for k in 1..4 {
            let post = pi * pos[k] / (pi * pos[k] + (1.0 - pi) * neg[k]);
            assert!((post - GSCAR_LEVELS[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn gscar_rejects_infeasible_pi() {
        let err = gen_gscar(&GscarConfig { n: 10, pi: 0.6, seed: 1 }).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePrior { .. }));
        assert!(gen_gscar(&GscarConfig { n: 10, pi: 0.53, seed: 1 }).is_ok());
    }

    #[test]
    fn negatives_never_labelled() {
        let base = gen_gscar(&GscarConfig { n: 2000, pi: 0.3, seed: 3 }).unwrap();
        let pu = pu_labelize(&base, 9).unwrap();
        for s in pu.samples() {
            if s.true_label == Some(false) {
                assert_eq!(s.soft_label, 0.0);
            }
            let u = *s.features.last().unwrap();
            assert!((0.0..0.5).contains(&u));
        }
        assert_eq!(pu.feature_names().last().unwrap(), PROPENSITY_FEATURE);
    }

    #[test]
    fn labelize_requires_truth() {
        let ds = SoftDataset::new(
            vec![SoftSample::new(vec![0.0], 0.0, None)],
            vec!["a".into()],
            Provenance::Loaded,
        )
        .unwrap();
        assert!(matches!(pu_labelize(&ds, 0), Err(Error::MissingTrueLabel { index: 0 })));
    }

    #[test]
    fn grid_sampler_hits_mean() {
        assert_eq!(sample_grid_with_mean(1.0, 0.3), 1.0);
        assert_eq!(sample_grid_with_mean(0.0, 0.3), 0.0);
        assert_eq!(sample_grid_with_mean(0.3, 0.1), 0.5);
        assert_eq!(sample_grid_with_mean(0.3, 0.5), 0.25);
    }

    #[test]
    fn link_validation() {
        assert!(Link::IDENTITY.validate(1.0).is_ok());
        assert!(Link::IDENTITY.validate(1.5).is_err());
        let warp = Link::LogisticWarp { steepness: 4.0 };
        assert!((warp.eval(0.0)).abs() < 1e-12 && (warp.eval(1.0) - 1.0).abs() < 1e-12);
        assert!(warp.validate(0.1).is_ok());
        assert!(Link::Affine { intercept: 0.5, slope: -0.2 }.validate(0.01).is_err());
    }

    #[test]
    fn mela_rejects_bad_eta() {
        let cfg = MelaConfig {
            n: 10,
            eta: EtaSpec { domain: FeatureDomain::Discrete, levels: vec![0.2, 1.3] },
            link: Link::IDENTITY,
            epsilon: 0.0,
            c_h: 1.0,
            seed: 0,
        };
        assert!(gen_mela(&cfg).is_err());
    }
}
