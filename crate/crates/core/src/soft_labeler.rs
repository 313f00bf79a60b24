//! Soft-label generation from verification statistics.
//!
//! Two procedures: a per-rule label from how much more often a rule's
//! targets fail verification than randomly chosen users, and a per-user
//! empirical-Bayes label `1 - E[theta | n, k]` from check records, where the
//! pass-probability prior is fitted on all users by exponentiated gradient.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    /// Fraction of users selected by the rule who reject or fail the check.
    pub fail_ratio_rule: f64,
    /// Same fraction for randomly selected users.
    pub fail_ratio_random: f64,
}

/// `clamp(1 - fail_ratio_random / fail_ratio_rule, 0, 1)`.
///
/// A rule that does no better than random selection gives 0, the label of
/// an ordinary unlabelled sample.
pub fn rule_soft_label(stats: &RuleStats) -> Result<f64> {
    for (name, v) in [
        ("fail_ratio_rule", stats.fail_ratio_rule),
        ("fail_ratio_random", stats.fail_ratio_random),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::config(name, format!("{v} is not in [0, 1]")));
        }
    }
    if stats.fail_ratio_rule == 0.0 {
        return Err(Error::ZeroRuleRatio);
    }
    Ok((1.0 - stats.fail_ratio_random / stats.fail_ratio_rule).clamp(0.0, 1.0))
}

/// Days a user was asked to verify (`n`) and days they passed (`k`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CheckRecord {
    pub n: u32,
    pub k: u32,
}

impl CheckRecord {
    pub fn new(n: u32, k: u32) -> Result<Self> {
        if k > n {
            return Err(Error::config("record", format!("k = {k} exceeds n = {n}")));
        }
        Ok(Self { n, k })
    }

    /// `ln C(n, k) + k ln theta + (n - k) ln(1 - theta)`, with `0^0 = 1`.
    fn log_likelihood(&self, theta: f64) -> f64 {
        let pass = if self.k == 0 { 0.0 } else { self.k as f64 * theta.ln() };
        let fail = if self.n == self.k {
            0.0
        } else {
            (self.n - self.k) as f64 * (1.0 - theta).ln()
        };
        ln_binomial(self.n, self.k) + pass + fail
    }
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// Reads `user_id,n,k` rows.
pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<(String, CheckRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::CsvHeader(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::CsvHeader(format!("column '{name}' not found")))
    };
    let (id_col, n_col, k_col) = (col("user_id")?, col("n")?, col("k")?);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Csv {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        let int = |j: usize| -> Result<u32> {
            rec.get(j).and_then(|v| v.parse().ok()).ok_or_else(|| Error::Csv {
                row,
                column: header[j].clone(),
                message: "expected a non-negative integer".into(),
            })
        };
        let record = CheckRecord::new(int(n_col)?, int(k_col)?).map_err(|e| Error::Csv {
            row,
            column: "k".into(),
            message: e.to_string(),
        })?;
        out.push((rec.get(id_col).unwrap_or_default().to_string(), record));
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

/// Default grid endpoints keep every `theta` strictly inside `(0, 1)`.
pub const GRID_MARGIN: f64 = 1e-4;

/// Prior on a grid of pass probabilities, stored as simplex weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretePrior {
    grid: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscretePrior {
    pub fn new(grid: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != weights.len() {
            return Err(Error::config("prior", "grid and weights must be non-empty and equally long"));
        }
        if grid.iter().any(|t| !(0.0..=1.0).contains(t)) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("prior.grid", "must be strictly increasing within [0, 1]"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::config("prior.weights", "must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config("prior.weights", format!("sum to {total}, not 1")));
        }
        Ok(Self { grid, weights })
    }

    /// `size` evenly spaced points on `[GRID_MARGIN, 1 - GRID_MARGIN]`.
    pub fn default_grid(size: usize) -> Result<Vec<f64>> {
        if size < 2 {
            return Err(Error::config("grid_size", "must be at least 2"));
        }
        let span = 1.0 - 2.0 * GRID_MARGIN;
        Ok((0..size)
            .map(|j| GRID_MARGIN + span * j as f64 / (size - 1) as f64)
            .collect())
    }

    pub fn uniform(grid: Vec<f64>) -> Result<Self> {
        let m = grid.len().max(1);
        Self::new(grid, vec![1.0 / m as f64; m])
    }

    pub fn point_mass(theta: f64) -> Result<Self> {
        Self::new(vec![theta], vec![1.0])
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        self.grid.iter().zip(&self.weights).map(|(t, w)| t * w).sum()
    }

    /// Total weight on grid points inside `[lo, hi]`.
    pub fn mass_within(&self, lo: f64, hi: f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.weights)
            .filter(|(t, _)| (lo..=hi).contains(*t))
            .map(|(_, w)| w)
            .sum()
    }

    /// Average grid spacing; a single point counts as spacing 1.
    pub fn spacing(&self) -> f64 {
        grid_spacing(&self.grid)
    }
}

fn grid_spacing(grid: &[f64]) -> f64 {
    if grid.len() < 2 {
        1.0
    } else {
        (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Posterior mean of the pass probability given the record.
pub fn posterior_pass_probability(record: &CheckRecord, prior: &DiscretePrior) -> Result<f64> {
    let terms = || {
        prior
            .grid
            .iter()
            .zip(&prior.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&t, &w)| (t, w.ln() + record.log_likelihood(t)))
    };
    let den = log_sum_exp(terms().map(|(_, l)| l));
    if den == f64::NEG_INFINITY || den.is_nan() {
        return Err(Error::PriorInconsistent {
            n: record.n,
            k: record.k,
        });
    }
    let num = log_sum_exp(terms().filter(|(t, _)| *t > 0.0).map(|(t, l)| l + t.ln()));
    Ok((num - den).exp().clamp(0.0, 1.0))
}

/// `1 - E[theta | record]`: users who rarely pass get labels near 1.
pub fn bayes_soft_label(record: &CheckRecord, prior: &DiscretePrior) -> Result<f64> {
    Ok(1.0 - posterior_pass_probability(record, prior)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub grid_size: usize,
    /// Weight of the `int f^2` penalty.
    pub lambda: f64,
    /// Initial exponentiated-gradient step. Later iterations start from
    /// twice the last accepted step and halve it until the objective does
    /// not increase.
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop once an accepted step decreases the objective by less than this.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grid_size: 101,
            lambda: 1e-3,
            step_size: 0.5,
            max_iters: 2000,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorFit {
    pub prior: DiscretePrior,
    /// Objective at the initial point and after every accepted step.
    pub objective_trace: Vec<f64>,
    /// Mean log marginal likelihood (binomial coefficient included).
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Records collapsed to distinct `(n, k)` with multiplicities, and their
/// likelihoods on the grid scaled by the per-record maximum.
struct Likelihoods {
    counts: Vec<f64>,
    /// `exp(ll_ij - shift_i)`, row per distinct record.
    scaled: Vec<Vec<f64>>,
    shift: Vec<f64>,
    total: f64,
}

impl Likelihoods {
    fn new(records: &[CheckRecord], grid: &[f64]) -> Result<Self> {
        let mut groups: BTreeMap<CheckRecord, usize> = BTreeMap::new();
        for r in records {
            *groups.entry(*r).or_default() += 1;
        }
        let mut out = Likelihoods {
            counts: Vec::new(),
            scaled: Vec::new(),
            shift: Vec::new(),
            total: records.len() as f64,
        };
        for (r, c) in groups {
            let ll: Vec<f64> = grid.iter().map(|&t| r.log_likelihood(t)).collect();
            let shift = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !shift.is_finite() {
                return Err(Error::NonFiniteObjective {
                    iteration: 0,
                    value: f64::INFINITY,
                });
            }
            out.counts.push(c as f64);
            out.scaled.push(ll.iter().map(|l| (l - shift).exp()).collect());
            out.shift.push(shift);
        }
        Ok(out)
    }

    fn marginals(&self, w: &[f64]) -> Vec<f64> {
        self.scaled
            .iter()
            .map(|row| row.iter().zip(w).map(|(l, w)| l * w).sum())
            .collect()
    }

    /// Mean log marginal likelihood.
    fn log_likelihood(&self, w: &[f64]) -> f64 {
        self.marginals(w)
            .iter()
            .zip(&self.counts)
            .zip(&self.shift)
            .map(|((m, c), s)| c * (m.ln() + s))
            .sum::<f64>()
            / self.total
    }
}

struct Objective {
    lik: Likelihoods,
    lambda: f64,
    spacing: f64,
}

impl Objective {
    /// `-loglik + lambda * sum((w_j / dtheta)^2 * dtheta)`: the weights
    /// are a density `w_j / dtheta` on the grid, so `lambda` means the same
    /// thing at any resolution.
    fn value(&self, w: &[f64]) -> f64 {
        let penalty: f64 = w.iter().map(|w| w * w).sum::<f64>() / self.spacing;
        -self.lik.log_likelihood(w) + self.lambda * penalty
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let marg = self.lik.marginals(w);
        let mut g: Vec<f64> = w.iter().map(|w| 2.0 * self.lambda * w / self.spacing).collect();
        for ((row, m), c) in self.lik.scaled.iter().zip(&marg).zip(&self.lik.counts) {
            let scale = c / (m * self.lik.total);
            for (gj, l) in g.iter_mut().zip(row) {
                *gj -= scale * l;
            }
        }
        g
    }
}

/// Fits the prior on the default grid of `opts.grid_size` points.
pub fn fit_prior(records: &[CheckRecord], opts: &FitOptions) -> Result<PriorFit> {
    let grid = DiscretePrior::default_grid(opts.grid_size)?;
    fit_prior_on_grid(records, grid, opts)
}

/// Largest step, as a multiple of the initial one, the search may grow to.
const MAX_STEP_GROWTH: f64 = 1e6;

/// Penalised maximum marginal likelihood over simplex weights by
/// exponentiated gradient, starting from uniform weights. Each iteration
/// first tries twice the last accepted step and halves it until the
/// objective does not increase.
pub fn fit_prior_on_grid(records: &[CheckRecord], grid: Vec<f64>, opts: &FitOptions) -> Result<PriorFit> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if grid.len() < 2 {
        return Err(Error::config("grid_size", "must be at least 2"));
    }
    if !(opts.lambda >= 0.0) || !(opts.step_size > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::config("options", "need lambda >= 0, step_size > 0, tol > 0"));
    }
    let prior = DiscretePrior::uniform(grid)?;
    let objective = Objective {
        lik: Likelihoods::new(records, &prior.grid)?,
        lambda: opts.lambda,
        spacing: prior.spacing(),
    };
    let mut w = prior.weights.clone();
    let mut current = objective.value(&w);
    if !current.is_finite() {
        return Err(Error::NonFiniteObjective {
            iteration: 0,
            value: current,
        });
    }
    let mut trace = vec![current];
    let mut converged = false;
    let mut iterations = 0;
    let mut step = opts.step_size;

    'outer: for iter in 1..=opts.max_iters {
        iterations = iter;
        let g = objective.gradient(&w);
        let g_min = g.iter().copied().fold(f64::INFINITY, f64::min);
        step = (2.0 * step).min(MAX_STEP_GROWTH * opts.step_size);
        let (candidate, value) = loop {
            let mut cand: Vec<f64> = w
                .iter()
                .zip(&g)
                .map(|(wj, gj)| wj * (-step * (gj - g_min)).exp())
                .collect();
            let z: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|c| *c /= z);
            let v = objective.value(&cand);
            if v.is_finite() && v <= current {
                break (cand, v);
            }
            step *= 0.5;
            if step < 1e-14 {
                converged = true;
                break 'outer;
            }
        };
        let decrease = current - value;
        w = candidate;
        current = value;
        trace.push(current);
        if decrease < opts.tol {
            converged = true;
            break;
        }
    }

    let log_likelihood = objective.lik.log_likelihood(&w);
    Ok(PriorFit {
        prior: DiscretePrior {
            grid: prior.grid,
            weights: w,
        },
        objective_trace: trace,
        log_likelihood,
        iterations,
        converged,
    })
}

/// Evaluates the fitting objective for arbitrary weights on `grid`.
pub fn prior_objective(records: &[CheckRecord], prior: &DiscretePrior, lambda: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let objective = Objective {
        lik: Likelihoods::new(records, prior.grid())?,
        lambda,
        spacing: prior.spacing(),
    };
    Ok(objective.value(prior.weights()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSeparationReport {
    pub mean_positive: f64,
    pub mean_negative: f64,
    /// `E[S | Y=1] - E[S | Y=0]`.
    pub difference: f64,
    /// Whether the difference is strictly positive.
    pub holds: bool,
    /// Whether every nonzero soft label exceeds `pi`, the sufficient
    /// condition for rule labels.
    pub nonzero_labels_exceed_pi: bool,
    pub pi: f64,
}

pub fn check_label_separation(soft_labels: &[f64], labels: &[bool], pi: f64) -> Result<LabelSeparationReport> {
    let stats = crate::dataset::ClassStats::estimate(soft_labels, labels)?;
    let difference = stats.s_p - stats.s_n;
    Ok(LabelSeparationReport {
        mean_positive: stats.s_p,
        mean_negative: stats.s_n,
        difference,
        holds: difference > 0.0,
        nonzero_labels_exceed_pi: soft_labels.iter().filter(|&&s| s > 0.0).all(|&s| s > pi),
        pi,
    })
}

/// One row of an empirical calibration table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub soft_label: f64,
    pub count: usize,
    /// Empirical `P(Y = 1 | S = soft_label)`.
    pub positive_rate: f64,
}

/// Groups samples by exact soft-label value.
pub fn empirical_calibration(soft_labels: &[f64], labels: &[bool]) -> Result<Vec<CalibrationBin>> {
    if soft_labels.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: soft_labels.len(),
            right: labels.len(),
        });
    }
    let mut bins: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for (&s, &y) in soft_labels.iter().zip(labels) {
        let e = bins.entry(s.to_bits()).or_default();
        e.0 += 1;
        e.1 += y as usize;
    }
    let mut out: Vec<CalibrationBin> = bins
        .into_iter()
        .map(|(bits, (count, pos))| CalibrationBin {
            soft_label: f64::from_bits(bits),
            count,
            positive_rate: pos as f64 / count as f64,
        })
        .collect();
    out.sort_by(|a, b| a.soft_label.total_cmp(&b.soft_label));
    Ok(out)
}
