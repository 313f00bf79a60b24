//! Exhaustive ROC frontiers on finite feature domains.
//!
//! Every deterministic classifier on a domain of `m` cells is a subset of
//! cells, encoded as a bit mask. Rates are computed from the cell masses in
//! closed form, so the checks here carry no sampling noise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Link;
use crate::error::{Error, Result};
use crate::metrics::CurveKind;

pub const MAX_CELLS: usize = 20;

/// Geometric tolerance for "lies on the frontier".
pub const FRONTIER_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mass: f64,
    /// `P(Y = 1 | x)`.
    pub eta: f64,
    /// `E[S | x]`.
    pub eta_s: f64,
}

#[derive(Deserialize)]
struct RawProblem {
    cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem")]
pub struct DiscreteProblem {
    cells: Vec<Cell>,
}

impl TryFrom<RawProblem> for DiscreteProblem {
    type Error = Error;

    fn try_from(raw: RawProblem) -> Result<Self> {
        Self::new(raw.cells)
    }
}

impl DiscreteProblem {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if cells.len() > MAX_CELLS {
            return Err(Error::TooManyCells {
                cells: cells.len(),
                max: MAX_CELLS,
            });
        }
        for (i, c) in cells.iter().enumerate() {
            if !(c.mass >= 0.0 && c.mass.is_finite()) {
                return Err(Error::config("cells", format!("cell {i} has mass {}", c.mass)));
            }
            if !(0.0..=1.0).contains(&c.eta) || !(0.0..=1.0).contains(&c.eta_s) {
                return Err(Error::config("cells", format!("cell {i} has eta or eta_s outside [0, 1]")));
            }
        }
        let total: f64 = cells.iter().map(|c| c.mass).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config("cells", format!("masses sum to {total}, not 1")));
        }
        let problem = Self { cells };
        for kind in [CurveKind::Real, CurveKind::Spu] {
            let (pos, neg) = problem.weights(kind);
            if pos.iter().sum::<f64>() <= 0.0 {
                return Err(Error::NoPositiveMass);
            }
            if neg.iter().sum::<f64>() <= 0.0 {
                return Err(Error::NoNegativeMass);
            }
        }
        Ok(problem)
    }

    /// Cells with masses `counts[i] / sum(counts)`; such problems can be
    /// realised exactly by a finite sample (see [`Self::spu_sample`]).
    pub fn from_counts(counts: &[u32], eta: &[f64], eta_s: &[f64]) -> Result<Self> {
        if counts.len() != eta.len() || counts.len() != eta_s.len() {
            return Err(Error::LengthMismatch {
                left: counts.len(),
                right: eta.len().min(eta_s.len()),
            });
        }
        let total: u32 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        Self::new(
            counts
                .iter()
                .zip(eta.iter().zip(eta_s))
                .map(|(&c, (&eta, &eta_s))| Cell {
                    mass: c as f64 / total as f64,
                    eta,
                    eta_s,
                })
                .collect(),
        )
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `P(Y = 1)`.
    pub fn pi(&self) -> f64 {
        self.cells.iter().map(|c| c.mass * c.eta).sum()
    }

    /// Per-cell positive and negative weights: `(p eta, p (1 - eta))` for
    /// real rates, `(p eta_s, p (1 - eta_s))` for the substitutes.
    pub fn weights(&self, kind: CurveKind) -> (Vec<f64>, Vec<f64>) {
        self.cells
            .iter()
            .map(|c| {
                let e = match kind {
                    CurveKind::Real => c.eta,
                    CurveKind::Spu => c.eta_s,
                };
                (c.mass * e, c.mass * (1.0 - e))
            })
            .unzip()
    }

    fn key(&self, kind: CurveKind) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| match kind {
                CurveKind::Real => c.eta,
                CurveKind::Spu => c.eta_s,
            })
            .collect()
    }

    /// `(FPR, TPR)` of the classifier `mask`, or the substitutes for
    /// [`CurveKind::Spu`].
    pub fn rates(&self, mask: u32, kind: CurveKind) -> (f64, f64) {
        let (pos, neg) = self.weights(kind);
        let (tp, fp) = masked_sums(mask, &pos, &neg);
        (fp / neg.iter().sum::<f64>(), tp / pos.iter().sum::<f64>())
    }

    /// Masks of `I(key > t)` for every threshold `t`, from the empty to the
    /// full classifier, where the key is `eta` or `eta_s`. Tied cells enter
    /// together.
    pub fn threshold_classifiers(&self, kind: CurveKind) -> Vec<u32> {
        let mut masks = vec![0u32];
        let mut acc = 0u32;
        for group in tie_groups(&self.key(kind)) {
            for i in group {
                acc |= 1 << i;
            }
            masks.push(acc);
        }
        masks
    }

    /// Mirror image `eta -> 1 - eta`, `eta_s -> 1 - eta_s`.
    pub fn reflect(&self) -> Self {
        Self {
            cells: self
                .cells
                .iter()
                .map(|c| Cell {
                    mass: c.mass,
                    eta: 1.0 - c.eta,
                    eta_s: 1.0 - c.eta_s,
                })
                .collect(),
        }
    }

    /// A sample of `total` points with `mass * total` points per cell, each
    /// carrying soft label and score `eta_s`. `None` when the masses are not
    /// multiples of `1 / total`.
    pub fn spu_sample(&self, total: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut soft = Vec::with_capacity(total);
        for c in &self.cells {
            let exact = c.mass * total as f64;
            let count = exact.round();
            if (exact - count).abs() > 1e-6 {
                return None;
            }
            soft.extend(std::iter::repeat_n(c.eta_s, count as usize));
        }
        (soft.len() == total).then(|| (soft.clone(), soft))
    }
}

fn masked_sums(mask: u32, pos: &[f64], neg: &[f64]) -> (f64, f64) {
    let (mut tp, mut fp) = (0.0, 0.0);
    for i in 0..pos.len() {
        if mask & (1 << i) != 0 {
            tp += pos[i];
            fp += neg[i];
        }
    }
    (tp, fp)
}

/// Cell indices ordered by decreasing key (index breaks ties), grouped by
/// exactly equal key.
fn tie_groups(key: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..key.len()).collect();
    order.sort_by(|&a, &b| key[b].total_cmp(&key[a]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if key[g[0]] == key[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Real-rate ROC area of the scorer that ranks groups in the given order,
/// trapezoidal within tied groups.
fn ordered_auc(groups: &[Vec<usize>], pos: &[f64], neg: &[f64]) -> f64 {
    let (p_tot, n_tot): (f64, f64) = (pos.iter().sum(), neg.iter().sum());
    let (mut tp, mut area) = (0.0, 0.0);
    for g in groups {
        let gp: f64 = g.iter().map(|&i| pos[i]).sum();
        let gn: f64 = g.iter().map(|&i| neg[i]).sum();
        area += (gn / n_tot) * (2.0 * tp + gp) / (2.0 * p_tot);
        tp += gp;
    }
    area
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Every classifier attaining this point.
    pub classifiers: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub kind: CurveKind,
    /// Vertices of the upper-left concave hull, from `(0, 0)` to `(1, 1)`.
    pub points: Vec<FrontierPoint>,
    /// Enumerated points no other classifier dominates, by increasing FPR.
    pub pareto: Vec<FrontierPoint>,
    /// Classifiers whose point lies on the hull polyline.
    pub optimal: Vec<u32>,
}

impl Frontier {
    /// Whether `(fpr, tpr)` lies on the hull polyline within `tol`.
    pub fn contains(&self, fpr: f64, tpr: f64, tol: f64) -> bool {
        let pts = &self.points;
        if pts.len() == 1 {
            return (pts[0].fpr - fpr).hypot(pts[0].tpr - tpr) <= tol;
        }
        pts.windows(2)
            .any(|w| segment_distance((w[0].fpr, w[0].tpr), (w[1].fpr, w[1].tpr), (fpr, tpr)) <= tol)
    }

    /// Area under the hull.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
            .sum()
    }
}

fn segment_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Collects the classifiers of each distinct point (within `tol`) of a list
/// sorted by `(fpr, tpr)`.
fn attach(points: &[(f64, f64)], enumerated: &[(u32, f64, f64)], tol: f64) -> Vec<FrontierPoint> {
    points
        .iter()
        .map(|&(fpr, tpr)| FrontierPoint {
            fpr,
            tpr,
            classifiers: enumerated
                .iter()
                .filter(|&&(_, f, t)| (f - fpr).abs() <= tol && (t - tpr).abs() <= tol)
                .map(|&(m, _, _)| m)
                .collect(),
        })
        .collect()
}

/// Enumerates all `2^m` classifiers and extracts the hull and Pareto set of
/// their `(FPR, TPR)` or `(FPR_SPU, TPR_SPU)` points.
pub fn exhaustive_frontier(problem: &DiscreteProblem, kind: CurveKind) -> Result<Frontier> {
    let m = problem.len();
    if m > MAX_CELLS {
        return Err(Error::TooManyCells { cells: m, max: MAX_CELLS });
    }
    let (pos, neg) = problem.weights(kind);
    let (p_tot, n_tot): (f64, f64) = (pos.iter().sum(), neg.iter().sum());
    let mut enumerated: Vec<(u32, f64, f64)> = (0..(1u32 << m))
        .map(|mask| {
            let (tp, fp) = masked_sums(mask, &pos, &neg);
            (mask, fp / n_tot, tp / p_tot)
        })
        .collect();
    enumerated.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)));

    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &(_, f, t) in &enumerated {
        let p = (f, t);
        if hull.last() == Some(&p) {
            continue;
        }
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= -1e-15 {
            hull.pop();
        }
        hull.push(p);
    }

    let mut pareto_pts: Vec<(f64, f64)> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut by_fpr = enumerated.clone();
    by_fpr.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.2.total_cmp(&a.2)));
    for &(_, f, t) in &by_fpr {
        if t > best + FRONTIER_TOL {
            pareto_pts.push((f, t));
            best = t;
        }
    }

    let points = attach(&hull, &enumerated, FRONTIER_TOL);
    let pareto = attach(&pareto_pts, &enumerated, FRONTIER_TOL);
    let mut frontier = Frontier {
        kind,
        points,
        pareto,
        optimal: Vec::new(),
    };
    let mut optimal: Vec<u32> = enumerated
        .iter()
        .filter(|&&(_, f, t)| frontier.contains(f, t, FRONTIER_TOL))
        .map(|&(mask, _, _)| mask)
        .collect();
    optimal.sort_unstable();
    frontier.optimal = optimal;
    Ok(frontier)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MelaReport {
    pub passed: bool,
    pub spu_optimal: Vec<u32>,
    pub real_optimal: Vec<u32>,
    /// Witnesses: optimal under one family of metrics only.
    pub only_spu: Vec<u32>,
    pub only_real: Vec<u32>,
}

/// Checks that the classifiers optimal for the substitute metrics are
/// exactly those optimal for the real ones, given `eta_s` strictly
/// increasing in `eta` across cells.
pub fn verify_mela_optimality(problem: &DiscreteProblem) -> Result<MelaReport> {
    let cells = problem.cells();
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            let d = cells[i].eta - cells[j].eta;
            let ds = cells[i].eta_s - cells[j].eta_s;
            let consistent = (d == 0.0 && ds == 0.0) || d * ds > 0.0;
            if !consistent {
                return Err(Error::NotMonotone { first: i, second: j });
            }
        }
    }
    let spu = exhaustive_frontier(problem, CurveKind::Spu)?.optimal;
    let real = exhaustive_frontier(problem, CurveKind::Real)?.optimal;
    let only_spu: Vec<u32> = spu.iter().filter(|m| real.binary_search(m).is_err()).copied().collect();
    let only_real: Vec<u32> = real.iter().filter(|m| spu.binary_search(m).is_err()).copied().collect();
    Ok(MelaReport {
        passed: only_spu.is_empty() && only_real.is_empty(),
        spu_optimal: spu,
        real_optimal: real,
        only_spu,
        only_real,
    })
}

/// Whether some `h` with `h' >= c_h` satisfies `|eta_s - h(eta)| <= epsilon`
/// on every cell. Equivalent to a non-decreasing `g = h - c_h t` threading
/// the per-cell intervals in order of `eta`.
pub fn link_feasible(problem: &DiscreteProblem, epsilon: f64, c_h: f64) -> bool {
    let mut order: Vec<&Cell> = problem.cells().iter().collect();
    order.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    let mut level = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let eta = order[i].eta;
        while i < order.len() && order[i].eta == eta {
            let g = order[i].eta_s - c_h * eta;
            lo = lo.max(g - epsilon);
            hi = hi.min(g + epsilon);
            i += 1;
        }
        level = level.max(lo);
        if level > hi + 1e-12 {
            return false;
        }
    }
    true
}

/// Smallest `m` for which every slice of width `w` of the `eta` axis holds
/// `sum p (eta - T) <= m w^2 / 2` (and the mirror image): the finite-domain
/// form of the slice-density condition. Zero for `w = 0`.
pub fn slice_density(problem: &DiscreteProblem, w: f64) -> f64 {
    if !(w > 0.0) {
        return 0.0;
    }
    let cells = problem.cells();
    let mut best = 0.0f64;
    for anchor in cells {
        let right = anchor.eta;
        let t = right - w;
        let upper: f64 = cells
            .iter()
            .filter(|c| c.eta > t && c.eta <= right)
            .map(|c| c.mass * (c.eta - t))
            .sum();
        let left = anchor.eta;
        let t = left + w;
        let lower: f64 = cells
            .iter()
            .filter(|c| c.eta >= left && c.eta < t)
            .map(|c| c.mass * (t - c.eta))
            .sum();
        best = best.max(upper).max(lower);
    }
    best / (w * w / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapMatch {
    /// Real-frontier vertex, an `eta` threshold.
    pub real_classifier: u32,
    pub real_fpr: f64,
    pub real_tpr: f64,
    /// Real rates of the `eta_s` threshold with the same positive mass,
    /// randomised within one tied group when needed.
    pub matched_fpr: f64,
    pub matched_tpr: f64,
    pub tpr_deficit: f64,
    pub fpr_excess: f64,
    /// Deterministic `eta_s` thresholds whose real rates are within the
    /// bound of this vertex.
    pub candidates: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyGapReport {
    pub epsilon: f64,
    pub c_h: f64,
    pub m: f64,
    pub pi: f64,
    /// Smallest `m` the problem admits; see [`slice_density`].
    pub m_required: f64,
    pub rate_bound: f64,
    pub auc_bound: f64,
    pub max_tpr_deficit: f64,
    pub max_fpr_excess: f64,
    pub auc_optimal: f64,
    pub auc_spu_optimal: f64,
    pub auc_gap: f64,
    pub matches: Vec<GapMatch>,
    pub precondition_violations: Vec<String>,
    pub passed: bool,
}

/// Measures how far the classifiers optimal for the substitute metrics fall
/// from the real ROC frontier, against `4 m eps^2 / (pi c_h^2)` for the
/// rates and twice that for AUC.
pub fn verify_noisy_gap(problem: &DiscreteProblem, epsilon: f64, c_h: f64, m: f64) -> Result<NoisyGapReport> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::config("epsilon", "must be finite and >= 0"));
    }
    if !(c_h > 0.0 && c_h.is_finite()) {
        return Err(Error::config("c_h", "must be positive"));
    }
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::config("m", "must be finite and >= 0"));
    }
    let pi = problem.pi();
    let m_required = slice_density(problem, 2.0 * epsilon / c_h);
    let rate_bound = 4.0 * m * epsilon * epsilon / (pi * c_h * c_h);
    let auc_bound = 2.0 * rate_bound;

    let mut violations = Vec::new();
    if !link_feasible(problem, epsilon, c_h) {
        violations.push(format!("no link h with h' >= {c_h} keeps every eta_s within {epsilon} of h(eta)"));
    }
    if m < m_required * (1.0 - 1e-12) {
        violations.push(format!("m = {m} is below the slice density {m_required}"));
    }
    if pi > 0.5 {
        violations.push(format!("pi = {pi} > 1/2: the FPR bound needs 1 - pi in place of pi"));
    }

    let (pos, neg) = problem.weights(CurveKind::Real);
    let (p_tot, n_tot): (f64, f64) = (pos.iter().sum(), neg.iter().sum());
    let masses: Vec<f64> = problem.cells().iter().map(|c| c.mass).collect();
    let spu_groups = tie_groups(&problem.key(CurveKind::Spu));
    let real_groups = tie_groups(&problem.key(CurveKind::Real));
    let spu_masks = problem.threshold_classifiers(CurveKind::Spu);

    let mut matches = Vec::new();
    for real_mask in problem.threshold_classifiers(CurveKind::Real) {
        let (real_fpr, real_tpr) = problem.rates(real_mask, CurveKind::Real);
        let q: f64 = (0..masses.len()).filter(|i| real_mask & (1 << i) != 0).map(|i| masses[i]).sum();

        let (mut acc_mask, mut acc_mass, mut acc_tp, mut acc_fp) = (0u32, 0.0, 0.0, 0.0);
        let mut matched = None;
        for g in &spu_groups {
            if acc_mask == real_mask {
                matched = Some(problem.rates(real_mask, CurveKind::Real));
                break;
            }
            let g_mass: f64 = g.iter().map(|&i| masses[i]).sum();
            let g_tp: f64 = g.iter().map(|&i| pos[i]).sum();
            let g_fp: f64 = g.iter().map(|&i| neg[i]).sum();
            if g_mass > 0.0 && acc_mass + g_mass > q {
                let frac = ((q - acc_mass) / g_mass).clamp(0.0, 1.0);
                matched = Some(((acc_fp + frac * g_fp) / n_tot, (acc_tp + frac * g_tp) / p_tot));
                break;
            }
            for &i in g {
                acc_mask |= 1 << i;
            }
            acc_mass += g_mass;
            acc_tp += g_tp;
            acc_fp += g_fp;
        }
        let (matched_fpr, matched_tpr) = matched.unwrap_or_else(|| problem.rates(acc_mask, CurveKind::Real));
        let candidates = spu_masks
            .iter()
            .copied()
            .filter(|&mask| {
                let (f, t) = problem.rates(mask, CurveKind::Real);
                real_tpr - t <= rate_bound + FRONTIER_TOL && f - real_fpr <= rate_bound + FRONTIER_TOL
            })
            .collect();
        matches.push(GapMatch {
            real_classifier: real_mask,
            real_fpr,
            real_tpr,
            matched_fpr,
            matched_tpr,
            tpr_deficit: real_tpr - matched_tpr,
            fpr_excess: matched_fpr - real_fpr,
            candidates,
        });
    }

    let max_tpr_deficit = matches.iter().map(|g| g.tpr_deficit).fold(0.0, f64::max);
    let max_fpr_excess = matches.iter().map(|g| g.fpr_excess).fold(0.0, f64::max);
    let auc_optimal = ordered_auc(&real_groups, &pos, &neg);
    let auc_spu_optimal = ordered_auc(&spu_groups, &pos, &neg);
    let auc_gap = auc_optimal - auc_spu_optimal;
    let slack = 1e-12;
    let passed = violations.is_empty()
        && max_tpr_deficit <= rate_bound + slack
        && max_fpr_excess <= rate_bound + slack
        && auc_gap <= auc_bound + slack;
    Ok(NoisyGapReport {
        epsilon,
        c_h,
        m,
        pi,
        m_required,
        rate_bound,
        auc_bound,
        max_tpr_deficit,
        max_fpr_excess,
        auc_optimal,
        auc_spu_optimal,
        auc_gap,
        matches,
        precondition_violations: violations,
        passed,
    })
}

/// Cell counts `1..=10`, `eta` and `eta_s` independent uniforms.
pub fn random_problem(cells: usize, rng: &mut impl Rng) -> Result<DiscreteProblem> {
    let counts: Vec<u32> = (0..cells).map(|_| rng.random_range(1..=10)).collect();
    let eta: Vec<f64> = (0..cells).map(|_| rng.random()).collect();
    let eta_s: Vec<f64> = (0..cells).map(|_| rng.random()).collect();
    DiscreteProblem::from_counts(&counts, &eta, &eta_s)
}

/// `eta_s = h(eta)` exactly.
pub fn mela_problem(cells: usize, link: Link, rng: &mut impl Rng) -> Result<DiscreteProblem> {
    noisy_mela_problem(cells, link, 0.0, rng)
}

/// `eta_s = clamp(h(eta) + delta, 0, 1)` with `delta` uniform on
/// `[-epsilon, epsilon]`. Mirrored when needed so that `pi <= 1/2`; the
/// mirrored problem satisfies the same assumption with
/// `h~(t) = 1 - h(1 - t)`.
pub fn noisy_mela_problem(cells: usize, link: Link, epsilon: f64, rng: &mut impl Rng) -> Result<DiscreteProblem> {
    let counts: Vec<u32> = (0..cells).map(|_| rng.random_range(1..=10)).collect();
    let eta: Vec<f64> = (0..cells).map(|_| rng.random()).collect();
    let mut eta_s = Vec::with_capacity(cells);
    for &e in &eta {
        let h = link.eval(e);
        if !(0.0..=1.0).contains(&h) {
            return Err(Error::config("link", format!("h({e}) = {h} is outside [0, 1]")));
        }
        let delta = if epsilon > 0.0 {
            epsilon * (2.0 * rng.random::<f64>() - 1.0)
        } else {
            0.0
        };
        eta_s.push((h + delta).clamp(0.0, 1.0));
    }
    let problem = DiscreteProblem::from_counts(&counts, &eta, &eta_s)?;
    Ok(if problem.pi() > 0.5 { problem.reflect() } else { problem })
}
