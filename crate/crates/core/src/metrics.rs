//! Substitute (soft-label) and real classification metrics.
//!
//! `TPR_SPU = sum(S * Yhat) / sum(S)` and `FPR_SPU = sum((1 - S) * Yhat) /
//! sum(1 - S)` replace the unknown true label by the soft label. Curves
//! threshold scores with the strict rule `Yhat = [score > T]`; samples with
//! equal scores always enter the predicted-positive set together, and the
//! area is the trapezoid over the swept points.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Real,
    Spu,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Threshold `T` of `Yhat = [score > T]`; `-inf` for the all-positive end.
    #[serde(with = "threshold_serde")]
    pub threshold: f64,
    /// FPR (or FPR_SPU).
    pub x: f64,
    /// TPR (or TPR_SPU).
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub kind: CurveKind,
    points: Vec<RocPoint>,
}

impl RocCurve {
    /// Validates ordering and endpoints: `x` and `y` non-decreasing, first
    /// point `(0, 0)`, last point `(1, 1)`.
    pub fn from_points(kind: CurveKind, points: Vec<RocPoint>) -> Result<Self> {
        let bad = |msg: String| Err(Error::config("curve", msg));
        if points.len() < 2 {
            return bad("needs at least the two endpoints".into());
        }
        let (first, last) = (points[0], points[points.len() - 1]);
        if (first.x, first.y) != (0.0, 0.0) || (last.x, last.y) != (1.0, 1.0) {
            return bad("must start at (0, 0) and end at (1, 1)".into());
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].x < w[0].x || w[1].y < w[0].y {
                return bad(format!("points {i} and {} are out of order", i + 1));
            }
        }
        Ok(Self { kind, points })
    }

    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    pub fn auc(&self) -> f64 {
        auc(self)
    }

    /// Writes `threshold,x,y` rows under a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "threshold,x,y")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", p.threshold, p.x, p.y)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(kind: CurveKind, input: R) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let parse = |field: Option<&str>, column: &str| -> Result<f64> {
                field
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Csv {
                        row: i,
                        column: column.to_string(),
                        message: "expected a number".into(),
                    })
            };
            let mut it = line.split(',');
            let threshold = parse(it.next(), "threshold")?;
            let x = parse(it.next(), "x")?;
            let y = parse(it.next(), "y")?;
            points.push(RocPoint { threshold, x, y });
        }
        Self::from_points(kind, points)
    }
}

mod threshold_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

fn positive_mass(soft_labels: &[f64]) -> Result<f64> {
    let m: f64 = soft_labels.iter().sum();
    if m <= 0.0 {
        return Err(Error::NoPositiveMass);
    }
    Ok(m)
}

fn negative_mass(soft_labels: &[f64]) -> Result<f64> {
    let m: f64 = soft_labels.iter().map(|s| 1.0 - s).sum();
    if m <= 0.0 {
        return Err(Error::NoNegativeMass);
    }
    Ok(m)
}

pub fn tpr_spu(soft_labels: &[f64], predictions: &[bool]) -> Result<f64> {
    check_len(soft_labels.len(), predictions.len())?;
    let total = positive_mass(soft_labels)?;
    let hit: f64 = soft_labels
        .iter()
        .zip(predictions)
        .filter(|(_, &p)| p)
        .map(|(s, _)| s)
        .sum();
    Ok(hit / total)
}

pub fn fpr_spu(soft_labels: &[f64], predictions: &[bool]) -> Result<f64> {
    check_len(soft_labels.len(), predictions.len())?;
    let total = negative_mass(soft_labels)?;
    let hit: f64 = soft_labels
        .iter()
        .zip(predictions)
        .filter(|(_, &p)| p)
        .map(|(s, _)| 1.0 - s)
        .sum();
    Ok(hit / total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub tpr: f64,
    pub fpr: f64,
}

/// Empirical TPR / FPR against true labels.
pub fn real_rates(labels: &[bool], predictions: &[bool]) -> Result<Rates> {
    check_len(labels.len(), predictions.len())?;
    let (mut pos, mut neg, mut tp, mut fp) = (0usize, 0usize, 0usize, 0usize);
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y, p) {
            (true, true) => {
                pos += 1;
                tp += 1
            }
            (true, false) => pos += 1,
            (false, true) => {
                neg += 1;
                fp += 1
            }
            (false, false) => neg += 1,
        }
    }
    if pos == 0 {
        return Err(Error::EmptyClass { class: 1 });
    }
    if neg == 0 {
        return Err(Error::EmptyClass { class: 0 });
    }
    Ok(Rates {
        tpr: tp as f64 / pos as f64,
        fpr: fp as f64 / neg as f64,
    })
}

/// Threshold sweep with per-sample positive / negative weights.
fn sweep(kind: CurveKind, pos_w: &[f64], neg_w: &[f64], scores: &[f64]) -> Result<RocCurve> {
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::config("scores", format!("score {i} is NaN")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // descending score; ties ordered by weight so the running sums do not
    // depend on input order
    order.sort_by(|&i, &j| {
        scores[j]
            .total_cmp(&scores[i])
            .then_with(|| pos_w[i].total_cmp(&pos_w[j]))
            .then_with(|| neg_w[i].total_cmp(&neg_w[j]))
    });

    let mut cum = Vec::with_capacity(order.len() + 1);
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut thresholds = Vec::new();
    let mut k = 0;
    cum.push((0.0, 0.0));
    if let Some(&top) = order.first() {
        thresholds.push(scores[top]);
    }
    while k < order.len() {
        let v = scores[order[k]];
        while k < order.len() && scores[order[k]].total_cmp(&v) == Ordering::Equal {
            tp += pos_w[order[k]];
            fp += neg_w[order[k]];
            k += 1;
        }
        cum.push((tp, fp));
        thresholds.push(if k < order.len() {
            scores[order[k]]
        } else {
            f64::NEG_INFINITY
        });
    }
    // normalise by the final running sums so the last point is exactly (1, 1)
    let (tp_total, fp_total) = (tp, fp);
    let points = cum
        .into_iter()
        .zip(thresholds)
        .map(|((t, f), threshold)| RocPoint {
            threshold,
            x: f / fp_total,
            y: t / tp_total,
        })
        .collect();
    RocCurve::from_points(kind, points)
}

/// Substitute ROC: `(FPR_SPU, TPR_SPU)` at every distinct score threshold.
pub fn roc_spu(soft_labels: &[f64], scores: &[f64]) -> Result<RocCurve> {
    check_len(soft_labels.len(), scores.len())?;
    positive_mass(soft_labels)?;
    negative_mass(soft_labels)?;
    let neg: Vec<f64> = soft_labels.iter().map(|s| 1.0 - s).collect();
    sweep(CurveKind::Spu, soft_labels, &neg, scores)
}

pub fn real_roc(labels: &[bool], scores: &[f64]) -> Result<RocCurve> {
    check_len(labels.len(), scores.len())?;
    if !labels.iter().any(|&y| y) {
        return Err(Error::EmptyClass { class: 1 });
    }
    if labels.iter().all(|&y| y) {
        return Err(Error::EmptyClass { class: 0 });
    }
    let pos: Vec<f64> = labels.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
    let neg: Vec<f64> = pos.iter().map(|p| 1.0 - p).collect();
    sweep(CurveKind::Real, &pos, &neg, scores)
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * (w[0].y + w[1].y) / 2.0)
        .sum()
}

pub fn auc_spu(soft_labels: &[f64], scores: &[f64]) -> Result<f64> {
    Ok(auc(&roc_spu(soft_labels, scores)?))
}

pub fn real_auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    Ok(auc(&real_roc(labels, scores)?))
}

/// Largest achievable AUC_SPU given only the soft-label distribution:
///
/// `1/2 + int F(1-F) du / (2 int F du * int (1-F) du)`
///
/// with `F` the right-continuous empirical CDF on `[0, 1]`. The integrals
/// are exact: `int F = 1 - mean(S)`, `int (1-F) = mean(S)`, and `F(1-F)` is
/// constant at `(i/n)(1 - i/n)` between the i-th and (i+1)-th order
/// statistics.
pub fn auc_spu_bound(soft_labels: &[f64]) -> Result<f64> {
    if soft_labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some((index, &value)) = soft_labels
        .iter()
        .enumerate()
        .find(|(_, s)| !(0.0..=1.0).contains(*s))
    {
        return Err(Error::SoftLabelRange { index, value });
    }
    let n = soft_labels.len() as f64;
    let mean = soft_labels.iter().sum::<f64>() / n;
    if mean <= 0.0 || mean >= 1.0 {
        return Err(Error::DegenerateSoftLabels { mean });
    }
    let mut sorted = soft_labels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let spread: f64 = sorted
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let f = (i + 1) as f64 / n;
            f * (1.0 - f) * (w[1] - w[0])
        })
        .sum();
    Ok(0.5 + spread / (2.0 * (1.0 - mean) * mean))
}

/// Linear map from real to substitute metrics under generalized SCAR.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureCoefficients {
    pub pi: f64,
    pub s_p: f64,
    pub s_n: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MixtureCoefficients {
    /// `ad - bc`; positive whenever `s_p > s_n`.
    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `(TPR_SPU, FPR_SPU) = (a TPR + b FPR, c TPR + d FPR)`.
    pub fn map_rates(&self, real: Rates) -> Rates {
        Rates {
            tpr: self.a * real.tpr + self.b * real.fpr,
            fpr: self.c * real.tpr + self.d * real.fpr,
        }
    }

    pub fn map_auc(&self, real_auc: f64) -> f64 {
        map_auc(self, real_auc)
    }
}

pub fn mixture_coefficients(pi: f64, s_p: f64, s_n: f64) -> Result<MixtureCoefficients> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::config("pi", format!("{pi} is not in (0, 1)")));
    }
    for (name, v) in [("s_p", s_p), ("s_n", s_n)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::config(name, format!("{v} is not in [0, 1]")));
        }
    }
    let mass = pi * s_p + (1.0 - pi) * s_n;
    if mass <= 0.0 || mass >= 1.0 {
        return Err(Error::ZeroDenominator(mass));
    }
    let rest = 1.0 - mass;
    Ok(MixtureCoefficients {
        pi,
        s_p,
        s_n,
        a: pi * s_p / mass,
        b: (1.0 - pi) * s_n / mass,
        c: pi * (1.0 - s_p) / rest,
        d: (1.0 - pi) * (1.0 - s_n) / rest,
    })
}

/// `AUC_SPU = (b + c) / 2 + (ad - bc) AUC`.
pub fn map_auc(coeffs: &MixtureCoefficients, real_auc: f64) -> f64 {
    (coeffs.b + coeffs.c) / 2.0 + coeffs.determinant() * real_auc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const S4: [f64; 4] = [1.0, 0.0, 0.5, 0.5];
    const P4: [bool; 4] = [true, false, true, false];

    #[test]
    fn substitute_rates_by_hand() {
        assert!((tpr_spu(&S4, &P4).unwrap() - 0.75).abs() < 1e-15);
        assert!((fpr_spu(&S4, &P4).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(tpr_spu(&S4, &[true; 4]).unwrap(), 1.0);
        assert_eq!(fpr_spu(&S4, &[true; 4]).unwrap(), 1.0);
        assert_eq!(tpr_spu(&S4, &[false; 4]).unwrap(), 0.0);
        assert_eq!(fpr_spu(&S4, &[false; 4]).unwrap(), 0.0);
    }

    #[test]
    fn substitute_rates_need_mass() {
        assert!(matches!(tpr_spu(&[0.0, 0.0], &[true, false]), Err(Error::NoPositiveMass)));
        assert!(matches!(fpr_spu(&[1.0, 1.0], &[true, false]), Err(Error::NoNegativeMass)));
        assert!(matches!(tpr_spu(&[1.0], &[true, false]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn perfect_and_constant_scores() {
        let s = [1.0, 0.0, 1.0, 0.0, 0.0];
        let curve = roc_spu(&s, &s).unwrap();
        assert!(curve.points().iter().any(|p| p.x == 0.0 && p.y == 1.0));
        assert_eq!(curve.auc(), 1.0);

        let curve = roc_spu(&s, &[0.3; 5]).unwrap();
        assert_eq!(curve.points().len(), 2);
        assert_eq!(curve.auc(), 0.5);
    }

    #[test]
    fn trapezoid_by_hand() {
        let mk = |pts: &[(f64, f64)]| {
            RocCurve::from_points(
                CurveKind::Spu,
                pts.iter().map(|&(x, y)| RocPoint { threshold: 0.0, x, y }).collect(),
            )
            .unwrap()
        };
        assert_eq!(auc(&mk(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)])), 1.0);
        assert_eq!(auc(&mk(&[(0.0, 0.0), (1.0, 1.0)])), 0.5);
        assert!((auc(&mk(&[(0.0, 0.0), (0.2, 0.75), (1.0, 1.0)])) - 0.775).abs() < 1e-15);
    }

    #[test]
    fn strict_threshold_and_sentinel() {
        let curve = roc_spu(&[1.0, 0.0, 0.5], &[0.9, 0.1, 0.5]).unwrap();
        let t: Vec<f64> = curve.points().iter().map(|p| p.threshold).collect();
        assert_eq!(t, vec![0.9, 0.5, 0.1, f64::NEG_INFINITY]);
        // T = 0.5 keeps only the 0.9 sample
        assert_eq!(curve.points()[1].y, 1.0 / 1.5);
    }

    #[test]
    fn real_metrics_by_hand() {
        let r = real_rates(&[true, true, false, false], &[true, false, true, false]).unwrap();
        assert_eq!((r.tpr, r.fpr), (0.5, 0.5));
        assert_eq!(real_auc(&[true, false, true], &[1.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(real_auc(&[true, false], &[0.2, 0.9]).unwrap(), 0.0);
        assert!(matches!(real_rates(&[true], &[true]), Err(Error::EmptyClass { class: 0 })));
        assert!(matches!(real_roc(&[false], &[0.1]), Err(Error::EmptyClass { class: 1 })));
    }

    #[test]
    fn bound_special_cases() {
        assert!((auc_spu_bound(&[0.0, 1.0, 1.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(auc_spu_bound(&[0.5; 7]).unwrap(), 0.5);
        let grid: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        assert!((auc_spu_bound(&grid).unwrap() - 5.0 / 6.0).abs() < 0.005);
        assert!(matches!(auc_spu_bound(&[0.0, 0.0]), Err(Error::DegenerateSoftLabels { .. })));
        assert!(matches!(auc_spu_bound(&[1.0]), Err(Error::DegenerateSoftLabels { .. })));
    }

    #[test]
    fn coefficients_by_hand() {
        let c = mixture_coefficients(0.5, 0.8, 0.2).unwrap();
        for (got, want) in [(c.a, 0.8), (c.b, 0.2), (c.c, 0.2), (c.d, 0.8), (c.determinant(), 0.6)] {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!((map_auc(&c, 1.0) - 0.8).abs() < 1e-12);
        let id = mixture_coefficients(0.3, 1.0, 0.0).unwrap();
        assert_eq!((id.a, id.b, id.c, id.d), (1.0, 0.0, 0.0, 1.0));
        assert_eq!(map_auc(&id, 0.731), 0.731);
        assert!(matches!(mixture_coefficients(0.5, 0.0, 0.0), Err(Error::ZeroDenominator(_))));
        assert!(matches!(mixture_coefficients(0.5, 1.0, 1.0), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn curve_csv_round_trip() {
        let curve = roc_spu(&[0.3, 0.9, 0.1, 0.6], &[0.2, 0.8, 0.2, 0.5]).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let back = RocCurve::read_csv(CurveKind::Spu, buf.as_slice()).unwrap();
        assert_eq!(back, curve);
        let json = serde_json::to_string(&curve).unwrap();
        assert!(json.contains("\"-inf\""));
        let back: RocCurve = serde_json::from_str(&json).unwrap();
        assert_eq!(back, curve);
    }

    fn soft_and_scores() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64], n),
                prop::collection::vec(prop_oneof![Just(0.5), 0.0..1.0f64], n),
            )
        })
    }

    proptest! {
        #[test]
        fn rates_in_unit_interval((s, scores) in soft_and_scores(), t in 0.0..1.0f64) {
            let preds: Vec<bool> = scores.iter().map(|&g| g > t).collect();
            if let Ok(v) = tpr_spu(&s, &preds) { prop_assert!((0.0..=1.0).contains(&v)); }
            if let Ok(v) = fpr_spu(&s, &preds) { prop_assert!((0.0..=1.0).contains(&v)); }
        }

        #[test]
        fn lower_threshold_never_lowers_rates((s, scores) in soft_and_scores(), t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let p_lo: Vec<bool> = scores.iter().map(|&g| g > lo).collect();
            let p_hi: Vec<bool> = scores.iter().map(|&g| g > hi).collect();
            if let (Ok(a), Ok(b)) = (tpr_spu(&s, &p_lo), tpr_spu(&s, &p_hi)) { prop_assert!(a >= b); }
            if let (Ok(a), Ok(b)) = (fpr_spu(&s, &p_lo), fpr_spu(&s, &p_hi)) { prop_assert!(a >= b); }
        }

        #[test]
        fn auc_below_bound((s, scores) in soft_and_scores()) {
            if let (Ok(a), Ok(bound)) = (auc_spu(&s, &scores), auc_spu_bound(&s)) {
                prop_assert!(a <= bound + 2e-9, "auc {a} > bound {bound}");
            }
        }

        #[test]
        fn auc_permutation_invariant((s, scores) in soft_and_scores(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut idx: Vec<usize> = (0..s.len()).collect();
            idx.shuffle(&mut crate::rng::seeded(seed));
            let s2: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
            let g2: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            if let Ok(a) = auc_spu(&s, &scores) {
                prop_assert_eq!(a, auc_spu(&s2, &g2).unwrap());
            }
        }

        #[test]
        fn hard_labels_reduce_to_real((ys, scores) in (2usize..50).prop_flat_map(|n| (
            prop::collection::vec(any::<bool>(), n), prop::collection::vec(0.0..1.0f64, n)))) {
            let s: Vec<f64> = ys.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
            if let Ok(real) = real_roc(&ys, &scores) {
                let spu = roc_spu(&s, &scores).unwrap();
                prop_assert_eq!(real.points(), spu.points());
            }
        }

        #[test]
        fn coefficient_rows_are_convex(pi in 0.01..0.99f64, sp in 0.0..=1.0f64, sn in 0.0..=1.0f64) {
            if let Ok(c) = mixture_coefficients(pi, sp, sn) {
                prop_assert!((c.a + c.b - 1.0).abs() < 1e-12);
                prop_assert!((c.c + c.d - 1.0).abs() < 1e-12);
                if sp > sn { prop_assert!(c.determinant() > 0.0); }
                prop_assert!((map_auc(&c, 0.5) - 0.5).abs() < 1e-12);
            }
        }
    }
}
