use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Confusion counts with OFF as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

pub fn confusion(gold: &[Label], predicted: &[Label]) -> Result<ConfusionCounts> {
    if gold.len() != predicted.len() {
        return Err(Error::LengthMismatch(gold.len(), predicted.len()));
    }
    let mut c = ConfusionCounts::default();
    for (&g, &p) in gold.iter().zip(predicted) {
        match (g.is_off(), p.is_off()) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score<T: Scalar>(precision: T, recall: T) -> T {
    let s = precision + recall;
    if s > T::zero() {
        T::of(2.0) * precision * recall / s
    } else {
        T::zero()
    }
}

fn ratio<T: Scalar>(num: usize, den: usize) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::of(num as f64) / T::of(den as f64)
    }
}

pub fn metrics<T: Scalar>(counts: &ConfusionCounts) -> Metrics<T> {
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    Metrics {
        precision,
        recall,
        f1: f1_score(precision, recall),
    }
}

/// `(new − baseline) / baseline`.
pub fn relative_improvement<T: Scalar>(baseline: T, new: T) -> Result<T> {
    if baseline == T::zero() {
        return Err(Error::ZeroBaseline);
    }
    Ok((new - baseline) / baseline)
}

/// Unweighted mean of each field.
pub fn macro_average<T: Scalar>(items: &[Metrics<T>]) -> Metrics<T> {
    if items.is_empty() {
        return Metrics {
            precision: T::zero(),
            recall: T::zero(),
            f1: T::zero(),
        };
    }
    let n = T::of(items.len() as f64);
    let mean = |f: fn(&Metrics<T>) -> T| items.iter().map(f).sum::<T>() / n;
    Metrics {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeStat {
    pub mean: f64,
    /// Set when the mapping was empty and the mean defaulted to 0.
    pub empty: bool,
}

/// Mean expansion tweets per target.
pub fn expansion_volume_stats(per_target_counts: &BTreeMap<String, usize>) -> VolumeStat {
    if per_target_counts.is_empty() {
        return VolumeStat {
            mean: 0.0,
            empty: true,
        };
    }
    let total: usize = per_target_counts.values().sum();
    VolumeStat {
        mean: total as f64 / per_target_counts.len() as f64,
        empty: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use Label::{Not, Off};

    #[test]
    fn counting() {
        let c = confusion(&[Off, Off, Not], &[Off, Not, Off]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 1, fn_: 1, tn: 0 });
        let same = confusion(&[Off, Not, Not], &[Off, Not, Not]).unwrap();
        assert_eq!((same.fp, same.fn_), (0, 0));
        assert_eq!(confusion(&[], &[]).unwrap(), ConfusionCounts::default());
        assert!(matches!(confusion(&[Off], &[]), Err(Error::LengthMismatch(1, 0))));
    }

    #[test]
    fn arithmetic() {
        let m: Metrics<f64> = metrics(&ConfusionCounts { tp: 2, fp: 1, fn_: 2, tn: 0 });
        assert_abs_diff_eq!(m.precision, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.recall, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.f1, 4.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_denominators() {
        let m: Metrics<f32> = metrics(&ConfusionCounts { tp: 0, fp: 0, fn_: 0, tn: 5 });
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn table_one_rows() {
        assert_abs_diff_eq!(f1_score(89.7, 36.0), 51.4, epsilon = 0.05);
        assert_abs_diff_eq!(f1_score(83.9, 65.4), 73.5, epsilon = 0.05);
    }

    #[test]
    fn relative() {
        let r: f64 = relative_improvement(65.6, 74.1).unwrap();
        assert!((0.129..=0.130).contains(&r));
        let r: f64 = relative_improvement(31.1, 55.6).unwrap();
        assert!((0.787..=0.789).contains(&r));
        assert_eq!(relative_improvement(3.0f64, 3.0).unwrap(), 0.0);
        assert!(matches!(relative_improvement(0.0f64, 1.0), Err(Error::ZeroBaseline)));
    }

    #[test]
    fn volume() {
        let m: BTreeMap<String, usize> = [("T1".into(), 3), ("T2".into(), 5)].into();
        assert_eq!(expansion_volume_stats(&m).mean, 4.0);
        let one: BTreeMap<String, usize> = [("T".into(), 7)].into();
        assert_eq!(expansion_volume_stats(&one).mean, 7.0);
        let e = expansion_volume_stats(&BTreeMap::new());
        assert!(e.empty && e.mean == 0.0);
    }

    #[test]
    fn macro_of_identical_is_identity() {
        let m = Metrics { precision: 0.3f64, recall: 0.7, f1: 0.42 };
        for n in [1, 5] {
            let avg = macro_average(&vec![m; n]);
            assert_abs_diff_eq!(avg.precision, m.precision, epsilon = 1e-15);
            assert_abs_diff_eq!(avg.recall, m.recall, epsilon = 1e-15);
            assert_abs_diff_eq!(avg.f1, m.f1, epsilon = 1e-15);
        }
    }

    fn brute_force(gold: &[bool], pred: &[bool]) -> (f64, f64, f64) {
        // index-by-index confusion table, independent of `confusion`
        let mut table = [[0usize; 2]; 2];
        for i in 0..gold.len() {
            table[usize::from(gold[i])][usize::from(pred[i])] += 1;
        }
        let (tp, fp, fneg) = (table[1][1], table[0][1], table[1][0]);
        let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let r = if tp + fneg == 0 { 0.0 } else { tp as f64 / (tp + fneg) as f64 };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        (p, r, f)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn agrees_with_brute_force(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 0..60)) {
            let gold: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            let pred: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            let lab = |b: &bool| if *b { Off } else { Not };
            let c = confusion(&gold.iter().map(lab).collect::<Vec<_>>(), &pred.iter().map(lab).collect::<Vec<_>>()).unwrap();
            prop_assert_eq!(c.total(), gold.len());
            let m: Metrics<f64> = metrics(&c);
            let (p, r, f) = brute_force(&gold, &pred);
            prop_assert!((m.precision - p).abs() < 1e-12);
            prop_assert!((m.recall - r).abs() < 1e-12);
            prop_assert!((m.f1 - f).abs() < 1e-12);
        }
    }
}
