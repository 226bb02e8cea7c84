//! Per-group verification accuracy and bias summaries (mean, STD, SER).

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::importance::PairExplanation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub group: String,
    /// Decision threshold; `+inf` when rejecting every pair scores best.
    #[serde(with = "extended_float")]
    pub threshold: f64,
    /// Percent correct, 0 to 100.
    pub accuracy: f64,
    pub num_pairs: usize,
}

impl VerificationResult {
    /// Result for an accuracy measured elsewhere.
    pub fn from_accuracy(group: impl Into<String>, accuracy: f64) -> Result<Self> {
        if !(0.0..=100.0).contains(&accuracy) {
            return Err(Error::InvalidInput(format!("accuracy {accuracy} is outside [0, 100]")));
        }
        Ok(VerificationResult {
            group: group.into(),
            threshold: f64::NAN,
            accuracy,
            num_pairs: 1,
        })
    }

    /// Error rate in percent.
    pub fn error_rate(&self) -> f64 {
        100.0 - self.accuracy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub results: Vec<VerificationResult>,
    pub mean_accuracy: f64,
    pub std: f64,
    /// Skewed error ratio, highest over lowest group error rate. `+inf` when
    /// some group makes no errors.
    #[serde(with = "extended_float")]
    pub ser: f64,
}

impl BiasReport {
    /// `Mean`, `STD` and `SER` rounded to two decimals.
    pub fn summary_line(&self) -> String {
        format!(
            "Mean {:.2}  STD {:.2}  SER {}",
            self.mean_accuracy,
            self.std,
            if self.ser.is_finite() {
                format!("{:.2}", self.ser)
            } else {
                "inf".to_string()
            }
        )
    }
}

/// Best single-threshold accuracy for `(similarity, label)` scores.
///
/// A pair is predicted genuine iff its similarity is at least the threshold.
/// Candidates are every observed score plus `+inf`; among thresholds reaching
/// the maximum accuracy the smallest wins. Returns `(threshold, accuracy %)`.
pub fn best_threshold_accuracy(scores: &[(f64, Label)]) -> Result<(f64, f64)> {
    if let Some((s, _)) = scores.iter().find(|(s, _)| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite similarity score {s}")));
    }
    let genuine = scores.iter().filter(|(_, l)| *l == Label::Genuine).count();
    let imposter = scores.len() - genuine;
    if genuine == 0 || imposter == 0 {
        return Err(Error::InvalidInput(format!(
            "threshold selection needs both labels, got {genuine} genuine and {imposter} imposter"
        )));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (mut best_t, mut best_correct) = (f64::INFINITY, usize::MAX);
    let (mut gen_below, mut imp_below) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        let correct = (genuine - gen_below) + imp_below;
        if best_correct == usize::MAX || correct > best_correct {
            best_t = t;
            best_correct = correct;
        }
        while i < sorted.len() && sorted[i].0 == t {
            match sorted[i].1 {
                Label::Genuine => gen_below += 1,
                Label::Imposter => imp_below += 1,
            }
            i += 1;
        }
    }
    // Threshold +inf: every pair rejected.
    if imposter > best_correct {
        best_t = f64::INFINITY;
        best_correct = imposter;
    }
    Ok((best_t, 100.0 * best_correct as f64 / scores.len() as f64))
}

/// Applies [`best_threshold_accuracy`] to each group separately. Groups are
/// reported in first-appearance order.
pub fn group_verification<'a, I>(pairs: I) -> Result<Vec<VerificationResult>>
where
    I: IntoIterator<Item = (&'a str, Label, f64)>,
{
    let mut groups: Vec<(&str, Vec<(f64, Label)>)> = Vec::new();
    for (group, label, score) in pairs {
        match groups.iter_mut().find(|(g, _)| *g == group) {
            Some((_, v)) => v.push((score, label)),
            None => groups.push((group, vec![(score, label)])),
        }
    }
    groups
        .into_iter()
        .map(|(group, scores)| {
            let (threshold, accuracy) = best_threshold_accuracy(&scores)
                .map_err(|e| Error::InvalidInput(format!("group {group:?}: {e}")))?;
            Ok(VerificationResult {
                group: group.to_string(),
                threshold,
                accuracy,
                num_pairs: scores.len(),
            })
        })
        .collect()
}

/// [`group_verification`] over the unmasked similarities of explained pairs.
pub fn verify_explanations(explanations: &[PairExplanation]) -> Result<Vec<VerificationResult>> {
    let mut sorted: Vec<&PairExplanation> = explanations.iter().collect();
    sorted.sort_by_key(|e| e.pair_id);
    group_verification(sorted.iter().map(|e| (e.group.as_str(), e.label, e.base_similarity)))
}

/// Mean, population standard deviation and skewed error ratio of per-group
/// accuracies.
pub fn bias_report(results: Vec<VerificationResult>) -> Result<BiasReport> {
    if results.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "bias summary needs at least 2 groups, got {}",
            results.len()
        )));
    }
    if let Some(r) = results.iter().find(|r| !(0.0..=100.0).contains(&r.accuracy)) {
        return Err(Error::InvalidInput(format!(
            "group {:?} accuracy {} is outside [0, 100]",
            r.group, r.accuracy
        )));
    }
    let n = results.len() as f64;
    let mean = results.iter().map(|r| r.accuracy).sum::<f64>() / n;
    let std = (results.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / n).sqrt();
    let max_err = results.iter().map(VerificationResult::error_rate).fold(f64::MIN, f64::max);
    let min_err = results.iter().map(VerificationResult::error_rate).fold(f64::MAX, f64::min);
    let ser = if min_err > 0.0 {
        max_err / min_err
    } else {
        log::warn!("a group has no verification errors; skewed error ratio is unbounded");
        f64::INFINITY
    };
    Ok(BiasReport {
        results,
        mean_accuracy: mean,
        std,
        ser,
    })
}

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"` and `"nan"`,
/// which plain JSON numbers cannot express.
pub(crate) mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Genuine as G, Imposter as I};

    /// Brute-force sweep over every candidate threshold.
    fn sweep(scores: &[(f64, Label)]) -> (f64, f64) {
        let mut candidates: Vec<f64> = scores.iter().map(|s| s.0).collect();
        candidates.push(f64::INFINITY);
        candidates.sort_by(f64::total_cmp);
        let mut best = (f64::NAN, -1.0);
        for t in candidates {
            let correct = scores
                .iter()
                .filter(|(s, l)| (*s >= t) == (*l == G))
                .count();
            let acc = 100.0 * correct as f64 / scores.len() as f64;
            if acc > best.1 {
                best = (t, acc);
            }
        }
        best
    }

    #[test]
    fn separable_pair() {
        assert_eq!(best_threshold_accuracy(&[(0.9, G), (0.1, I)]).unwrap(), (0.9, 100.0));
    }

    #[test]
    fn overlapping_scores() {
        let scores = [(0.8, G), (0.4, G), (0.6, I), (0.2, I)];
        assert_eq!(sweep(&scores), (0.4, 75.0));
        assert_eq!(best_threshold_accuracy(&scores).unwrap(), (0.4, 75.0));
    }

    #[test]
    fn indistinguishable_is_chance() {
        let scores = [(0.5, G), (0.5, G), (0.5, I), (0.5, I)];
        assert_eq!(best_threshold_accuracy(&scores).unwrap().1, 50.0);
    }

    #[test]
    fn inverted_scores_prefer_rejecting_everything() {
        let scores = [(0.1, G), (0.9, I), (0.8, I)];
        assert_eq!(best_threshold_accuracy(&scores).unwrap(), (f64::INFINITY, 100.0 * 2.0 / 3.0));
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(best_threshold_accuracy(&[(0.3, G), (0.4, G)]).is_err());
        assert!(best_threshold_accuracy(&[(f64::NAN, G), (0.4, I)]).is_err());
    }

    #[test]
    fn groups_are_evaluated_independently() {
        let pairs = [
            ("A", G, 0.9),
            ("B", G, 0.5),
            ("A", I, 0.1),
            ("B", I, 0.5),
        ];
        let r = group_verification(pairs).unwrap();
        assert_eq!(r.iter().map(|r| r.accuracy).collect::<Vec<_>>(), vec![100.0, 50.0]);
        assert_eq!(r[0].group, "A");
        let err = group_verification([("A", G, 0.9), ("A", I, 0.1), ("Z", G, 0.4)]).unwrap_err();
        assert!(err.to_string().contains("\"Z\""));
    }

    fn report(accs: &[f64]) -> BiasReport {
        bias_report(
            accs.iter()
                .enumerate()
                .map(|(i, a)| VerificationResult::from_accuracy(format!("g{i}"), *a).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn table_rows_reproduce() {
        let r = report(&[92.92, 93.30, 95.67, 94.02]);
        assert_eq!(r.summary_line(), "Mean 93.98  STD 1.05  SER 1.64");
        let r = report(&[80.25, 92.33, 94.88, 93.15]);
        assert_eq!(r.summary_line(), "Mean 90.15  STD 5.79  SER 3.86");
    }

    #[test]
    fn unbiased_and_perfect_cases() {
        let r = report(&[90.0; 4]);
        assert_eq!((r.std, r.ser), (0.0, 1.0));
        let r = report(&[100.0, 90.0]);
        assert!(r.ser.is_infinite());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains(r#""ser":"inf""#));
        let back: BiasReport = serde_json::from_str(&json).unwrap();
        assert!(back.ser.is_infinite());
        assert!(bias_report(vec![VerificationResult::from_accuracy("a", 90.0).unwrap()]).is_err());
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn fast_sweep_matches_brute_force(
            raw in prop::collection::vec((0u8..20, any::<bool>()), 2..40)
        ) {
            let mut scores: Vec<(f64, Label)> =
                raw.iter().map(|(s, g)| (*s as f64 / 20.0, if *g { G } else { I })).collect();
            scores.push((0.3, G));
            scores.push((0.7, I));
            let (t, acc) = best_threshold_accuracy(&scores).unwrap();
            let (bt, bacc) = sweep(&scores);
            prop_assert_eq!(acc, bacc);
            prop_assert_eq!(t, bt);
        }

        #[test]
        fn ser_at_least_one_and_std_shift_invariant(
            accs in prop::collection::vec(50.0f64..99.0, 2..8),
            shift in -0.9f64..0.9,
        ) {
            let r = report(&accs);
            prop_assert!(r.ser >= 1.0);
            let shifted: Vec<f64> = accs.iter().map(|a| a + shift).collect();
            let s = report(&shifted);
            prop_assert!((r.std - s.std).abs() < 1e-9);
        }

        #[test]
        fn duplicating_a_correct_point_never_hurts(
            raw in prop::collection::vec((0u8..20, any::<bool>()), 2..30)
        ) {
            let mut scores: Vec<(f64, Label)> =
                raw.iter().map(|(s, g)| (*s as f64 / 20.0, if *g { G } else { I })).collect();
            scores.push((0.3, G));
            scores.push((0.7, I));
            let (t, acc) = best_threshold_accuracy(&scores).unwrap();
            if let Some(p) = scores.iter().copied().find(|(s, l)| (*s >= t) == (*l == G)) {
                scores.push(p);
                prop_assert!(best_threshold_accuracy(&scores).unwrap().1 >= acc - 1e-12);
            }
        }
    }
}
