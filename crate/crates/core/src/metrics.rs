use serde::{Deserialize, Serialize};

use crate::answer::TaskKind;
use crate::sample::{Dataset, Sample};

/// Confusion counts with "noisy" as the positive class.
///
/// Precision is 1.0 when nothing was flagged and recall is 1.0 when there was
/// nothing to find.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
}

/// `pairs` yields `(flagged_noisy, actually_noisy)` per sample.
pub fn detection_metrics(pairs: impl IntoIterator<Item = (bool, bool)>) -> DetectionMetrics {
    let mut m = DetectionMetrics::default();
    for (flagged, actual) in pairs {
        match (flagged, actual) {
            (true, true) => m.true_positives += 1,
            (true, false) => m.false_positives += 1,
            (false, true) => m.false_negatives += 1,
            (false, false) => m.true_negatives += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    m.precision = ratio(m.true_positives, m.true_positives + m.false_positives);
    m.recall = ratio(m.true_positives, m.true_positives + m.false_negatives);
    m
}

/// Fraction of samples whose label matches the ground truth; `None` if any
/// sample lacks one. Vacuously 1.0 for no samples.
pub fn label_accuracy<'a>(
    samples: impl IntoIterator<Item = &'a Sample>,
    kind: TaskKind,
) -> Option<f64> {
    let (mut total, mut correct) = (0usize, 0usize);
    for s in samples {
        total += 1;
        if !s.is_mislabeled(kind)? {
            correct += 1;
        }
    }
    Some(if total == 0 { 1.0 } else { correct as f64 / total as f64 })
}

/// Fraction of mislabeled samples in `ds`; `None` without full ground truth.
pub fn residual_noise_rate(ds: &Dataset) -> Option<f64> {
    label_accuracy(ds.iter(), ds.task_kind()).map(|acc| 1.0 - acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn precision_recall_counts() {
        let m = detection_metrics([(true, true), (true, false), (false, true), (false, false), (true, true)]);
        assert_eq!((m.true_positives, m.false_positives, m.false_negatives, m.true_negatives), (2, 1, 1, 1));
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn vacuous_cases_are_perfect() {
        let m = detection_metrics([(false, false); 3]);
        assert_eq!((m.precision, m.recall), (1.0, 1.0));
    }

    #[test]
    fn residual_noise() {
        let ds = Dataset::new(
            TaskKind::MultipleChoice,
            vec![
                Sample::new("a", "q", "B").with_ground_truth("B"),
                Sample::new("b", "q", "C").with_ground_truth("B"),
            ],
        )
        .unwrap();
        assert_eq!(residual_noise_rate(&ds), Some(0.5));
        let unknown = Dataset::new(TaskKind::MultipleChoice, vec![Sample::new("a", "q", "B")]).unwrap();
        assert_eq!(residual_noise_rate(&unknown), None);
    }
}
