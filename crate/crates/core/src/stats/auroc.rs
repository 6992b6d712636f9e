//! Area under the ROC curve via the Mann–Whitney statistic.

use serde::{Deserialize, Serialize};

/// AUROC with ties counted half. `None` when labels are all one class.
///
/// Sorts once and assigns mid-ranks to tied groups, so the result equals
/// exhaustive pair counting: U = Σ ranks(pos) − P(P+1)/2, AUC = U / (P·N).
pub fn auroc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum keeps mid-ranks integral.
    let mut rank_sum_x2: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1..=end sum to (start+1+end)·len/2; mid-rank x2 = start+1+end.
        let mid_x2 = (start + 1 + end) as u64;
        let pos_in_group = order[start..end].iter().filter(|&&k| labels[k]).count() as u64;
        rank_sum_x2 += mid_x2 * pos_in_group;
        start = end;
    }
    let p = positives as u64;
    let u_x2 = rank_sum_x2 - p * (p + 1);
    Some(u_x2 as f64 / (2 * positives * negatives) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// AUROC per sample, then the mean over evaluable samples.
    #[default]
    PerSample,
    /// One AUROC over the union of all samples' entries.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AurocSummary {
    pub mean: f64,
    pub std: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Aggregates AUROC over samples. Samples with one-class labels are
/// skipped. Standard deviation uses the n−1 denominator; 0 for pooled or a
/// single sample. Returns NaN mean if nothing is evaluable.
pub fn dataset_auroc<'a, I>(samples: I, pooling: Pooling) -> AurocSummary
where
    I: IntoIterator<Item = (&'a [f64], &'a [bool])>,
{
    match pooling {
        Pooling::PerSample => {
            let mut values = Vec::new();
            let mut skipped = 0;
            for (scores, labels) in samples {
                match auroc(scores, labels) {
                    Some(a) => values.push(a),
                    None => skipped += 1,
                }
            }
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (values.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            AurocSummary {
                mean: if n == 0 { f64::NAN } else { mean },
                std,
                evaluated: n,
                skipped,
            }
        }
        Pooling::Pooled => {
            let (mut all_scores, mut all_labels) = (Vec::new(), Vec::new());
            let mut count = 0;
            for (scores, labels) in samples {
                all_scores.extend_from_slice(scores);
                all_labels.extend_from_slice(labels);
                count += 1;
            }
            match auroc(&all_scores, &all_labels) {
                Some(mean) => AurocSummary {
                    mean,
                    std: 0.0,
                    evaluated: count,
                    skipped: 0,
                },
                None => AurocSummary {
                    mean: f64::NAN,
                    std: 0.0,
                    evaluated: 0,
                    skipped: count,
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(scores: &[f64], labels: &[bool]) -> Option<f64> {
        let (mut twice_wins, mut pairs) = (0u64, 0u64);
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1;
                    if scores[i] > scores[j] {
                        twice_wins += 2;
                    } else if scores[i] == scores[j] {
                        twice_wins += 1;
                    }
                }
            }
        }
        (pairs > 0).then(|| twice_wins as f64 / (2 * pairs) as f64)
    }

    #[test]
    fn examples() {
        assert_eq!(auroc(&[0.0, 1.0, 1.0, 0.0], &[false, true, true, false]), Some(1.0));
        assert_eq!(auroc(&[0.3; 5], &[true, false, true, false, false]), Some(0.5));
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]), Some(0.75));
        assert_eq!(auroc(&[0.2, 0.5], &[true, true]), None);
        assert_eq!(auroc(&[0.2, 0.5], &[false, false]), None);
    }

    #[test]
    fn aggregation() {
        let s1 = [0.9, 0.1];
        let s2 = [0.5, 0.5];
        let s3 = [0.1, 0.2];
        let l = [true, false];
        let degenerate = [true, true];
        let summary = dataset_auroc(
            [(&s1[..], &l[..]), (&s2[..], &l[..]), (&s3[..], &degenerate[..])],
            Pooling::PerSample,
        );
        assert_eq!(summary.mean, 0.75);
        assert_eq!((summary.evaluated, summary.skipped), (2, 1));
        assert!((summary.std - (0.125f64).sqrt()).abs() < 1e-12);

        let single = dataset_auroc([(&s1[..], &l[..])], Pooling::PerSample);
        assert_eq!((single.mean, single.std), (1.0, 0.0));

        let pooled = dataset_auroc([(&s1[..], &l[..]), (&s2[..], &l[..])], Pooling::Pooled);
        assert_eq!(pooled.mean, auroc(&[0.9, 0.1, 0.5, 0.5], &[true, false, true, false]).unwrap());
    }

    proptest! {
        #[test]
        fn matches_pair_counting(
            data in prop::collection::vec((0u8..12, any::<bool>()), 2..50)
        ) {
            // Coarse integer scores force frequent ties.
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 4.0).collect();
            let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
            prop_assert_eq!(auroc(&scores, &labels), brute_force(&scores, &labels));
        }

        #[test]
        fn monotone_invariance(
            data in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..40)
        ) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s).collect();
            let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
            let transformed: Vec<f64> = scores.iter().map(|s| (2.0 * s).exp() + 3.0).collect();
            prop_assert_eq!(auroc(&scores, &labels), auroc(&transformed, &labels));
        }

        #[test]
        fn negation_complements(
            data in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..40)
        ) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s).collect();
            let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assume!(sorted.windows(2).all(|w| w[0] != w[1]));
            if let (Some(a), Some(b)) = (auroc(&scores, &labels), auroc(&scores.iter().map(|s| -s).collect::<Vec<_>>(), &labels)) {
                prop_assert!((a + b - 1.0).abs() < 1e-12);
            }
        }
    }
}
