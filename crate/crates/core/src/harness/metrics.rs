/// Area under the ROC curve by the Mann–Whitney rank formula, with tied
/// scores sharing their average rank. `None` when `labels` hold one class.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(
        scores.len(),
        labels.len(),
        "scores and labels differ in length"
    );
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Ranks are doubled so tie averages stay integral.
    let mut pos_rank_sum2: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let rank2 = (start + 1 + end) as u64;
        let pos = order[start..end].iter().filter(|&&i| labels[i]).count() as u64;
        pos_rank_sum2 += pos * rank2;
        start = end;
    }
    let (p, q) = (n_pos as u64, n_neg as u64);
    let u2 = pos_rank_sum2 - p * (p + 1);
    Some(u2 as f64 / (2 * p * q) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in labels.iter().enumerate() {
            for (j, &yj) in labels.iter().enumerate() {
                if yi && !yj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn reference_example() {
        let s = [0.1, 0.4, 0.35, 0.8];
        let y = [false, false, true, true];
        assert_eq!(auroc(&s, &y), Some(0.75));
    }

    #[test]
    fn edge_cases() {
        assert_eq!(auroc(&[0.3; 4], &[true, false, true, false]), Some(0.5));
        assert_eq!(auroc(&[0.1, 0.2, 0.9], &[false, false, true]), Some(1.0));
        assert_eq!(auroc(&[0.1, 0.2], &[true, true]), None);
        assert_eq!(auroc(&[], &[]), None);
    }

    proptest! {
        #[test]
        fn matches_pair_enumeration(
            data in proptest::collection::vec((0u8..6, any::<bool>()), 2..50)
        ) {
            let scores: Vec<f64> = data.iter().map(|&(s, _)| s as f64 / 5.0).collect();
            let labels: Vec<bool> = data.iter().map(|&(_, y)| y).collect();
            match auroc(&scores, &labels) {
                Some(a) => prop_assert!((a - brute(&scores, &labels)).abs() <= 1e-12),
                None => prop_assert!(labels.iter().all(|&y| y == labels[0])),
            }
        }

        #[test]
        fn invariant_under_monotone_transform(
            data in proptest::collection::vec((-5.0f64..5.0, any::<bool>()), 2..40)
        ) {
            let scores: Vec<f64> = data.iter().map(|&(s, _)| s).collect();
            let labels: Vec<bool> = data.iter().map(|&(_, y)| y).collect();
            let warped: Vec<f64> = scores.iter().map(|&s| s.exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(auroc(&scores, &labels), auroc(&warped, &labels));
        }
    }
}
