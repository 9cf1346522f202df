use crate::matrix::FeatureMatrix;

use super::HarnessError;

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fraction of positive labels among the `k` Euclidean-nearest training
/// rows; equal distances resolve to the lower training index.
pub fn train_predict_knn(
    train_x: &FeatureMatrix,
    train_y: &[bool],
    test_x: &FeatureMatrix,
    k: usize,
) -> Result<Vec<f64>, HarnessError> {
    let n = train_x.rows();
    if n == 0 {
        return Err(HarnessError::EmptyTrain);
    }
    if k == 0 {
        return Err(HarnessError::InvalidHyperParam("k must be positive".into()));
    }
    if k > n {
        return Err(HarnessError::NeighborsExceedTrain { k, n });
    }
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    let scores = (0..test_x.rows())
        .map(|t| {
            let q = test_x.row(t);
            dist.clear();
            dist.extend((0..n).map(|i| (squared_distance(q, train_x.row(i)), i)));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < n {
                dist.select_nth_unstable_by(k - 1, cmp);
            }
            let hits = dist[..k].iter().filter(|&&(_, i)| train_y[i]).count();
            hits as f64 / k as f64
        })
        .collect();
    Ok(scores)
}
