//! Random forest of entropy-split decision trees.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::matrix::FeatureMatrix;

use super::HarnessError;

pub const DEFAULT_TREES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub min_samples_split: usize,
    /// Features examined per node; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl ForestParams {
    pub fn new(min_samples_split: usize, seed: u64) -> Self {
        ForestParams {
            n_trees: DEFAULT_TREES,
            min_samples_split,
            max_features: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

impl RandomForest {
    /// Mean leaf positive-fraction over trees, summed in tree order.
    pub fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| {
                let row = x.row(i);
                let total: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                total / self.trees.len() as f64
            })
            .collect()
    }
}

fn entropy(pos: usize, n: usize) -> f64 {
    if pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Column-major training data shared by all trees.
struct Columns<'a> {
    cols: Vec<Vec<f64>>,
    /// Columns with at least two distinct values in the full training set.
    informative: Vec<usize>,
    y: &'a [bool],
}

struct Candidate {
    feature: usize,
    threshold: f64,
    child_entropy: f64,
}

struct Builder<'a> {
    data: &'a Columns<'a>,
    min_samples_split: usize,
    max_features: usize,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    pairs: Vec<(f64, bool)>,
}

impl Builder<'_> {
    fn leaf_value(&self, samples: &[usize]) -> (f64, usize) {
        let pos = samples.iter().filter(|&&i| self.data.y[i]).count();
        (pos as f64 / samples.len() as f64, pos)
    }

    /// Best threshold on one feature, or `None` if the feature is constant
    /// within the node.
    fn best_threshold(
        &mut self,
        feature: usize,
        samples: &[usize],
        pos: usize,
    ) -> Option<Candidate> {
        let col = &self.data.cols[feature];
        let first = col[samples[0]];
        if samples.iter().all(|&i| col[i] == first) {
            return None;
        }
        self.pairs.clear();
        self.pairs
            .extend(samples.iter().map(|&i| (col[i], self.data.y[i])));
        self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = samples.len();
        let mut best: Option<Candidate> = None;
        let mut left_pos = 0;
        for k in 1..n {
            if self.pairs[k - 1].1 {
                left_pos += 1;
            }
            let (lo, hi) = (self.pairs[k - 1].0, self.pairs[k].0);
            if lo == hi {
                continue;
            }
            let child = (k as f64 * entropy(left_pos, k)
                + (n - k) as f64 * entropy(pos - left_pos, n - k))
                / n as f64;
            if best.as_ref().is_none_or(|b| child < b.child_entropy) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Candidate {
                    feature,
                    threshold,
                    child_entropy: child,
                });
            }
        }
        best
    }

    /// Draws features without replacement until `max_features` non-constant
    /// ones have been scored or all are exhausted.
    fn choose_split(&mut self, samples: &[usize], pos: usize) -> Option<Candidate> {
        let m = self.order.len();
        let mut scored = 0;
        let mut best: Option<Candidate> = None;
        for k in 0..m {
            if scored == self.max_features {
                break;
            }
            let j = self.rng.gen_range(k..m);
            self.order.swap(k, j);
            let feature = self.order[k];
            if let Some(c) = self.best_threshold(feature, samples, pos) {
                scored += 1;
                if best
                    .as_ref()
                    .is_none_or(|b| c.child_entropy < b.child_entropy)
                {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn build(mut self, samples: Vec<usize>) -> Tree {
        let mut nodes = vec![Node::Leaf(0.0)];
        let mut stack = vec![(0usize, samples)];
        while let Some((at, samples)) = stack.pop() {
            let (value, pos) = self.leaf_value(&samples);
            let n = samples.len();
            if pos == 0 || pos == n || n < self.min_samples_split {
                nodes[at] = Node::Leaf(value);
                continue;
            }
            let Some(split) = self.choose_split(&samples, pos) else {
                nodes[at] = Node::Leaf(value);
                continue;
            };
            let col = &self.data.cols[split.feature];
            let (left, right): (Vec<usize>, Vec<usize>) = samples
                .into_iter()
                .partition(|&i| col[i] <= split.threshold);
            let (l, r) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf(0.0));
            nodes.push(Node::Leaf(0.0));
            nodes[at] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: l,
                right: r,
            };
            stack.push((r, right));
            stack.push((l, left));
        }
        Tree { nodes }
    }
}

/// Fits the forest. Tree `t` draws its bootstrap sample and feature choices
/// from stream `t` of a generator seeded with `params.seed`, so the result
/// does not depend on how trees are scheduled across threads.
pub fn fit_forest(
    train_x: &FeatureMatrix,
    train_y: &[bool],
    params: &ForestParams,
) -> Result<RandomForest, HarnessError> {
    let n = train_x.rows();
    if n == 0 {
        return Err(HarnessError::EmptyTrain);
    }
    if params.n_trees == 0 {
        return Err(HarnessError::InvalidHyperParam(
            "n_trees must be positive".into(),
        ));
    }
    if let Some((row, col)) = train_x.first_non_finite() {
        return Err(HarnessError::NonFiniteFeature { row, col });
    }
    let d = train_x.cols();
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..n).map(|i| train_x.get(i, j)).collect())
        .collect();
    let informative = (0..d)
        .filter(|&j| cols[j].iter().any(|&v| v != cols[j][0]))
        .collect();
    let data = Columns {
        cols,
        informative,
        y: train_y,
    };
    let max_features = params
        .max_features
        .unwrap_or_else(|| (d as f64).sqrt().floor() as usize)
        .max(1);

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let samples: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            Builder {
                data: &data,
                min_samples_split: params.min_samples_split.max(2),
                max_features,
                rng,
                order: data.informative.clone(),
                pairs: Vec::with_capacity(n),
            }
            .build(samples)
        })
        .collect();
    Ok(RandomForest { trees })
}

pub fn train_predict_rf(
    train_x: &FeatureMatrix,
    train_y: &[bool],
    test_x: &FeatureMatrix,
    min_samples_split: usize,
    seed: u64,
) -> Result<Vec<f64>, HarnessError> {
    let forest = fit_forest(
        train_x,
        train_y,
        &ForestParams::new(min_samples_split, seed),
    )?;
    Ok(forest.predict(test_x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (FeatureMatrix, Vec<bool>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..25 {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                rows.push(vec![a, b]);
                y.push((a == 1.0) != (b == 1.0));
            }
        }
        (FeatureMatrix::from_rows(&rows), y)
    }

    #[test]
    fn learns_xor() {
        let (x, y) = xor();
        let scores = train_predict_rf(&x, &y, &x, 2, 3).unwrap();
        let correct = scores
            .iter()
            .zip(&y)
            .filter(|(&s, &t)| (s > 0.5) == t)
            .count();
        assert_eq!(correct, y.len());
    }

    #[test]
    fn constant_feature_gives_flat_scores_near_the_prior() {
        let x = FeatureMatrix::from_rows(&vec![vec![1.0]; 40]);
        let y: Vec<bool> = (0..40).map(|i| i % 4 == 0).collect();
        let test = FeatureMatrix::from_rows(&[vec![1.0], vec![-7.0]]);
        let s = train_predict_rf(&x, &y, &test, 2, 1).unwrap();
        assert_eq!(s[0], s[1]);
        assert!((s[0] - 0.25).abs() < 0.02, "{}", s[0]);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (x, y) = xor();
        let p = ForestParams {
            n_trees: 20,
            ..ForestParams::new(4, 9)
        };
        let a = fit_forest(&x, &y, &p).unwrap();
        let b = fit_forest(&x, &y, &p).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let c = pool.install(|| fit_forest(&x, &y, &p).unwrap());
        assert_eq!(a, c);
        let other = fit_forest(&x, &y, &ForestParams { seed: 10, ..p }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn min_samples_split_limits_growth() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![i as f64, (i * 7 % 11) as f64])
            .collect();
        let y: Vec<bool> = (0..30).map(|i| (i * 13) % 5 < 2).collect();
        let x = FeatureMatrix::from_rows(&rows);
        let leaves = |mss| {
            let p = ForestParams {
                n_trees: 10,
                ..ForestParams::new(mss, 5)
            };
            fit_forest(&x, &y, &p)
                .unwrap()
                .trees
                .iter()
                .map(Tree::leaf_count)
                .sum::<usize>()
        };
        assert!(leaves(10) < leaves(2));
    }

    #[test]
    fn empty_train_is_an_error() {
        let x = FeatureMatrix::from_vec(0, 2, vec![]);
        assert!(matches!(
            train_predict_rf(&x, &[], &x, 2, 0),
            Err(HarnessError::EmptyTrain)
        ));
    }
}
