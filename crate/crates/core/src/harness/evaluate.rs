use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hash::hash_words;
use crate::matrix::FeatureMatrix;
use crate::scores::{round_auroc, ScoreRecord, BEST_HEAD};

use super::forest::{fit_forest, ForestParams, DEFAULT_TREES};
use super::logreg::{column_stats, standardize, train_predict_logreg};
use super::{auroc, train_predict_knn, Dataset, HarnessError, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Knn,
    Logreg,
    RandomForest,
}

impl Head {
    pub const ALL: [Head; 3] = [Head::Knn, Head::Logreg, Head::RandomForest];

    pub fn name(self) -> &'static str {
        match self {
            Head::Knn => "knn",
            Head::Logreg => "logreg",
            Head::RandomForest => "random_forest",
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperParam {
    Neighbors(usize),
    /// Inverse regularization strength λ.
    Lambda(f64),
    MinSamplesSplit(usize),
}

impl HyperParam {
    fn head(self) -> Head {
        match self {
            HyperParam::Neighbors(_) => Head::Knn,
            HyperParam::Lambda(_) => Head::Logreg,
            HyperParam::MinSamplesSplit(_) => Head::RandomForest,
        }
    }
}

impl fmt::Display for HyperParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperParam::Neighbors(k) => write!(f, "k={k}"),
            HyperParam::Lambda(l) => write!(f, "lambda={l:e}"),
            HyperParam::MinSamplesSplit(m) => write!(f, "min_samples_split={m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub head: Head,
    pub grid: Vec<HyperParam>,
    pub seed: u64,
}

impl ClassifierSpec {
    /// The standard grids: k ∈ {1,3,5,7,9}; ten log-spaced λ from 1e-2 to
    /// 1e3; min_samples_split ∈ {2,4,6,8,10}.
    pub fn standard(head: Head, seed: u64) -> Self {
        let grid = match head {
            Head::Knn => [1, 3, 5, 7, 9].map(HyperParam::Neighbors).to_vec(),
            Head::Logreg => (0..10)
                .map(|i| HyperParam::Lambda(10f64.powf(-2.0 + 5.0 * i as f64 / 9.0)))
                .collect(),
            Head::RandomForest => [2, 4, 6, 8, 10].map(HyperParam::MinSamplesSplit).to_vec(),
        };
        ClassifierSpec { head, grid, seed }
    }

    pub fn standard_set(seed: u64) -> Vec<ClassifierSpec> {
        Head::ALL.iter().map(|&h| Self::standard(h, seed)).collect()
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.grid.is_empty() {
            return Err(HarnessError::InvalidHyperParam(format!(
                "empty {} grid",
                self.head
            )));
        }
        if let Some(p) = self.grid.iter().find(|p| p.head() != self.head) {
            return Err(HarnessError::InvalidHyperParam(format!(
                "{p} in the {} grid",
                self.head
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub folds: usize,
    /// Standardize kNN inputs with training statistics; off by default so
    /// the representation's own geometry is used.
    pub standardize_knn: bool,
    pub forest_trees: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            folds: 5,
            standardize_knn: false,
            forest_trees: DEFAULT_TREES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadResult {
    pub head: Head,
    pub chosen: HyperParam,
    /// Cross-validation score per grid point, in grid order.
    pub cv_scores: Vec<f64>,
    /// Test AUROC per task; `None` where the test side is single-class.
    pub task_auroc: Vec<Option<f64>>,
    pub test_auroc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub heads: Vec<HeadResult>,
    pub best: f64,
}

impl Evaluation {
    /// One record per head plus the "best" record, rounded to the stored
    /// precision.
    pub fn records(&self, model: &str, dataset: &str) -> Vec<ScoreRecord> {
        let record = |head: &str, auroc: f64| ScoreRecord {
            model: model.to_string(),
            dataset: dataset.to_string(),
            head: head.to_string(),
            auroc: round_auroc(auroc),
        };
        self.heads
            .iter()
            .map(|h| record(h.head.name(), h.test_auroc))
            .chain(std::iter::once(record(BEST_HEAD, self.best)))
            .collect()
    }
}

/// Stratified fold assignment: each class is shuffled separately and dealt
/// round-robin, positives first, so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

struct Fitter<'a> {
    opts: &'a EvalOptions,
}

impl Fitter<'_> {
    fn fit_predict(
        &self,
        param: HyperParam,
        train_x: &FeatureMatrix,
        train_y: &[bool],
        test_x: &FeatureMatrix,
        seed: u64,
    ) -> Result<Vec<f64>, HarnessError> {
        match param {
            HyperParam::Neighbors(k) => {
                let k = k.min(train_x.rows());
                if self.opts.standardize_knn {
                    let (mean, scale) = column_stats(train_x);
                    train_predict_knn(
                        &standardize(train_x, &mean, &scale),
                        train_y,
                        &standardize(test_x, &mean, &scale),
                        k,
                    )
                } else {
                    train_predict_knn(train_x, train_y, test_x, k)
                }
            }
            HyperParam::Lambda(l) => train_predict_logreg(train_x, train_y, test_x, l),
            HyperParam::MinSamplesSplit(m) => {
                let params = ForestParams {
                    n_trees: self.opts.forest_trees,
                    ..ForestParams::new(m, seed)
                };
                Ok(fit_forest(train_x, train_y, &params)?.predict(test_x))
            }
        }
    }
}

/// Labeled rows of one task on one side of the split.
struct TaskRows {
    idx: Vec<usize>,
    y: Vec<bool>,
}

impl TaskRows {
    fn new(side: &[usize], labels: &[Vec<Option<bool>>], task: usize) -> Self {
        let (idx, y) = side
            .iter()
            .filter_map(|&i| labels[i][task].map(|y| (i, y)))
            .unzip();
        TaskRows { idx, y }
    }

    fn both_classes(&self) -> bool {
        self.y.iter().any(|&v| v) && self.y.iter().any(|&v| !v)
    }
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

const REFIT: u64 = u64::MAX;

/// Grid-searches every head by stratified cross-validation on the train
/// side, refits the winner on all training rows and scores the test side.
/// Tasks whose test labels are single-class are left out of the average.
pub fn tune_and_evaluate(
    dataset: &Dataset,
    x: &FeatureMatrix,
    specs: &[ClassifierSpec],
    split: &Split,
    opts: &EvalOptions,
) -> Result<Evaluation, HarnessError> {
    if x.rows() != dataset.len() {
        return Err(HarnessError::FeatureRows {
            expected: dataset.len(),
            got: x.rows(),
        });
    }
    if let Some((row, col)) = x.first_non_finite() {
        return Err(HarnessError::NonFiniteFeature { row, col });
    }
    if opts.folds < 2 {
        return Err(HarnessError::InvalidHyperParam(format!(
            "{} folds",
            opts.folds
        )));
    }
    for spec in specs {
        spec.validate()?;
    }
    let tasks = dataset.task_count();
    let train: Vec<TaskRows> = (0..tasks)
        .map(|t| TaskRows::new(&split.train, &dataset.labels, t))
        .collect();
    let test: Vec<TaskRows> = (0..tasks)
        .map(|t| TaskRows::new(&split.test, &dataset.labels, t))
        .collect();
    let evaluable: Vec<usize> = (0..tasks)
        .filter(|&t| test[t].both_classes() && !train[t].idx.is_empty())
        .collect();
    if evaluable.is_empty() {
        return Err(HarnessError::NoEvaluableTask);
    }
    for t in 0..tasks {
        if !evaluable.contains(&t) {
            log::info!(
                "{}: task {:?} skipped (single-class or empty test labels)",
                dataset.name,
                dataset.task_names[t]
            );
        }
    }

    let fitter = Fitter { opts };
    let heads = specs
        .iter()
        .map(|spec| {
            // Fold layouts per task, shared by every grid point of this head.
            let cv_tasks: Vec<(usize, Vec<usize>)> = (0..tasks)
                .filter(|&t| train[t].idx.len() >= 2)
                .map(|t| {
                    let seed = hash_words(&[spec.seed, t as u64, 0xf01d]);
                    (t, stratified_folds(&train[t].y, opts.folds, seed))
                })
                .collect();
            let cv_scores = spec
                .grid
                .par_iter()
                .map(|&param| {
                    let per_task = cv_tasks
                        .iter()
                        .map(|(t, folds)| {
                            let rows = &train[*t];
                            let fold_scores = (0..opts.folds)
                                .map(|f| {
                                    let (fit, held): (Vec<usize>, Vec<usize>) =
                                        (0..rows.idx.len()).partition(|&i| folds[i] != f);
                                    if held.is_empty() || fit.is_empty() {
                                        return Ok(None);
                                    }
                                    let held_y: Vec<bool> =
                                        held.iter().map(|&i| rows.y[i]).collect();
                                    if !(held_y.contains(&true) && held_y.contains(&false)) {
                                        return Ok(None);
                                    }
                                    let pick = |v: &[usize]| -> Vec<usize> {
                                        v.iter().map(|&i| rows.idx[i]).collect()
                                    };
                                    let fit_y: Vec<bool> = fit.iter().map(|&i| rows.y[i]).collect();
                                    let seed = hash_words(&[spec.seed, *t as u64, f as u64]);
                                    let s = fitter.fit_predict(
                                        param,
                                        &x.select_rows(&pick(&fit)),
                                        &fit_y,
                                        &x.select_rows(&pick(&held)),
                                        seed,
                                    )?;
                                    Ok(auroc(&s, &held_y))
                                })
                                .collect::<Result<Vec<_>, HarnessError>>()?;
                            Ok(mean_defined(fold_scores.into_iter()))
                        })
                        .collect::<Result<Vec<_>, HarnessError>>()?;
                    Ok(mean_defined(per_task.into_iter()).unwrap_or(f64::NAN))
                })
                .collect::<Result<Vec<f64>, HarnessError>>()?;

            let mut chosen = 0;
            for (i, &s) in cv_scores.iter().enumerate() {
                if s > cv_scores[chosen] || (cv_scores[chosen].is_nan() && !s.is_nan()) {
                    chosen = i;
                }
            }
            let param = spec.grid[chosen];
            log::debug!(
                "{}: {} selected {param} (cv {:.4})",
                dataset.name,
                spec.head,
                cv_scores[chosen]
            );

            let task_auroc = (0..tasks)
                .map(|t| {
                    if !evaluable.contains(&t) {
                        return Ok(None);
                    }
                    let seed = hash_words(&[spec.seed, t as u64, REFIT]);
                    let s = fitter.fit_predict(
                        param,
                        &x.select_rows(&train[t].idx),
                        &train[t].y,
                        &x.select_rows(&test[t].idx),
                        seed,
                    )?;
                    Ok(auroc(&s, &test[t].y))
                })
                .collect::<Result<Vec<_>, HarnessError>>()?;
            let test_auroc =
                mean_defined(task_auroc.iter().copied()).ok_or(HarnessError::NoEvaluableTask)?;
            Ok(HeadResult {
                head: spec.head,
                chosen: param,
                cv_scores,
                task_auroc,
                test_auroc,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let best = heads
        .iter()
        .map(|h| h.test_auroc)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Evaluation { heads, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn dataset(labels: Vec<Vec<Option<bool>>>) -> Dataset {
        let n = labels.len();
        let molecules = (0..n).map(|_| parse_smiles("C").unwrap()).collect();
        Dataset {
            name: "toy".into(),
            smiles: vec!["C".into(); n],
            molecules,
            task_names: (0..labels[0].len()).map(|t| format!("t{t}")).collect(),
            labels,
            source_rows: (0..n).collect(),
            source_len: n,
        }
    }

    fn separable(n: usize) -> (Dataset, FeatureMatrix, Split) {
        let labels: Vec<Vec<Option<bool>>> = (0..n).map(|i| vec![Some(i % 2 == 0)]).collect();
        let x = FeatureMatrix::from_rows(
            &(0..n)
                .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }, (i % 7) as f64 * 0.01])
                .collect::<Vec<_>>(),
        );
        let split = Split {
            train: (0..n * 3 / 4).collect(),
            test: (n * 3 / 4..n).collect(),
            frac_train: 0.75,
        };
        (dataset(labels), x, split)
    }

    fn quick() -> EvalOptions {
        EvalOptions {
            forest_trees: 25,
            ..EvalOptions::default()
        }
    }

    #[test]
    fn standard_grids() {
        let lr = ClassifierSpec::standard(Head::Logreg, 0);
        assert_eq!(lr.grid.len(), 10);
        let HyperParam::Lambda(first) = lr.grid[0] else {
            panic!()
        };
        let HyperParam::Lambda(last) = lr.grid[9] else {
            panic!()
        };
        assert!((first - 1e-2).abs() < 1e-15 && (last - 1e3).abs() < 1e-9);
        assert_eq!(
            ClassifierSpec::standard(Head::Knn, 0).grid,
            [1, 3, 5, 7, 9].map(HyperParam::Neighbors).to_vec()
        );
        assert_eq!(ClassifierSpec::standard_set(0).len(), 3);
    }

    #[test]
    fn folds_are_stratified_and_balanced() {
        let labels: Vec<bool> = (0..23).map(|i| i % 3 == 0).collect();
        let f = stratified_folds(&labels, 5, 4);
        for k in 0..5 {
            let size = f.iter().filter(|&&v| v == k).count();
            assert!((4..=5).contains(&size));
            let pos = (0..23).filter(|&i| f[i] == k && labels[i]).count();
            assert!((1..=2).contains(&pos));
        }
        assert_eq!(f, stratified_folds(&labels, 5, 4));
    }

    #[test]
    fn separable_set_scores_perfectly() {
        let (d, x, split) = separable(40);
        let e =
            tune_and_evaluate(&d, &x, &ClassifierSpec::standard_set(1), &split, &quick()).unwrap();
        assert_eq!(e.heads.len(), 3);
        assert_eq!(e.best, 1.0);
        let records = e.records("m", "toy");
        assert_eq!(records.len(), 4);
        assert_eq!(records[3].head, "best");
    }

    #[test]
    fn single_class_test_task_is_skipped() {
        let (mut d, x, split) = separable(40);
        for (i, row) in d.labels.iter_mut().enumerate() {
            row.push(Some(i >= 30 || i % 5 == 0));
        }
        d.task_names.push("flat".into());
        let specs = vec![ClassifierSpec::standard(Head::Knn, 0)];
        let e = tune_and_evaluate(&d, &x, &specs, &split, &quick()).unwrap();
        assert_eq!(e.heads[0].task_auroc[1], None);
        assert_eq!(e.heads[0].test_auroc, e.heads[0].task_auroc[0].unwrap());
    }

    #[test]
    fn no_evaluable_task_is_an_error() {
        let (mut d, x, split) = separable(40);
        for row in d.labels.iter_mut().skip(30) {
            row[0] = Some(true);
        }
        let specs = vec![ClassifierSpec::standard(Head::Knn, 0)];
        assert!(matches!(
            tune_and_evaluate(&d, &x, &specs, &split, &quick()),
            Err(HarnessError::NoEvaluableTask)
        ));
    }

    #[test]
    fn grid_ties_pick_the_first_point() {
        let (d, x, split) = separable(40);
        let specs = vec![ClassifierSpec::standard(Head::Knn, 0)];
        let e = tune_and_evaluate(&d, &x, &specs, &split, &quick()).unwrap();
        assert!(e.heads[0].cv_scores.iter().all(|&s| s == 1.0));
        assert_eq!(e.heads[0].chosen, HyperParam::Neighbors(1));
    }

    #[test]
    fn best_is_the_maximum_head() {
        let e = Evaluation {
            heads: vec![
                HeadResult {
                    head: Head::Knn,
                    chosen: HyperParam::Neighbors(1),
                    cv_scores: vec![],
                    task_auroc: vec![Some(0.7)],
                    test_auroc: 0.7,
                },
                HeadResult {
                    head: Head::Logreg,
                    chosen: HyperParam::Lambda(1.0),
                    cv_scores: vec![],
                    task_auroc: vec![Some(0.8)],
                    test_auroc: 0.8,
                },
            ],
            best: 0.8,
        };
        let r = e.records("m", "d");
        assert_eq!(r.last().unwrap().auroc, 0.8);
    }

    #[test]
    fn mismatched_spec_is_rejected() {
        let (d, x, split) = separable(20);
        let spec = ClassifierSpec {
            head: Head::Knn,
            grid: vec![HyperParam::Lambda(1.0)],
            seed: 0,
        };
        assert!(tune_and_evaluate(&d, &x, &[spec], &split, &quick()).is_err());
    }
}
