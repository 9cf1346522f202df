//! Dataset loading, scaffold splits, classifier heads and the tuning loop
//! that turns a representation into AUROC scores.

mod dataset;
mod evaluate;
pub mod forest;
pub mod knn;
pub mod logreg;
mod metrics;
mod split;

pub use dataset::{
    load_dataset, load_embeddings, read_dataset, Dataset, EmbeddingTable, LoadOptions,
};
pub use evaluate::{
    stratified_folds, tune_and_evaluate, ClassifierSpec, EvalOptions, Evaluation, Head, HeadResult,
    HyperParam,
};
pub use forest::train_predict_rf;
pub use knn::train_predict_knn;
pub use logreg::train_predict_logreg;
pub use metrics::auroc;
pub use split::{scaffold_split, split_by_keys, Split};

use crate::matrix::MatrixError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("no row has a parseable SMILES")]
    NoValidRows,
    #[error("row {row}, task {task:?}: label {value:?} is not 0, 1 or empty")]
    NonBinaryLabel {
        row: usize,
        task: String,
        value: String,
    },
    #[error("task {0:?} has no labels")]
    EmptyTask(String),
    #[error("dataset declares no tasks")]
    NoTasks,
    #[error("embeddings: {0}")]
    Matrix(#[from] MatrixError),
    #[error("embedding table {model} has {got} rows; dataset has {expected} (or {source_rows} before dropping)")]
    RowMismatch {
        model: String,
        expected: usize,
        source_rows: usize,
        got: usize,
    },
    #[error("train fraction {0} is not in (0, 1)")]
    InvalidFraction(f64),
    #[error("only {0} scaffold group(s); a scaffold split needs at least 2")]
    TooFewScaffolds(usize),
    #[error("training set is empty")]
    EmptyTrain,
    #[error("k = {k} exceeds the {n} training rows")]
    NeighborsExceedTrain { k: usize, n: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperParam(String),
    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("feature matrix has {got} rows; dataset has {expected}")]
    FeatureRows { expected: usize, got: usize },
    #[error("no task has both classes in the test split")]
    NoEvaluableTask,
}
