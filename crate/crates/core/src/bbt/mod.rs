//! Hierarchical Bayesian Bradley–Terry comparison of models across
//! datasets: win tables, posterior sampling, pairwise summaries and
//! decisions against a region of practical equivalence.

pub mod diagnostics;
pub mod model;
mod sampler;
mod summary;
mod wins;

pub use model::{log_posterior, BbtConfig};
pub use sampler::{sample_posterior, sample_posterior_unchecked, AbilityPosterior, Diagnostics};
pub use summary::{
    decide, hdi, pair_draws, pair_summary, posterior_predictive_check, rank_models,
    summarize_draws, Decision, PairSummary, PpcResult, RankEntry, Ranking,
};
pub use wins::{build_win_table, build_win_table_from_grid, WinTable};

use crate::scores::ScoreError;

#[derive(Debug, thiserror::Error)]
pub enum BbtError {
    #[error("need at least 2 models, got {0}")]
    TooFewModels(usize),
    #[error("models {0} and {1} share no dataset")]
    NoCommonDatasets(String, String),
    #[error("win table holds no comparisons")]
    DegenerateTable,
    #[error("invalid BBT configuration: {0}")]
    InvalidConfig(String),
    #[error("HDI needs at least 100 draws, got {0}")]
    TooFewDraws(usize),
    #[error("sampler did not converge: max split R-hat {max_rhat:.4}, min ESS {min_ess:.0}")]
    Diagnostics { max_rhat: f64, min_ess: f64 },
    #[error(transparent)]
    Scores(#[from] ScoreError),
}
