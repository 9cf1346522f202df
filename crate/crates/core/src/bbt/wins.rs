use serde::{Deserialize, Serialize};

use crate::scores::{ScoreGrid, ScoreTable};

use super::BbtError;

/// Pairwise win counts: `wins[i][j]` is the (possibly half-integer) number
/// of datasets on which model `i` beat model `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinTable {
    pub models: Vec<String>,
    pub wins: Vec<Vec<f64>>,
}

impl WinTable {
    pub fn new(models: Vec<String>, wins: Vec<Vec<f64>>) -> Self {
        assert_eq!(models.len(), wins.len());
        assert!(wins.iter().all(|r| r.len() == models.len()));
        WinTable { models, wins }
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Comparisons between `i` and `j` in either direction.
    pub fn total(&self, i: usize, j: usize) -> f64 {
        self.wins[i][j] + self.wins[j][i]
    }

    pub fn grand_total(&self) -> f64 {
        self.wins.iter().flatten().sum()
    }

    /// The table with models reordered so that new position `k` holds old
    /// model `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> WinTable {
        WinTable {
            models: order.iter().map(|&i| self.models[i].clone()).collect(),
            wins: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.wins[i][j]).collect())
                .collect(),
        }
    }
}

/// Per dataset and model pair: a difference below `epsilon` credits half a
/// win to each side, otherwise a full win to the higher score. Datasets
/// where either model lacks a score are skipped for that pair.
pub fn build_win_table_from_grid(grid: &ScoreGrid, epsilon: f64) -> Result<WinTable, BbtError> {
    let m = grid.models.len();
    if m < 2 {
        return Err(BbtError::TooFewModels(m));
    }
    let mut wins = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let common = grid.common(i, j);
            if common.is_empty() {
                return Err(BbtError::NoCommonDatasets(
                    grid.models[i].clone(),
                    grid.models[j].clone(),
                ));
            }
            for (a, b) in common {
                if (a - b).abs() < epsilon {
                    wins[i][j] += 0.5;
                    wins[j][i] += 0.5;
                } else if a > b {
                    wins[i][j] += 1.0;
                } else {
                    wins[j][i] += 1.0;
                }
            }
        }
    }
    Ok(WinTable {
        models: grid.models.clone(),
        wins,
    })
}

pub fn build_win_table(scores: &ScoreTable, epsilon: f64) -> Result<WinTable, BbtError> {
    build_win_table_from_grid(&scores.grid()?, epsilon)
}
