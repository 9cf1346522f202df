//! The (model, dataset, head) → AUROC table exchanged between evaluation,
//! statistics and reporting.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

/// Head label of the per-(model, dataset) maximum over classifier heads.
pub const BEST_HEAD: &str = "best";

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("AUROC {auroc} for {model}/{dataset}/{head} is outside [0, 1]")]
    OutOfRange {
        model: String,
        dataset: String,
        head: String,
        auroc: f64,
    },
    #[error("duplicate record for {model}/{dataset}/{head}")]
    Duplicate {
        model: String,
        dataset: String,
        head: String,
    },
    #[error("{model}/{dataset} has several heads and no \"best\" record")]
    AmbiguousHead { model: String, dataset: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub model: String,
    pub dataset: String,
    pub head: String,
    pub auroc: f64,
}

/// Rounds to the 6 decimals used in the CSV encoding, so in-memory tables
/// and tables read back from disk hold identical values.
pub fn round_auroc(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    records: Vec<ScoreRecord>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<ScoreRecord>) -> Result<Self, ScoreError> {
        let mut t = ScoreTable::new();
        for r in records {
            t.push(r)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, record: ScoreRecord) -> Result<(), ScoreError> {
        if !(0.0..=1.0).contains(&record.auroc) {
            return Err(ScoreError::OutOfRange {
                model: record.model,
                dataset: record.dataset,
                head: record.head,
                auroc: record.auroc,
            });
        }
        if self
            .get(&record.model, &record.dataset, &record.head)
            .is_some()
        {
            return Err(ScoreError::Duplicate {
                model: record.model,
                dataset: record.dataset,
                head: record.head,
            });
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, model: &str, dataset: &str, head: &str) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.model == model && r.dataset == dataset && r.head == head)
            .map(|r| r.auroc)
    }

    /// Model names in order of first appearance.
    pub fn models(&self) -> Vec<String> {
        first_appearance(self.records.iter().map(|r| r.model.as_str()))
    }

    /// Dataset names in order of first appearance.
    pub fn datasets(&self) -> Vec<String> {
        first_appearance(self.records.iter().map(|r| r.dataset.as_str()))
    }

    /// Sorted by (model, dataset, head) for stable output.
    pub fn sorted(&self) -> ScoreTable {
        let mut records = self.records.clone();
        records
            .sort_by(|a, b| (&a.model, &a.dataset, &a.head).cmp(&(&b.model, &b.dataset, &b.head)));
        ScoreTable { records }
    }

    /// One score per (model, dataset): the "best" record when present,
    /// otherwise the only record for that cell.
    pub fn grid(&self) -> Result<ScoreGrid, ScoreError> {
        let models = self.models();
        let datasets = self.datasets();
        let mut cells: HashMap<(&str, &str), Vec<&ScoreRecord>> = HashMap::new();
        for r in &self.records {
            cells
                .entry((r.model.as_str(), r.dataset.as_str()))
                .or_default()
                .push(r);
        }
        let mut values = vec![vec![None; datasets.len()]; models.len()];
        for (i, m) in models.iter().enumerate() {
            for (j, d) in datasets.iter().enumerate() {
                let Some(recs) = cells.get(&(m.as_str(), d.as_str())) else {
                    continue;
                };
                let value = match recs.iter().find(|r| r.head == BEST_HEAD) {
                    Some(r) => r.auroc,
                    None if recs.len() == 1 => recs[0].auroc,
                    None => {
                        return Err(ScoreError::AmbiguousHead {
                            model: m.clone(),
                            dataset: d.clone(),
                        })
                    }
                };
                values[i][j] = Some(value);
            }
        }
        Ok(ScoreGrid {
            models,
            datasets,
            values,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ScoreError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "dataset", "head", "auroc"])?;
        for r in &self.records {
            w.write_record([
                r.model.as_str(),
                r.dataset.as_str(),
                r.head.as_str(),
                &format!("{:.6}", r.auroc),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ScoreError> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut table = ScoreTable::new();
        for record in r.deserialize::<ScoreRecord>() {
            table.push(record?)?;
        }
        Ok(table)
    }
}

fn first_appearance<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    names
        .filter(|n| seen.insert(*n))
        .map(str::to_string)
        .collect()
}

/// Models × datasets matrix of scores; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl ScoreGrid {
    pub fn from_rows(models: &[&str], datasets: &[&str], rows: &[Vec<f64>]) -> Self {
        ScoreGrid {
            models: models.iter().map(|s| s.to_string()).collect(),
            datasets: datasets.iter().map(|s| s.to_string()).collect(),
            values: rows
                .iter()
                .map(|r| r.iter().map(|&v| Some(v)).collect())
                .collect(),
        }
    }

    pub fn model_index(&self, name: &str) -> Option<usize> {
        self.models.iter().position(|m| m == name)
    }

    /// (model, dataset) pairs without a score.
    pub fn missing(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (i, m) in self.models.iter().enumerate() {
            for (j, d) in self.datasets.iter().enumerate() {
                if self.values[i][j].is_none() {
                    out.push((m.clone(), d.clone()));
                }
            }
        }
        out
    }

    /// Datasets where both models have a score, as (score_i, score_j).
    pub fn common(&self, i: usize, j: usize) -> Vec<(f64, f64)> {
        self.values[i]
            .iter()
            .zip(&self.values[j])
            .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
            .collect()
    }

    pub fn heads_present(table: &ScoreTable) -> BTreeSet<String> {
        table.records().iter().map(|r| r.head.clone()).collect()
    }
}
