//! End-to-end benchmark run: load datasets, split by scaffold, featurize
//! each (representation, dataset) cell, evaluate the classifier heads, then
//! write the score table and reports.
//!
//! Each finished cell is cached under `<output_dir>/cache/<sha256>.json`,
//! keyed by the content of everything that determines its scores, so an
//! interrupted run can be resumed without recomputation.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bbt::BbtError;
use crate::config::{BenchmarkConfig, ConfigError, DatasetEntry, RepresentationEntry};
use crate::fingerprints::{fingerprint_matrix, FingerprintError};
use crate::harness::{
    load_dataset, load_embeddings, scaffold_split, tune_and_evaluate, Dataset, HarnessError, Split,
};
use crate::matrix::FeatureMatrix;
use crate::reports::{write_bbt_reports, write_summary_reports, BbtReport, ReportError};
use crate::scores::{ScoreError, ScoreRecord, ScoreTable};

/// Bumped whenever cached cell contents change meaning.
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CellError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dataset {dataset}: {source}")]
    Dataset {
        dataset: String,
        #[source]
        source: HarnessError,
    },
    #[error("model {model} on dataset {dataset}: {source}")]
    Cell {
        model: String,
        dataset: String,
        #[source]
        source: CellError,
    },
    #[error("every dataset was skipped; no scores to report")]
    NothingEvaluated,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Scores(#[from] ScoreError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// Broad failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureClass {
    Config,
    Data,
    Diagnostics,
}

impl PipelineError {
    pub fn class(&self) -> FailureClass {
        match self {
            PipelineError::Config(_) => FailureClass::Config,
            PipelineError::Report(ReportError::Bbt(BbtError::Diagnostics { .. })) => {
                FailureClass::Diagnostics
            }
            _ => FailureClass::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineOptions {
    /// Reuse cached cells whose key matches.
    pub resume: bool,
}

/// Scores for one cell as stored in the cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CachedCell {
    key: String,
    model: String,
    dataset: String,
    /// Chosen hyperparameter per head, for inspection.
    chosen: Vec<String>,
    records: Vec<ScoreRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRun {
    pub scores: ScoreTable,
    /// Cells evaluated in this run, as (model, dataset).
    pub recomputed: Vec<(String, String)>,
    /// Cells taken from the cache.
    pub reused: Vec<(String, String)>,
    /// Datasets with no task evaluable on the test side.
    pub skipped_datasets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub evaluation: EvaluationRun,
    /// Absent when fewer than two representations were evaluated.
    pub bbt: Option<BbtReport>,
}

struct PreparedDataset {
    entry: DatasetEntry,
    dataset: Dataset,
    split: Split,
    /// Hash of the dataset file bytes and entry options.
    digest: Vec<u8>,
}

fn io_error(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, HarnessError> {
    fs::read(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Length-prefixed fields so that adjacent fields cannot alias.
fn update_field(h: &mut Sha256, bytes: &[u8]) {
    h.update((bytes.len() as u64).to_le_bytes());
    h.update(bytes);
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("config types serialize")
}

fn prepare_dataset(
    entry: &DatasetEntry,
    split_seed: u64,
    frac_train: f64,
) -> Result<Option<PreparedDataset>, PipelineError> {
    let context = |source| PipelineError::Dataset {
        dataset: entry.name.clone(),
        source,
    };
    let bytes = read_bytes(&entry.path).map_err(context)?;
    let mut dataset = load_dataset(
        &entry.path,
        &entry.smiles_column,
        &entry.tasks,
        entry.load_options(),
    )
    .map_err(context)?;
    dataset.name = entry.name.clone();
    if dataset.dropped() > 0 {
        log::warn!(
            "{}: dropped {} unparseable row(s)",
            entry.name,
            dataset.dropped()
        );
    }
    let split = scaffold_split(&dataset, frac_train, split_seed).map_err(context)?;
    let evaluable = (0..dataset.task_count()).any(|t| {
        let labels: Vec<bool> = split
            .test
            .iter()
            .filter_map(|&i| dataset.labels[i][t])
            .collect();
        labels.iter().any(|&y| y) && labels.iter().any(|&y| !y)
    });
    if !evaluable {
        log::warn!(
            "{}: no task has both classes in the test split; skipping",
            entry.name
        );
        return Ok(None);
    }
    let mut h = Sha256::new();
    update_field(&mut h, &bytes);
    let mut options = entry.clone();
    options.path = PathBuf::new();
    update_field(&mut h, &json_bytes(&options));
    Ok(Some(PreparedDataset {
        entry: entry.clone(),
        dataset,
        split,
        digest: h.finalize().to_vec(),
    }))
}

fn cell_key(
    cfg: &BenchmarkConfig,
    rep: &RepresentationEntry,
    data: &PreparedDataset,
) -> Result<String, HarnessError> {
    let mut h = Sha256::new();
    update_field(&mut h, &CACHE_VERSION.to_le_bytes());
    update_field(&mut h, &data.digest);
    match rep {
        RepresentationEntry::Fingerprint { name, fingerprint } => {
            update_field(&mut h, b"fingerprint");
            update_field(&mut h, name.as_bytes());
            update_field(&mut h, &json_bytes(fingerprint));
        }
        RepresentationEntry::Embedding { name, files } => {
            update_field(&mut h, b"embedding");
            update_field(&mut h, name.as_bytes());
            update_field(&mut h, &read_bytes(&files[&data.entry.name])?);
        }
    }
    update_field(&mut h, &json_bytes(&cfg.split));
    update_field(&mut h, &json_bytes(&cfg.classifier));
    Ok(hex::encode(h.finalize()))
}

fn features(rep: &RepresentationEntry, data: &PreparedDataset) -> Result<FeatureMatrix, CellError> {
    match rep {
        RepresentationEntry::Fingerprint { fingerprint, .. } => {
            Ok(fingerprint_matrix(&data.dataset.molecules, fingerprint)?)
        }
        RepresentationEntry::Embedding { name, files } => {
            let table = load_embeddings(&files[&data.entry.name], name)?;
            Ok(table.aligned(&data.dataset)?.vectors)
        }
    }
}

fn read_cache(path: &Path, key: &str) -> Option<CachedCell> {
    let text = fs::read_to_string(path).ok()?;
    match serde_json::from_str::<CachedCell>(&text) {
        Ok(cell) if cell.key == key => Some(cell),
        _ => {
            log::warn!("ignoring stale or unreadable cache file {}", path.display());
            None
        }
    }
}

fn write_cache(path: &Path, cell: &CachedCell) -> Result<(), PipelineError> {
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_string_pretty(cell).expect("cache cells serialize");
    fs::write(&tmp, text).map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

enum CellOutcome {
    Computed(CachedCell),
    Reused(CachedCell),
}

fn run_cell(
    cfg: &BenchmarkConfig,
    rep: &RepresentationEntry,
    data: &PreparedDataset,
    cache_dir: &Path,
    opts: PipelineOptions,
) -> Result<CellOutcome, PipelineError> {
    let model = rep.name();
    let dataset = &data.entry.name;
    let context = |source: CellError| PipelineError::Cell {
        model: model.to_string(),
        dataset: dataset.clone(),
        source,
    };
    let key = cell_key(cfg, rep, data).map_err(|e| context(e.into()))?;
    let path = cache_dir.join(format!("{key}.json"));
    if opts.resume {
        if let Some(cell) = read_cache(&path, &key) {
            log::debug!("{model} / {dataset}: cached");
            return Ok(CellOutcome::Reused(cell));
        }
    }
    log::info!("{model} / {dataset}: evaluating");
    let x = features(rep, data).map_err(context)?;
    let evaluation = tune_and_evaluate(
        &data.dataset,
        &x,
        &cfg.classifier.specs(),
        &data.split,
        &cfg.classifier.evaluation,
    )
    .map_err(|e| context(e.into()))?;
    let cell = CachedCell {
        key,
        model: model.to_string(),
        dataset: dataset.clone(),
        chosen: evaluation
            .heads
            .iter()
            .map(|h| format!("{}: {}", h.head, h.chosen))
            .collect(),
        records: evaluation.records(model, dataset),
    };
    write_cache(&path, &cell)?;
    Ok(CellOutcome::Computed(cell))
}

fn write_split(dir: &Path, data: &PreparedDataset) -> Result<(), PipelineError> {
    let path = dir.join(format!("{}.json", data.entry.name));
    let text = serde_json::to_string_pretty(&data.split).expect("splits serialize");
    fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))
}

/// Scores every (representation, dataset) cell and writes `scores.csv`.
///
/// Cells run in parallel; finished cells are cached even when another cell
/// fails, and the first failure in configuration order is returned.
pub fn evaluate_config(
    cfg: &BenchmarkConfig,
    opts: PipelineOptions,
) -> Result<EvaluationRun, PipelineError> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let cache_dir = out.join("cache");
    let split_dir = out.join("splits");
    for dir in [&cache_dir, &split_dir] {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }

    let mut prepared = Vec::new();
    let mut skipped_datasets = Vec::new();
    for entry in &cfg.datasets {
        match prepare_dataset(entry, cfg.split.seed, cfg.split.frac_train)? {
            Some(p) => {
                write_split(&split_dir, &p)?;
                prepared.push(p);
            }
            None => skipped_datasets.push(entry.name.clone()),
        }
    }
    if prepared.is_empty() {
        return Err(PipelineError::NothingEvaluated);
    }

    let cells: Vec<(&RepresentationEntry, &PreparedDataset)> = cfg
        .representations
        .iter()
        .flat_map(|r| prepared.iter().map(move |d| (r, d)))
        .collect();
    let outcomes: Vec<Result<CellOutcome, PipelineError>> = cells
        .par_iter()
        .map(|&(rep, data)| run_cell(cfg, rep, data, &cache_dir, opts))
        .collect();

    let mut scores = ScoreTable::new();
    let mut recomputed = Vec::new();
    let mut reused = Vec::new();
    for outcome in outcomes {
        let (cell, list) = match outcome? {
            CellOutcome::Computed(c) => (c, &mut recomputed),
            CellOutcome::Reused(c) => (c, &mut reused),
        };
        list.push((cell.model.clone(), cell.dataset.clone()));
        for r in cell.records {
            scores.push(r)?;
        }
    }
    let path = out.join("scores.csv");
    let file = fs::File::create(&path).map_err(|e| io_error(&path, e))?;
    scores.write_csv(std::io::BufWriter::new(file))?;
    Ok(EvaluationRun {
        scores,
        recomputed,
        reused,
        skipped_datasets,
    })
}

/// Writes every report for a finished score table into `dir`. The Bayesian
/// comparison is skipped when fewer than two models are present.
pub fn write_reports(
    cfg: &BenchmarkConfig,
    scores: &ScoreTable,
    dir: &Path,
) -> Result<Option<BbtReport>, PipelineError> {
    write_summary_reports(scores, &cfg.baseline, cfg.near_win_epsilon, dir)?;
    if scores.models().len() < 2 {
        log::warn!("fewer than two models; skipping the Bayesian comparison");
        return Ok(None);
    }
    Ok(Some(write_bbt_reports(scores, &cfg.bbt, dir)?))
}

/// Evaluates every cell, then writes the score table and all reports to
/// the configured output directory.
pub fn run_pipeline(
    cfg: &BenchmarkConfig,
    opts: PipelineOptions,
) -> Result<PipelineRun, PipelineError> {
    let evaluation = evaluate_config(cfg, opts)?;
    let bbt = write_reports(cfg, &evaluation.scores, &cfg.output_dir)?;
    Ok(PipelineRun { evaluation, bbt })
}
