//! Reports derived from a score table: mean ranks, the pairwise win
//! matrix, baseline comparisons and the Bayesian pairwise comparison.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::bbt::{
    build_win_table, decide, pair_summary, posterior_predictive_check, rank_models,
    sample_posterior, BbtConfig, BbtError, Decision, Diagnostics, PairSummary, PpcResult, Ranking,
    WinTable,
};
use crate::scores::{ScoreError, ScoreGrid, ScoreTable};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("score table is incomplete; missing {}", format_missing(.0))]
    Incomplete(Vec<(String, String)>),
    #[error("baseline {0:?} has no scores")]
    MissingBaseline(String),
    #[error(transparent)]
    Scores(#[from] ScoreError),
    #[error(transparent)]
    Bbt(#[from] BbtError),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_missing(cells: &[(String, String)]) -> String {
    cells
        .iter()
        .map(|(m, d)| format!("{m}/{d}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn complete_grid(scores: &ScoreTable) -> Result<ScoreGrid, ReportError> {
    let grid = scores.grid()?;
    let missing = grid.missing();
    if !missing.is_empty() {
        return Err(ReportError::Incomplete(missing));
    }
    Ok(grid)
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub model: String,
    pub mean_rank: f64,
    pub mean_auroc: f64,
}

/// Per dataset, rank 1 is the highest AUROC and exact ties share the mean
/// of their ranks. Rows are sorted by mean rank, then model name.
pub fn aggregate_report(scores: &ScoreTable) -> Result<Vec<AggregateRow>, ReportError> {
    let grid = complete_grid(scores)?;
    let m = grid.models.len();
    let d = grid.datasets.len();
    let mut rank_sum = vec![0.0; m];
    let mut auroc_sum = vec![0.0; m];
    for j in 0..d {
        let col: Vec<f64> = (0..m).map(|i| grid.values[i][j].unwrap()).collect();
        for i in 0..m {
            let above = col.iter().filter(|&&v| v > col[i]).count() as f64;
            let tied = col.iter().filter(|&&v| v == col[i]).count() as f64;
            rank_sum[i] += above + (tied + 1.0) / 2.0;
            auroc_sum[i] += col[i];
        }
    }
    let mut rows: Vec<AggregateRow> = (0..m)
        .map(|i| AggregateRow {
            model: grid.models[i].clone(),
            mean_rank: rank_sum[i] / d as f64,
            mean_auroc: auroc_sum[i] / d as f64,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.mean_rank
            .total_cmp(&b.mean_rank)
            .then_with(|| a.model.cmp(&b.model))
    });
    Ok(rows)
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", "mean_rank", "mean_auroc"])?;
    for r in rows {
        w.write_record([r.model.clone(), fmt6(r.mean_rank), fmt6(r.mean_auroc)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinMatrix {
    pub models: Vec<String>,
    /// Fraction of compared datasets where row beats column by more than ε.
    pub wins: Vec<Vec<f64>>,
    /// Fraction of compared datasets with `|Δ| ≤ ε`.
    pub ties: Vec<Vec<f64>>,
    pub compared: Vec<Vec<usize>>,
}

/// Pairwise win fractions; datasets lacking either score are skipped.
pub fn win_matrix(scores: &ScoreTable, epsilon: f64) -> Result<WinMatrix, ReportError> {
    let grid = scores.grid()?;
    let m = grid.models.len();
    let mut wins = vec![vec![0.0; m]; m];
    let mut ties = vec![vec![0.0; m]; m];
    let mut compared = vec![vec![0; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let common = grid.common(i, j);
            let n = common.len();
            compared[i][j] = n;
            if n == 0 {
                continue;
            }
            let w = common.iter().filter(|(a, b)| a - b > epsilon).count();
            let t = common
                .iter()
                .filter(|(a, b)| (a - b).abs() <= epsilon)
                .count();
            wins[i][j] = w as f64 / n as f64;
            ties[i][j] = t as f64 / n as f64;
        }
    }
    Ok(WinMatrix {
        models: grid.models,
        wins,
        ties,
        compared,
    })
}

/// Long format: one row per ordered pair.
pub fn write_win_matrix_csv<W: Write>(m: &WinMatrix, writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "model",
        "opponent",
        "win_fraction",
        "tie_fraction",
        "datasets",
    ])?;
    for i in 0..m.models.len() {
        for j in 0..m.models.len() {
            if i != j {
                w.write_record([
                    m.models[i].clone(),
                    m.models[j].clone(),
                    fmt6(m.wins[i][j]),
                    fmt6(m.ties[i][j]),
                    m.compared[i][j].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub dataset: String,
    pub models: usize,
    /// Percentage of other models strictly above the baseline.
    pub pct_above: f64,
    /// Percentage of other models above the baseline by more than ε.
    pub pct_above_epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearWinRow {
    pub model: String,
    /// Datasets where the model holds the maximum AUROC.
    pub wins: usize,
    /// Datasets where the model is the maximum or within ε of it.
    pub wins_or_near: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineComparison {
    pub baseline: String,
    pub per_dataset: Vec<BaselineRow>,
    /// Sorted by win-or-near count, descending, then name.
    pub near_wins: Vec<NearWinRow>,
}

pub fn baseline_comparison(
    scores: &ScoreTable,
    baseline: &str,
    epsilon: f64,
) -> Result<BaselineComparison, ReportError> {
    let grid = scores.grid()?;
    let b = grid
        .model_index(baseline)
        .ok_or_else(|| ReportError::MissingBaseline(baseline.to_string()))?;
    let m = grid.models.len();
    let mut per_dataset = Vec::new();
    let mut wins = vec![0; m];
    let mut near = vec![0; m];
    for (j, dataset) in grid.datasets.iter().enumerate() {
        let present: Vec<(usize, f64)> = (0..m)
            .filter_map(|i| grid.values[i][j].map(|v| (i, v)))
            .collect();
        let Some(max) = present.iter().map(|&(_, v)| v).reduce(f64::max) else {
            continue;
        };
        for &(i, v) in &present {
            if v == max {
                wins[i] += 1;
            }
            if v == max || max - v < epsilon {
                near[i] += 1;
            }
        }
        let Some(base) = grid.values[b][j] else {
            continue;
        };
        let others: Vec<f64> = present
            .iter()
            .filter(|&&(i, _)| i != b)
            .map(|&(_, v)| v)
            .collect();
        let pct = |count: usize| {
            if others.is_empty() {
                0.0
            } else {
                100.0 * count as f64 / others.len() as f64
            }
        };
        per_dataset.push(BaselineRow {
            dataset: dataset.clone(),
            models: others.len(),
            pct_above: pct(others.iter().filter(|&&v| v > base).count()),
            pct_above_epsilon: pct(others.iter().filter(|&&v| v > base + epsilon).count()),
        });
    }
    let mut near_wins: Vec<NearWinRow> = (0..m)
        .map(|i| NearWinRow {
            model: grid.models[i].clone(),
            wins: wins[i],
            wins_or_near: near[i],
        })
        .collect();
    near_wins.sort_by(|a, b| {
        b.wins_or_near
            .cmp(&a.wins_or_near)
            .then_with(|| a.model.cmp(&b.model))
    });
    Ok(BaselineComparison {
        baseline: baseline.to_string(),
        per_dataset,
        near_wins,
    })
}

pub fn write_baseline_csv<W: Write>(c: &BaselineComparison, writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "dataset",
        "baseline",
        "models",
        "pct_above",
        "pct_above_epsilon",
    ])?;
    for r in &c.per_dataset {
        w.write_record([
            r.dataset.clone(),
            c.baseline.clone(),
            r.models.to_string(),
            fmt6(r.pct_above),
            fmt6(r.pct_above_epsilon),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_near_wins_csv<W: Write>(c: &BaselineComparison, writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", "wins", "wins_or_near"])?;
    for r in &c.near_wins {
        w.write_record([
            r.model.clone(),
            r.wins.to_string(),
            r.wins_or_near.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub model_i: String,
    pub model_j: String,
    /// Summary of `π_ij`, the probability that `model_i` beats `model_j`.
    pub summary: PairSummary,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BbtReport {
    pub win_table: WinTable,
    pub ranking: Ranking,
    pub diagnostics: Diagnostics,
    /// Every unordered pair, the higher-ranked model first.
    pub pairs: Vec<PairRow>,
    pub ppc: Vec<PpcResult>,
}

pub fn bbt_report(scores: &ScoreTable, cfg: &BbtConfig) -> Result<BbtReport, ReportError> {
    let win_table = build_win_table(scores, cfg.epsilon_tie)?;
    let posterior = sample_posterior(&win_table, cfg)?;
    let ranking = rank_models(&posterior, cfg)?;
    let index = |name: &str| posterior.models.iter().position(|m| m == name).unwrap();
    let order: Vec<usize> = ranking.entries.iter().map(|e| index(&e.model)).collect();
    let mut pairs = Vec::new();
    for (a, &i) in order.iter().enumerate() {
        for &j in &order[a + 1..] {
            let summary = pair_summary(&posterior, i, j, cfg)?;
            pairs.push(PairRow {
                model_i: posterior.models[i].clone(),
                model_j: posterior.models[j].clone(),
                decision: decide(&summary, cfg),
                summary,
            });
        }
    }
    let ppc = posterior_predictive_check(&posterior, &win_table, cfg);
    Ok(BbtReport {
        win_table,
        ranking,
        diagnostics: posterior.diagnostics,
        pairs,
        ppc,
    })
}

pub fn write_pairs_csv<W: Write>(r: &BbtReport, writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "pair",
        "mean",
        "hdi_low",
        "hdi_high",
        "p_in_rope",
        "p_above_half",
        "decision",
    ])?;
    for p in &r.pairs {
        let s = &p.summary;
        w.write_record([
            format!("{} vs {}", p.model_i, p.model_j),
            fmt6(s.mean),
            fmt6(s.hdi_low),
            fmt6(s.hdi_high),
            fmt6(s.p_in_rope),
            fmt6(s.p_above_half),
            p.decision.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ppc_csv<W: Write>(r: &BbtReport, writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "model_i", "model_j", "observed", "trials", "p_value", "flagged",
    ])?;
    for p in &r.ppc {
        w.write_record([
            p.model_i.clone(),
            p.model_j.clone(),
            p.observed.to_string(),
            p.trials.to_string(),
            fmt6(p.p_value),
            p.flagged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RankingJson<'a> {
    ranking: &'a Ranking,
    diagnostics: &'a Diagnostics,
}

/// Ranking with posterior β moments, plus sampler diagnostics.
pub fn write_ranking_json<W: Write>(r: &BbtReport, mut writer: W) -> Result<(), ReportError> {
    let doc = RankingJson {
        ranking: &r.ranking,
        diagnostics: &r.diagnostics,
    };
    serde_json::to_writer_pretty(&mut writer, &doc)?;
    writer.write_all(b"\n")?;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, ReportError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes the Bayesian comparison files: `bbt_pairs.csv`, `ranking.json`
/// and `ppc.csv`.
pub fn write_bbt_reports(
    scores: &ScoreTable,
    cfg: &BbtConfig,
    dir: &Path,
) -> Result<BbtReport, ReportError> {
    std::fs::create_dir_all(dir)?;
    let report = bbt_report(scores, cfg)?;
    write_pairs_csv(&report, create(dir, "bbt_pairs.csv")?)?;
    write_ranking_json(&report, create(dir, "ranking.json")?)?;
    write_ppc_csv(&report, create(dir, "ppc.csv")?)?;
    Ok(report)
}

/// Writes the aggregate tables: `table1.csv`, `win_matrix.csv`,
/// `baseline_per_dataset.csv` and `near_wins.csv`.
pub fn write_summary_reports(
    scores: &ScoreTable,
    baseline: &str,
    epsilon: f64,
    dir: &Path,
) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir)?;
    write_aggregate_csv(&aggregate_report(scores)?, create(dir, "table1.csv")?)?;
    write_win_matrix_csv(
        &win_matrix(scores, epsilon)?,
        create(dir, "win_matrix.csv")?,
    )?;
    let c = baseline_comparison(scores, baseline, epsilon)?;
    write_baseline_csv(&c, create(dir, "baseline_per_dataset.csv")?)?;
    write_near_wins_csv(&c, create(dir, "near_wins.csv")?)?;
    Ok(())
}
