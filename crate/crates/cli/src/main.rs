use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use molbench::bbt::BbtConfig;
use molbench::config::{BenchmarkConfig, DEFAULT_BASELINE, DEFAULT_NEAR_WIN_EPSILON};
use molbench::fingerprints::{fingerprint_matrix, FingerprintConfig, FingerprintKind};
use molbench::harness::{load_dataset, scaffold_split, LoadOptions};
use molbench::molgraph::parse_smiles;
use molbench::pipeline::{
    evaluate_config, run_pipeline, write_reports, FailureClass, PipelineError, PipelineOptions,
};
use molbench::reports::{write_bbt_reports, write_summary_reports, ReportError};
use molbench::scores::ScoreTable;

#[derive(Parser)]
#[command(
    version,
    about = "Benchmark molecular representations and compare them with a Bayesian Bradley-Terry model"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fingerprint a SMILES file into a feature matrix.
    Fingerprint(FingerprintArgs),
    /// Scaffold-split a dataset and print the train/test indices.
    Split(SplitArgs),
    /// Evaluate every representation on every dataset and write scores.csv.
    Evaluate(RunArgs),
    /// Bayesian Bradley-Terry comparison of a score table.
    Compare(TableArgs),
    /// Aggregate tables for a score table.
    Report(TableArgs),
    /// Evaluate, then write every report.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ecfp,
    AtomPair,
    TopologicalTorsion,
}

impl From<Kind> for FingerprintKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Ecfp => FingerprintKind::Ecfp,
            Kind::AtomPair => FingerprintKind::AtomPair,
            Kind::TopologicalTorsion => FingerprintKind::TopologicalTorsion,
        }
    }
}

#[derive(Args)]
struct FingerprintArgs {
    /// `.smi` file (first token per line) or CSV with a SMILES column.
    input: PathBuf,
    /// Output path; `.emb`/`.bin` write the binary format, anything else CSV.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "ecfp")]
    kind: Kind,
    /// ECFP radius.
    #[arg(long, default_value_t = 2)]
    radius: u32,
    #[arg(long, default_value_t = 2048)]
    length: usize,
    /// Presence bits instead of counts.
    #[arg(long)]
    binary: bool,
    /// SMILES column for CSV input.
    #[arg(long, default_value = "smiles")]
    smiles_column: String,
}

#[derive(Args)]
struct SplitArgs {
    /// Dataset CSV.
    dataset: PathBuf,
    /// Label columns; only used to filter unparseable rows consistently.
    #[arg(long, required = true, num_args = 1..)]
    tasks: Vec<String>,
    #[arg(long, default_value = "smiles")]
    smiles_column: String,
    #[arg(long, default_value_t = 0.8)]
    frac_train: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    keep_largest_fragment: bool,
    /// Write JSON here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the split, classifier and BBT seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Reuse cached (model, dataset) cells.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct TableArgs {
    /// Score table CSV (model,dataset,head,auroc).
    scores: PathBuf,
    /// Take BBT settings, baseline and near-win epsilon from this config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the BBT seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to the score table's directory).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// An error tagged with its exit-code class.
struct Failure {
    class: FailureClass,
    error: anyhow::Error,
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self.class {
            FailureClass::Config => 2,
            FailureClass::Data => 3,
            FailureClass::Diagnostics => 4,
        }
    }
}

fn data(error: anyhow::Error) -> Failure {
    Failure {
        class: FailureClass::Data,
        error,
    }
}

fn config(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        class: FailureClass::Config,
        error: error.into(),
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            class: e.class(),
            error: e.into(),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        PipelineError::from(e).into()
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<BenchmarkConfig, Failure> {
    let mut cfg = BenchmarkConfig::load(path).map_err(config)?;
    if let Some(seed) = seed {
        cfg.split.seed = seed;
        cfg.classifier.seed = seed;
        cfg.bbt.seed = seed;
    }
    Ok(cfg)
}

fn read_smiles(path: &Path, column: &str) -> anyhow::Result<Vec<String>> {
    let is_csv = path.extension().is_some_and(|e| e == "csv");
    if is_csv {
        let mut reader = csv::Reader::from_path(path)?;
        let idx = reader
            .headers()?
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| anyhow!("column {column:?} not found in {}", path.display()))?;
        reader
            .records()
            .map(|r| Ok(r?.get(idx).unwrap_or_default().to_string()))
            .collect()
    } else {
        let file =
            fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let mut out = Vec::new();
        for line in BufReader::new(file).lines() {
            if let Some(token) = line?.split_whitespace().next() {
                out.push(token.to_string());
            }
        }
        Ok(out)
    }
}

fn cmd_fingerprint(a: FingerprintArgs) -> Result<(), Failure> {
    let cfg = FingerprintConfig::new(a.kind.into())
        .with_radius(a.radius)
        .with_length(a.length)
        .with_counted(!a.binary);
    cfg.validate().map_err(config)?;
    let smiles = read_smiles(&a.input, &a.smiles_column).map_err(data)?;
    let molecules = smiles
        .iter()
        .enumerate()
        .map(|(i, s)| parse_smiles(s).with_context(|| format!("line {}: {s:?}", i + 1)))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(data)?;
    let matrix = fingerprint_matrix(&molecules, &cfg).map_err(config)?;
    matrix
        .write_path(&a.output)
        .with_context(|| format!("cannot write {}", a.output.display()))
        .map_err(data)?;
    log::info!(
        "wrote {} x {} matrix to {}",
        matrix.rows(),
        matrix.cols(),
        a.output.display()
    );
    Ok(())
}

fn cmd_split(a: SplitArgs) -> Result<(), Failure> {
    if !(a.frac_train > 0.0 && a.frac_train < 1.0) {
        return Err(config(anyhow!(
            "--frac-train {} is not in (0, 1)",
            a.frac_train
        )));
    }
    let options = LoadOptions {
        keep_largest_fragment: a.keep_largest_fragment,
    };
    let dataset = load_dataset(&a.dataset, &a.smiles_column, &a.tasks, options)
        .map_err(|e| data(e.into()))?;
    let split = scaffold_split(&dataset, a.frac_train, a.seed).map_err(|e| data(e.into()))?;
    let text = serde_json::to_string_pretty(&split).expect("splits serialize") + "\n";
    match a.output {
        Some(path) => fs::write(&path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(data)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_run(a: RunArgs, full: bool) -> Result<(), Failure> {
    let cfg = load_config(&a.config, a.seed)?;
    let opts = PipelineOptions { resume: a.resume };
    let evaluation = if full {
        let run = run_pipeline(&cfg, opts)?;
        if let Some(bbt) = &run.bbt {
            for e in &bbt.ranking.entries {
                println!(
                    "{:>3}  {:<24} beta {:+.3} ± {:.3}",
                    e.rank, e.model, e.beta_mean, e.beta_sd
                );
            }
        }
        run.evaluation
    } else {
        evaluate_config(&cfg, opts)?
    };
    eprintln!(
        "{} cell(s) evaluated, {} reused, {} dataset(s) skipped; results in {}",
        evaluation.recomputed.len(),
        evaluation.reused.len(),
        evaluation.skipped_datasets.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

struct TableContext {
    scores: ScoreTable,
    out: PathBuf,
    cfg: Option<BenchmarkConfig>,
}

fn table_context(a: &TableArgs) -> Result<TableContext, Failure> {
    let cfg = a
        .config
        .as_deref()
        .map(|p| load_config(p, a.seed))
        .transpose()?;
    let file = fs::File::open(&a.scores)
        .with_context(|| format!("cannot open {}", a.scores.display()))
        .map_err(data)?;
    let scores = ScoreTable::read_csv(file).map_err(|e| data(e.into()))?;
    let out = a
        .output
        .clone()
        .unwrap_or_else(|| a.scores.parent().map(Path::to_path_buf).unwrap_or_default());
    Ok(TableContext { scores, out, cfg })
}

fn cmd_compare(a: TableArgs) -> Result<(), Failure> {
    let ctx = table_context(&a)?;
    let mut bbt = ctx.cfg.map(|c| c.bbt).unwrap_or_else(BbtConfig::default);
    if let Some(seed) = a.seed {
        bbt.seed = seed;
    }
    bbt.validate().map_err(config)?;
    let report = write_bbt_reports(&ctx.scores, &bbt, &ctx.out)?;
    for p in &report.pairs {
        println!(
            "{} vs {}: mean {:.3}, HDI [{:.3}, {:.3}], ROPE {:.3} -> {}",
            p.model_i,
            p.model_j,
            p.summary.mean,
            p.summary.hdi_low,
            p.summary.hdi_high,
            p.summary.p_in_rope,
            p.decision
        );
    }
    Ok(())
}

fn cmd_report(a: TableArgs) -> Result<(), Failure> {
    let ctx = table_context(&a)?;
    match &ctx.cfg {
        Some(cfg) => {
            write_reports(cfg, &ctx.scores, &ctx.out)?;
        }
        None => write_summary_reports(
            &ctx.scores,
            DEFAULT_BASELINE,
            DEFAULT_NEAR_WIN_EPSILON,
            &ctx.out,
        )?,
    }
    eprintln!("reports written to {}", ctx.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(config(anyhow!("--jobs must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| config(anyhow!(e)))?;
    }
    match cli.command {
        Command::Fingerprint(a) => cmd_fingerprint(a),
        Command::Split(a) => cmd_split(a),
        Command::Evaluate(a) => cmd_run(a, false),
        Command::Run(a) => cmd_run(a, true),
        Command::Compare(a) => cmd_compare(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.exit_code())
        }
    }
}
