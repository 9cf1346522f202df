//! Versioned JSON description of a benchmark run.
//!
//! ```json
//! {
//!   "version": 1,
//!   "datasets": [{"name": "toy", "path": "toy.csv", "tasks": ["active"]}],
//!   "representations": [
//!     {"name": "ECFP-count", "type": "fingerprint", "fingerprint": {"kind": "ecfp"}},
//!     {"name": "MyModel", "type": "embedding", "files": {"toy": "toy_mymodel.emb"}}
//!   ],
//!   "output_dir": "results"
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bbt::BbtConfig;
use crate::fingerprints::FingerprintConfig;
use crate::harness::{ClassifierSpec, EvalOptions, Head, LoadOptions};

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_BASELINE: &str = "ECFP-count";
pub const DEFAULT_NEAR_WIN_EPSILON: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_smiles_column")]
    pub smiles_column: String,
    pub tasks: Vec<String>,
    #[serde(default)]
    pub keep_largest_fragment: bool,
}

impl DatasetEntry {
    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            keep_largest_fragment: self.keep_largest_fragment,
        }
    }
}

fn default_smiles_column() -> String {
    "smiles".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RepresentationEntry {
    /// Computed from the dataset's molecules.
    Fingerprint {
        name: String,
        fingerprint: FingerprintConfig,
    },
    /// Precomputed vectors, one file per dataset.
    Embedding {
        name: String,
        files: BTreeMap<String, PathBuf>,
    },
}

impl RepresentationEntry {
    pub fn name(&self) -> &str {
        match self {
            RepresentationEntry::Fingerprint { name, .. } => name,
            RepresentationEntry::Embedding { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub frac_train: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            frac_train: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub seed: u64,
    pub heads: Vec<Head>,
    pub evaluation: EvalOptions,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            seed: 0,
            heads: Head::ALL.to_vec(),
            evaluation: EvalOptions::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn specs(&self) -> Vec<ClassifierSpec> {
        self.heads
            .iter()
            .map(|&h| ClassifierSpec::standard(h, self.seed))
            .collect()
    }
}

fn default_baseline() -> String {
    DEFAULT_BASELINE.to_string()
}

fn default_near_win_epsilon() -> f64 {
    DEFAULT_NEAR_WIN_EPSILON
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub version: u32,
    pub datasets: Vec<DatasetEntry>,
    pub representations: Vec<RepresentationEntry>,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub bbt: BbtConfig,
    #[serde(default = "default_baseline")]
    pub baseline: String,
    #[serde(default = "default_near_win_epsilon")]
    pub near_win_epsilon: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl BenchmarkConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: BenchmarkConfig = serde_json::from_str(text)?;
        if cfg.version != CONFIG_VERSION {
            return Err(ConfigError::Version(cfg.version));
        }
        Ok(cfg)
    }

    /// Reads, resolves relative paths against the file's directory, and
    /// validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for d in &mut self.datasets {
            resolve(&mut d.path);
        }
        for r in &mut self.representations {
            if let RepresentationEntry::Embedding { files, .. } = r {
                files.values_mut().for_each(resolve);
            }
        }
        resolve(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.datasets.is_empty() {
            return invalid("no datasets".into());
        }
        if self.representations.is_empty() {
            return invalid("no representations".into());
        }
        let mut seen = HashSet::new();
        for d in &self.datasets {
            if !seen.insert(d.name.as_str()) {
                return invalid(format!("duplicate dataset {:?}", d.name));
            }
            if d.tasks.is_empty() {
                return invalid(format!("dataset {:?} lists no tasks", d.name));
            }
        }
        let mut seen = HashSet::new();
        for r in &self.representations {
            if !seen.insert(r.name()) {
                return invalid(format!("duplicate representation {:?}", r.name()));
            }
            match r {
                RepresentationEntry::Fingerprint { name, fingerprint } => {
                    if let Err(e) = fingerprint.validate() {
                        return invalid(format!("representation {name:?}: {e}"));
                    }
                }
                RepresentationEntry::Embedding { name, files } => {
                    for d in &self.datasets {
                        if !files.contains_key(&d.name) {
                            return invalid(format!(
                                "representation {name:?} has no file for dataset {:?}",
                                d.name
                            ));
                        }
                    }
                }
            }
        }
        if !self
            .representations
            .iter()
            .any(|r| r.name() == self.baseline)
        {
            return invalid(format!(
                "baseline {:?} is not a representation",
                self.baseline
            ));
        }
        if !(self.split.frac_train > 0.0 && self.split.frac_train < 1.0) {
            return invalid(format!(
                "frac_train {} is not in (0, 1)",
                self.split.frac_train
            ));
        }
        if !(self.near_win_epsilon >= 0.0 && self.near_win_epsilon.is_finite()) {
            return invalid("near_win_epsilon must be non-negative".into());
        }
        if self.classifier.heads.is_empty() {
            return invalid("no classifier heads".into());
        }
        if self.classifier.evaluation.folds < 2 {
            return invalid("cross-validation needs at least 2 folds".into());
        }
        if let Err(e) = self.bbt.validate() {
            return invalid(e.to_string());
        }
        Ok(())
    }
}
