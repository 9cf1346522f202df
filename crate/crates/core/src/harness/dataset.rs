use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::matrix::FeatureMatrix;
use crate::molgraph::{parse_smiles, Molecule};

use super::HarnessError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Replace multi-fragment inputs (salts, solvates) by their largest fragment.
    pub keep_largest_fragment: bool,
}

/// Molecules with a molecules × tasks label matrix; `None` is a missing label.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub smiles: Vec<String>,
    pub molecules: Vec<Molecule>,
    pub labels: Vec<Vec<Option<bool>>>,
    pub task_names: Vec<String>,
    /// Data-row index in the source file of every kept molecule.
    pub source_rows: Vec<usize>,
    /// Data rows in the source file, including dropped ones.
    pub source_len: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }

    pub fn task_count(&self) -> usize {
        self.task_names.len()
    }

    pub fn dropped(&self) -> usize {
        self.source_len - self.len()
    }

    pub fn task_labels(&self, task: usize) -> Vec<Option<bool>> {
        self.labels.iter().map(|row| row[task]).collect()
    }
}

fn parse_label(cell: &str) -> Option<Option<bool>> {
    match cell {
        "" => Some(None),
        _ => match cell.parse::<f64>() {
            Ok(0.0) => Some(Some(false)),
            Ok(1.0) => Some(Some(true)),
            _ => None,
        },
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, HarnessError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| HarnessError::MissingColumn(name.to_string()))
}

/// Reads a dataset CSV. Rows whose SMILES fail to parse are dropped and
/// counted; a non-binary label is an error even on a dropped row.
pub fn read_dataset<R: Read>(
    reader: R,
    name: &str,
    smiles_column: &str,
    task_columns: &[String],
    options: LoadOptions,
) -> Result<Dataset, HarnessError> {
    if task_columns.is_empty() {
        return Err(HarnessError::NoTasks);
    }
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = r.headers()?.clone();
    let smiles_col = column(&headers, smiles_column)?;
    let task_cols = task_columns
        .iter()
        .map(|t| column(&headers, t))
        .collect::<Result<Vec<_>, _>>()?;

    let mut d = Dataset {
        name: name.to_string(),
        smiles: Vec::new(),
        molecules: Vec::new(),
        labels: Vec::new(),
        task_names: task_columns.to_vec(),
        source_rows: Vec::new(),
        source_len: 0,
    };
    for (row, record) in r.records().enumerate() {
        let record = record?;
        d.source_len += 1;
        let labels = task_cols
            .iter()
            .zip(task_columns)
            .map(|(&c, task)| {
                let cell = record.get(c).unwrap_or("");
                parse_label(cell).ok_or_else(|| HarnessError::NonBinaryLabel {
                    row,
                    task: task.clone(),
                    value: cell.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let smiles = record.get(smiles_col).unwrap_or("");
        let molecule = match parse_smiles(smiles) {
            Ok(m) if options.keep_largest_fragment => m.largest_fragment(),
            Ok(m) => m,
            Err(e) => {
                log::debug!("{name}: row {row}: dropping {smiles:?}: {e}");
                continue;
            }
        };
        d.smiles.push(smiles.to_string());
        d.molecules.push(molecule);
        d.labels.push(labels);
        d.source_rows.push(row);
    }
    if d.dropped() > 0 {
        log::warn!(
            "{name}: dropped {} of {} rows with unparseable SMILES",
            d.dropped(),
            d.source_len
        );
    }
    if d.is_empty() {
        return Err(HarnessError::NoValidRows);
    }
    for (t, task) in d.task_names.iter().enumerate() {
        if d.labels.iter().all(|row| row[t].is_none()) {
            return Err(HarnessError::EmptyTask(task.clone()));
        }
    }
    Ok(d)
}

pub fn load_dataset(
    path: &Path,
    smiles_column: &str,
    task_columns: &[String],
    options: LoadOptions,
) -> Result<Dataset, HarnessError> {
    let file = File::open(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_dataset(file, &name, smiles_column, task_columns, options)
}

/// Frozen per-molecule vectors produced by an external model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub model_name: String,
    pub vectors: FeatureMatrix,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    /// Aligns the table with the dataset's kept molecules. A table may cover
    /// either the kept molecules or every source row, in which case the rows
    /// of dropped molecules are discarded.
    pub fn aligned(self, dataset: &Dataset) -> Result<EmbeddingTable, HarnessError> {
        let rows = self.vectors.rows();
        if rows == dataset.len() {
            Ok(self)
        } else if rows == dataset.source_len {
            Ok(EmbeddingTable {
                vectors: self.vectors.select_rows(&dataset.source_rows),
                model_name: self.model_name,
            })
        } else {
            Err(HarnessError::RowMismatch {
                model: self.model_name,
                expected: dataset.len(),
                source_rows: dataset.source_len,
                got: rows,
            })
        }
    }
}

/// Reads a CSV or `EMB1` embedding file; non-finite entries and ragged rows
/// are rejected by the matrix reader.
pub fn load_embeddings(path: &Path, model_name: &str) -> Result<EmbeddingTable, HarnessError> {
    Ok(EmbeddingTable {
        model_name: model_name.to_string(),
        vectors: FeatureMatrix::read_path(path)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tasks(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn read(text: &str, t: &[&str]) -> Result<Dataset, HarnessError> {
        read_dataset(
            text.as_bytes(),
            "t",
            "smiles",
            &tasks(t),
            LoadOptions::default(),
        )
    }

    #[test]
    fn three_rows_one_task() {
        let d = read("smiles,y\nCCO,0\nc1ccccc1,1\nCC(=O)O,1\n", &["y"]).unwrap();
        assert_eq!((d.len(), d.task_count(), d.dropped()), (3, 1, 0));
        assert_eq!(d.task_labels(0), vec![Some(false), Some(true), Some(true)]);
    }

    #[test]
    fn drops_unparseable_smiles() {
        let mut text = String::from("smiles,y\n");
        for i in 0..10 {
            let smi = if i == 4 { "C1CC" } else { "CCO" };
            text.push_str(&format!("{smi},{}\n", i % 2));
        }
        let d = read(&text, &["y"]).unwrap();
        assert_eq!((d.len(), d.dropped()), (9, 1));
        assert_eq!(d.source_rows, vec![0, 1, 2, 3, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn label_errors() {
        assert!(matches!(
            read("smiles,y\nCCO,2\n", &["y"]),
            Err(HarnessError::NonBinaryLabel { .. })
        ));
        assert!(matches!(
            read("smiles,y\nCCO,1\n", &["z"]),
            Err(HarnessError::MissingColumn(c)) if c == "z"
        ));
        assert!(matches!(
            read("smiles,y\nC1CC,1\n", &["y"]),
            Err(HarnessError::NoValidRows)
        ));
        assert!(matches!(
            read("smiles,y,z\nCCO,1,\n", &["y", "z"]),
            Err(HarnessError::EmptyTask(t)) if t == "z"
        ));
    }

    #[test]
    fn empty_cells_are_missing() {
        let d = read("smiles,a,b\nCCO,1,\nCCN,,0\n", &["a", "b"]).unwrap();
        assert_eq!(
            d.labels,
            vec![vec![Some(true), None], vec![None, Some(false)]]
        );
    }

    #[test]
    fn largest_fragment_option() {
        let text = "smiles,y\nCC(=O)[O-].[Na+],1\n";
        let full = read(text, &["y"]).unwrap();
        assert_eq!(full.molecules[0].fragment_count(), 2);
        let stripped = read_dataset(
            text.as_bytes(),
            "t",
            "smiles",
            &tasks(&["y"]),
            LoadOptions {
                keep_largest_fragment: true,
            },
        )
        .unwrap();
        assert_eq!(stripped.molecules[0].fragment_count(), 1);
        assert_eq!(stripped.molecules[0].atom_count(), 4);
    }

    #[test]
    fn embeddings_align_to_source_rows() {
        let d = read("smiles,y\nCCO,0\nC1CC,1\nCCN,1\n", &["y"]).unwrap();
        let full = EmbeddingTable {
            model_name: "m".into(),
            vectors: FeatureMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]),
        };
        let a = full.aligned(&d).unwrap();
        assert_eq!(a.vectors.as_slice(), &[1.0, 3.0]);
        let wrong = EmbeddingTable {
            model_name: "m".into(),
            vectors: FeatureMatrix::from_rows(&[vec![1.0]]),
        };
        assert!(matches!(
            wrong.aligned(&d),
            Err(HarnessError::RowMismatch { .. })
        ));
    }
}
