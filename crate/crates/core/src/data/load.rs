use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Feature, FeatureKind};

/// Cell values treated as missing.
const MISSING_TOKENS: &[&str] = &["", "NA", "N/A", "?", "nan", "NaN", "null"];

/// Level assigned to missing categorical cells.
pub const MISSING_LEVEL: &str = "(missing)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    /// Dataset name; defaults to the file stem.
    pub name: Option<String>,
    pub target: String,
    pub kinds: HashMap<String, FeatureKind>,
    pub drop_columns: Vec<String>,
    /// Label mapped to class 1. Defaults to the lexicographically greater label.
    pub positive_label: Option<String>,
    pub delimiter: char,
    /// Drop rows with any missing feature value instead of imputing later.
    pub drop_incomplete_rows: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            name: None,
            target: "Class".into(),
            kinds: HashMap::new(),
            drop_columns: Vec::new(),
            positive_label: None,
            delimiter: ',',
            drop_incomplete_rows: false,
        }
    }
}

impl LoadOptions {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            ..Self::default()
        }
    }
}

/// JSON dataset manifest: where a CSV lives and how to interpret it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub path: PathBuf,
    #[serde(flatten)]
    pub options: LoadOptions,
}

impl DatasetManifest {
    pub fn from_file(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut manifest: Self = serde_json::from_str(&text).map_err(|e| DataError::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if manifest.path.is_relative() {
            if let Some(dir) = path.parent() {
                manifest.path = dir.join(&manifest.path);
            }
        }
        Ok(manifest)
    }

    pub fn load(&self) -> Result<Dataset, DataError> {
        let mut options = self.options.clone();
        options.name = Some(self.name.clone());
        load_csv_with(&self.path, &options)
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: &str,
    kind_overrides: &HashMap<String, FeatureKind>,
) -> Result<Dataset, DataError> {
    let options = LoadOptions {
        target: target_column.to_string(),
        kinds: kind_overrides.clone(),
        ..LoadOptions::default()
    };
    load_csv_with(path, &options)
}

pub fn load_csv_with(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut options = options.clone();
    if options.name.is_none() {
        options.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    load_csv_str(&text, &options)
}

fn is_missing(cell: &str) -> bool {
    MISSING_TOKENS.contains(&cell)
}

fn is_index_header(name: &str) -> bool {
    name.is_empty() || name.starts_with("Unnamed: 0")
}

/// Parses CSV text into a [`Dataset`].
pub fn load_csv_str(text: &str, options: &LoadOptions) -> Result<Dataset, DataError> {
    if !options.delimiter.is_ascii() {
        return Err(DataError::Invalid(format!("delimiter {:?} is not ASCII", options.delimiter)));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(&e, 1))?
        .iter()
        .map(str::to_string)
        .collect();
    let target_idx = header
        .iter()
        .position(|h| *h == options.target)
        .ok_or_else(|| DataError::MissingTarget(options.target.clone()))?;
    // A leading unnamed column is a serialized row index.
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != target_idx)
        .filter(|&c| !options.drop_columns.contains(&header[c]))
        .filter(|&c| !(c == 0 && is_index_header(&header[c])))
        .collect();
    if feature_cols.is_empty() {
        return Err(DataError::NoFeatures);
    }

    let mut rows: Vec<(u64, Vec<String>, String)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            csv_error(&e, row)
        })?;
        let row = record.position().map_or(0, |p| p.line());
        let target = record.get(target_idx).unwrap_or("").to_string();
        if is_missing(&target) {
            return Err(DataError::MissingTargetValue { row });
        }
        let cells: Vec<String> = feature_cols
            .iter()
            .map(|&c| record.get(c).unwrap_or("").to_string())
            .collect();
        if options.drop_incomplete_rows && cells.iter().any(|c| is_missing(c)) {
            continue;
        }
        rows.push((row, cells, target));
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }

    let labels: BTreeSet<&str> = rows.iter().map(|r| r.2.as_str()).collect();
    if labels.len() == 1 {
        return Err(DataError::ConstantTarget {
            column: options.target.clone(),
            label: rows[0].2.clone(),
        });
    }
    if labels.len() > 2 {
        return Err(DataError::NotBinary {
            column: options.target.clone(),
            count: labels.len(),
        });
    }
    let ordered: Vec<&str> = labels.into_iter().collect();
    let positive = match &options.positive_label {
        Some(p) if ordered.contains(&p.as_str()) => p.clone(),
        Some(p) => return Err(DataError::UnknownPositiveLabel(p.clone())),
        None => ordered[1].to_string(),
    };
    let negative = ordered.iter().find(|l| **l != positive).map(|l| l.to_string()).unwrap_or_default();
    let y: Vec<u8> = rows.iter().map(|r| u8::from(r.2 == positive)).collect();

    let mut features = Vec::with_capacity(feature_cols.len());
    let mut groups = Vec::with_capacity(feature_cols.len());
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (j, &c) in feature_cols.iter().enumerate() {
        let name = header[c].clone();
        let inferred = if rows
            .iter()
            .all(|r| is_missing(&r.1[j]) || r.1[j].parse::<f64>().is_ok_and(f64::is_finite))
            && rows.iter().any(|r| !is_missing(&r.1[j]))
        {
            FeatureKind::Numeric
        } else {
            FeatureKind::Categorical
        };
        let kind = options.kinds.get(&name).copied().unwrap_or(inferred);
        match kind {
            FeatureKind::Numeric => {
                let mut col = Vec::with_capacity(rows.len());
                for (row, cells, _) in &rows {
                    let cell = &cells[j];
                    if is_missing(cell) {
                        col.push(f64::NAN);
                    } else {
                        let v = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                            DataError::Unparseable {
                                row: *row,
                                column: name.clone(),
                                value: cell.clone(),
                            }
                        })?;
                        col.push(v);
                    }
                }
                groups.push(vec![columns.len()]);
                columns.push(col);
                features.push(Feature::numeric(name));
            }
            FeatureKind::Categorical => {
                let present: BTreeSet<&str> =
                    rows.iter().map(|r| r.1[j].as_str()).filter(|c| !is_missing(c)).collect();
                let mut levels: Vec<String> = present.into_iter().map(str::to_string).collect();
                if rows.iter().any(|r| is_missing(&r.1[j])) {
                    levels.push(MISSING_LEVEL.to_string());
                }
                let index: HashMap<&str, usize> =
                    levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
                let start = columns.len();
                let mut onehot = vec![vec![0.0; rows.len()]; levels.len()];
                for (i, (_, cells, _)) in rows.iter().enumerate() {
                    let cell = cells[j].as_str();
                    let key = if is_missing(cell) { MISSING_LEVEL } else { cell };
                    onehot[index[key]][i] = 1.0;
                }
                groups.push((start..start + levels.len()).collect());
                columns.extend(onehot);
                features.push(Feature {
                    name,
                    kind: FeatureKind::Categorical,
                    levels,
                });
            }
        }
    }

    let n = rows.len();
    let mut x = Array2::zeros((n, columns.len()));
    for (c, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            x[[i, c]] = *v;
        }
    }
    let raw = rows.into_iter().map(|r| r.1).collect();
    let name = options.name.clone().unwrap_or_else(|| "dataset".into());
    Dataset::new(name, features, x, groups, y, raw, [negative, positive])
}

fn csv_error(e: &csv::Error, row: u64) -> DataError {
    DataError::Csv {
        row,
        message: e.to_string(),
    }
}
