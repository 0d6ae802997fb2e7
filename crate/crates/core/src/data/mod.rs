//! Tabular datasets: loading, typing, one-hot encoding, splitting and
//! subsampling into a canonical numeric form.
//!
//! All ranking and selection work at the granularity of the *original*
//! features. A categorical feature expands to one encoded column per level;
//! [`Dataset::column_groups`] records which encoded columns belong to which
//! original feature.

mod load;
mod split;
mod transform;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use load::{load_csv, load_csv_str, load_csv_with, DatasetManifest, LoadOptions};
pub use split::{allocate_largest_remainder, round_half_up, sample_for_prompt, stratified_split, Split};
pub use transform::{impute_missing, is_standardized, standardize};

/// Header under which the binary target is serialized in prompt samples.
pub const CLASS_HEADER: &str = "Class";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: u64, message: String },
    #[error("target column `{0}` not found in header")]
    MissingTarget(String),
    #[error("target column `{column}` is constant (only `{label}` observed)")]
    ConstantTarget { column: String, label: String },
    #[error("target column `{column}` has {count} distinct labels; only binary targets are supported")]
    NotBinary { column: String, count: usize },
    #[error("target value missing at row {row}")]
    MissingTargetValue { row: u64 },
    #[error("positive label `{0}` does not occur in the target column")]
    UnknownPositiveLabel(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Unparseable { row: u64, column: String, value: String },
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("dataset has no rows")]
    Empty,
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("class {class} has {count} member(s); at least 2 are required to stratify")]
    ClassTooSmall { class: u8, count: usize },
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("prompt sample size must be positive")]
    EmptySample,
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// One original (pre-encoding) feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    /// Category levels in encoded-column order; empty for numeric features.
    pub levels: Vec<String>,
}

impl Feature {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
            levels: Vec::new(),
        }
    }
}

/// A typed, encoded binary-classification dataset.
///
/// Immutable after construction; transformations return new values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<Feature>,
    x: Array2<f64>,
    column_groups: Vec<Vec<usize>>,
    y: Vec<u8>,
    raw: Vec<Vec<String>>,
    class_labels: [String; 2],
}

impl Dataset {
    /// Assembles a dataset, checking every structural invariant.
    pub fn new(
        name: impl Into<String>,
        features: Vec<Feature>,
        x: Array2<f64>,
        column_groups: Vec<Vec<usize>>,
        y: Vec<u8>,
        raw: Vec<Vec<String>>,
        class_labels: [String; 2],
    ) -> Result<Self, DataError> {
        let ds = Self {
            name: name.into(),
            features,
            x,
            column_groups,
            y,
            raw,
            class_labels,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Builds an all-numeric dataset; raw cells are the shortest round-trip
    /// text of each value.
    pub fn from_numeric(
        name: impl Into<String>,
        feature_names: Vec<String>,
        x: Array2<f64>,
        y: Vec<u8>,
    ) -> Result<Self, DataError> {
        let features = feature_names.into_iter().map(Feature::numeric).collect::<Vec<_>>();
        let groups = (0..features.len()).map(|j| vec![j]).collect();
        let raw = x
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|v| format_raw(*v)).collect())
            .collect();
        Self::new(name, features, x, groups, y, raw, ["0".into(), "1".into()])
    }

    fn validate(&self) -> Result<(), DataError> {
        let n = self.x.nrows();
        if n == 0 {
            return Err(DataError::Empty);
        }
        if self.features.is_empty() {
            return Err(DataError::NoFeatures);
        }
        if self.y.len() != n || self.raw.len() != n {
            return Err(DataError::Invalid(format!(
                "row count mismatch: x has {n}, y has {}, raw has {}",
                self.y.len(),
                self.raw.len()
            )));
        }
        if self.column_groups.len() != self.features.len() {
            return Err(DataError::Invalid("one column group per feature required".into()));
        }
        let mut seen = vec![false; self.x.ncols()];
        for group in &self.column_groups {
            if group.is_empty() {
                return Err(DataError::Invalid("empty column group".into()));
            }
            for &c in group {
                if c >= seen.len() || seen[c] {
                    return Err(DataError::Invalid("column groups must partition the encoded columns".into()));
                }
                seen[c] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(DataError::Invalid("column groups must partition the encoded columns".into()));
        }
        if self.y.iter().any(|&v| v > 1) {
            return Err(DataError::Invalid("labels must be 0 or 1".into()));
        }
        if !self.y.contains(&0) || !self.y.contains(&1) {
            let label = self.class_labels[usize::from(self.y[0])].clone();
            return Err(DataError::ConstantTarget {
                column: "target".into(),
                label,
            });
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn column_groups(&self) -> &[Vec<usize>] {
        &self.column_groups
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    /// Number of original features.
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Number of encoded columns.
    pub fn n_columns(&self) -> usize {
        self.x.ncols()
    }

    /// `[negative, positive]` original target labels.
    pub fn class_labels(&self) -> &[String; 2] {
        &self.class_labels
    }

    pub fn raw_row(&self, row: usize) -> &[String] {
        &self.raw[row]
    }

    /// Kind of every encoded column.
    pub fn column_kinds(&self) -> Vec<FeatureKind> {
        let mut kinds = vec![FeatureKind::Numeric; self.n_columns()];
        for (f, group) in self.features.iter().zip(&self.column_groups) {
            for &c in group {
                kinds[c] = f.kind;
            }
        }
        kinds
    }

    /// Encoded column indices (ascending) covering the given original features.
    pub fn columns_for(&self, features: &[usize]) -> Vec<usize> {
        let mut cols: Vec<usize> = features
            .iter()
            .flat_map(|&f| self.column_groups[f].iter().copied())
            .collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    pub fn has_missing(&self) -> bool {
        self.x.iter().any(|v| v.is_nan())
    }

    /// Returns a copy with the encoded matrix replaced. Shape must match.
    pub(crate) fn with_x(&self, x: Array2<f64>) -> Self {
        debug_assert_eq!(x.dim(), self.x.dim());
        Self { x, ..self.clone() }
    }

    /// Discrete code of a categorical feature for every row (the level index).
    pub fn category_codes(&self, feature: usize) -> Vec<usize> {
        let group = &self.column_groups[feature];
        self.x
            .rows()
            .into_iter()
            .map(|row| {
                group
                    .iter()
                    .enumerate()
                    .max_by(|a, b| row[*a.1].total_cmp(&row[*b.1]).then(b.0.cmp(&a.0)))
                    .map(|(level, _)| level)
                    .unwrap_or(0)
            })
            .collect()
    }

    /// Serializes the given rows as CSV: original feature names and raw
    /// values, followed by the 0/1 target under [`CLASS_HEADER`].
    pub fn to_csv(&self, rows: &[usize]) -> String {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let mut header = self.feature_names();
        header.push(CLASS_HEADER.to_string());
        writer.write_record(&header).expect("in-memory CSV write");
        for &r in rows {
            let mut record: Vec<&str> = self.raw[r].iter().map(String::as_str).collect();
            let label = if self.y[r] == 1 { "1" } else { "0" };
            record.push(label);
            writer.write_record(&record).expect("in-memory CSV write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory CSV flush")).expect("CSV output is UTF-8")
    }
}

fn format_raw(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}
