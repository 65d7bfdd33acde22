//! Canonical in-memory representation of the feature/outcome table and its
//! CSV realisation.
//!
//! The interchange format is a UTF-8, comma-separated, LF-terminated CSV with
//! a mandatory header: one id column (first), one column per feature prefixed
//! `feature_`, and a single `outcome` column holding `safe`/`unsafe` (case
//! insensitive) or `0`/`1`. Missing cells are empty fields; they are loaded
//! into a [`MissingMask`] and imputed downstream, never at load time.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Binary scenario outcome. `Unsafe` is the positive class everywhere
/// downstream and maps to 1 in every numeric context; `Safe` maps to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Outcome {
    Safe,
    Unsafe,
}

impl Outcome {
    pub fn as_f64(self) -> f64 {
        match self {
            Outcome::Safe => 0.0,
            Outcome::Unsafe => 1.0,
        }
    }

    pub fn parse(s: &str) -> Result<Outcome> {
        match s.trim().to_ascii_lowercase().as_str() {
            "safe" | "0" => Ok(Outcome::Safe),
            "unsafe" | "1" => Ok(Outcome::Unsafe),
            other => Err(Error::BadOutcome(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Safe => "safe",
            Outcome::Unsafe => "unsafe",
        }
    }
}

/// Boolean matrix congruent with the value matrix; `true` marks a cell that
/// was absent in the source. Imputed cells keep their flag so reports can
/// distinguish measured from filled-in values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    rows: usize,
    cols: usize,
    flags: Vec<bool>,
}

impl MissingMask {
    pub fn new(rows: usize, cols: usize) -> Self {
        MissingMask {
            rows,
            cols,
            flags: vec![false; rows * cols],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.flags[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, missing: bool) {
        self.flags[row * self.cols + col] = missing;
    }

    pub fn any(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Dense feature/outcome table: one row per scenario instance, one column per
/// feature, plus an outcome label per instance. Immutable by convention after
/// construction; all pipeline stages produce new tables.
#[derive(Debug, Clone, PartialEq)]
pub struct MetadataTable {
    instance_ids: Vec<String>,
    feature_names: Vec<String>,
    /// Row-major values, `instance_ids.len() x feature_names.len()`.
    values: Vec<f64>,
    outcomes: Vec<Outcome>,
    missing: MissingMask,
}

impl MetadataTable {
    pub fn new(
        instance_ids: Vec<String>,
        feature_names: Vec<String>,
        values: Vec<f64>,
        outcomes: Vec<Outcome>,
        missing: MissingMask,
    ) -> Result<Self> {
        let rows = instance_ids.len();
        let cols = feature_names.len();
        if rows == 0 {
            return Err(Error::ZeroRows);
        }
        if cols == 0 {
            return Err(Error::NoFeatures);
        }
        if outcomes.len() != rows || values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        let mut seen = HashSet::new();
        for id in &instance_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        let mut seen_names = HashSet::new();
        for name in &feature_names {
            if !seen_names.insert(name.as_str()) {
                return Err(Error::DuplicateId(name.clone()));
            }
        }
        for (idx, &v) in values.iter().enumerate() {
            if !v.is_finite() && !missing.get(idx / cols, idx % cols) {
                return Err(Error::NonNumericCell {
                    row: idx / cols,
                    column: feature_names[idx % cols].clone(),
                    value: v.to_string(),
                });
            }
        }
        Ok(MetadataTable {
            instance_ids,
            feature_names,
            values,
            outcomes,
            missing,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn missing(&self) -> &MissingMask {
        &self.missing
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_features() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let cols = self.n_features();
        &self.values[row * cols..(row + 1) * cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_instances()).map(|r| self.value(r, col)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Outcome labels as a 0/1 vector (Unsafe = 1).
    pub fn outcome_vector(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.as_f64()).collect()
    }

    /// New table keeping only the given feature columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<MetadataTable> {
        let names = cols
            .iter()
            .map(|&c| self.feature_names[c].clone())
            .collect::<Vec<_>>();
        let mut values = Vec::with_capacity(self.n_instances() * cols.len());
        let mut missing = MissingMask::new(self.n_instances(), cols.len());
        for r in 0..self.n_instances() {
            for (j, &c) in cols.iter().enumerate() {
                values.push(self.value(r, c));
                missing.set(r, j, self.missing.get(r, c));
            }
        }
        MetadataTable::new(
            self.instance_ids.clone(),
            names,
            values,
            self.outcomes.clone(),
            missing,
        )
    }

    /// New table keeping only the given instance rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<MetadataTable> {
        let cols = self.n_features();
        let mut values = Vec::with_capacity(rows.len() * cols);
        let mut missing = MissingMask::new(rows.len(), cols);
        let mut ids = Vec::with_capacity(rows.len());
        let mut outcomes = Vec::with_capacity(rows.len());
        for (i, &r) in rows.iter().enumerate() {
            ids.push(self.instance_ids[r].clone());
            outcomes.push(self.outcomes[r]);
            for c in 0..cols {
                values.push(self.value(r, c));
                missing.set(i, c, self.missing.get(r, c));
            }
        }
        MetadataTable::new(ids, self.feature_names.clone(), values, outcomes, missing)
    }

    /// Replace the value matrix, keeping ids, names, outcomes and mask.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Result<MetadataTable> {
        MetadataTable::new(
            self.instance_ids.clone(),
            self.feature_names.clone(),
            values,
            self.outcomes.clone(),
            self.missing.clone(),
        )
    }
}

/// Load a metadata CSV. The first column is the instance id; every column
/// whose header starts with `feature_` is a feature (prefix stripped); the
/// `outcome` column holds the label. Empty feature cells become missing.
pub fn load_metadata(path: impl AsRef<Path>) -> Result<MetadataTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::ZeroRows);
    }
    let outcome_col = headers
        .iter()
        .position(|h| h == "outcome")
        .ok_or(Error::MissingOutcome)?;
    let feature_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            h.strip_prefix("feature_")
                .map(|name| (i, name.to_string()))
        })
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::NoFeatures);
    }

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut outcomes = Vec::new();
    let mut missing_cells = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        ids.push(record.get(0).unwrap_or("").to_string());
        outcomes.push(Outcome::parse(record.get(outcome_col).unwrap_or(""))?);
        for (j, (col, name)) in feature_cols.iter().enumerate() {
            let raw = record.get(*col).unwrap_or("").trim();
            if raw.is_empty() {
                values.push(f64::NAN);
                missing_cells.push((row_idx, j));
            } else {
                let v: f64 = raw.parse().map_err(|_| Error::NonNumericCell {
                    row: row_idx,
                    column: name.clone(),
                    value: raw.to_string(),
                })?;
                values.push(v);
            }
        }
    }
    if ids.is_empty() {
        return Err(Error::ZeroRows);
    }
    let names: Vec<String> = feature_cols.into_iter().map(|(_, n)| n).collect();
    let mut mask = MissingMask::new(ids.len(), names.len());
    for (r, c) in missing_cells {
        mask.set(r, c, true);
    }
    MetadataTable::new(ids, names, values, outcomes, mask)
}

/// Render a float with enough significant digits for a 1e-9-relative
/// roundtrip. Uses Rust's shortest-roundtrip formatting, which is lossless.
fn render(v: f64) -> String {
    format!("{v}")
}

/// Save a table as metadata CSV: `id,feature_<name>...,outcome`, LF line
/// endings, missing cells rendered empty.
pub fn save_metadata(table: &MetadataTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str("id");
    for name in table.feature_names() {
        let _ = write!(out, ",feature_{name}");
    }
    out.push_str(",outcome\n");
    for r in 0..table.n_instances() {
        out.push_str(&table.instance_ids()[r]);
        for c in 0..table.n_features() {
            out.push(',');
            if !table.missing().get(r, c) {
                out.push_str(&render(table.value(r, c)));
            }
        }
        let _ = write!(out, ",{}\n", table.outcomes()[r].as_str());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
