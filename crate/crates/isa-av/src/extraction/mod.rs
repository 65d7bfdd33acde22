//! Scenario parsing and feature computation.
//!
//! Two input formats are supported: per-timestep JSON logs of a full driving
//! simulation (61 static and dynamic features) and road-spine JSON documents
//! for lane-keeping tests (15 structural road features). Extraction is pure;
//! a directory of scenario files maps deterministically to a
//! [`MetadataTable`](crate::metadata::MetadataTable) with files taken in
//! lexicographic order.

mod road;
mod timeline;

pub use road::{
    extract_road_features, parse_road, road_feature_names, RoadSuite, RoadTest,
    DEFAULT_STRAIGHT_THRESHOLD_DEG,
};
pub use timeline::{
    collect_operations, dynamic_feature_names, extract_dynamic_features, parse_scenario_ts,
    EncodingTables, Obstacle, ObstacleKind, ScenarioTimeline, TimeStep,
};

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metadata::{MetadataTable, MissingMask, Outcome};

/// One scenario's named feature values plus its outcome label. `None`
/// entries are features undefined for this scenario (e.g. obstacle
/// statistics of an obstacle-free scenario) and become missing-mask cells.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<Option<f64>>,
    pub outcome: Outcome,
}

/// Assemble per-scenario feature vectors into a metadata table. All vectors
/// must share the same feature names in the same order.
pub fn assemble_table(ids: Vec<String>, vectors: Vec<FeatureVector>) -> Result<MetadataTable> {
    if vectors.is_empty() {
        return Err(Error::ZeroRows);
    }
    let names = vectors[0].names.clone();
    let cols = names.len();
    let mut values = Vec::with_capacity(vectors.len() * cols);
    let mut mask = MissingMask::new(vectors.len(), cols);
    let mut outcomes = Vec::with_capacity(vectors.len());
    for (r, fv) in vectors.iter().enumerate() {
        if fv.names != names {
            return Err(Error::Data(format!(
                "feature vector {r} does not match the suite's feature names"
            )));
        }
        outcomes.push(fv.outcome);
        for (c, v) in fv.values.iter().enumerate() {
            match v {
                Some(x) => values.push(*x),
                None => {
                    values.push(f64::NAN);
                    mask.set(r, c, true);
                }
            }
        }
    }
    MetadataTable::new(ids, names, values, outcomes, mask)
}

fn json_files(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir.display().to_string(), e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!(
            "no .json scenario files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

/// Extract the 61-feature table from a directory of time-series scenario
/// files. The operation vocabulary is collected over the whole suite first
/// so that encodings are total and stable.
pub fn extract_timeseries_suite(dir: impl AsRef<Path>) -> Result<MetadataTable> {
    let files = json_files(dir.as_ref())?;
    let mut timelines = Vec::with_capacity(files.len());
    let mut ops = BTreeSet::new();
    for path in &files {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let timeline = parse_scenario_ts(&bytes)?;
        collect_operations(&timeline, &mut ops);
        timelines.push(timeline);
    }
    let enc = EncodingTables::with_operations(ops);
    let mut ids = Vec::with_capacity(files.len());
    let mut vectors = Vec::with_capacity(files.len());
    for (path, timeline) in files.iter().zip(&timelines) {
        ids.push(stem(path));
        vectors.push(extract_dynamic_features(timeline, &enc)?);
    }
    assemble_table(ids, vectors)
}

/// Extract the 15-feature road table from a directory of road-test files.
/// Roads flagged `is_valid: false` are skipped and counted.
pub fn extract_road_suite(
    dir: impl AsRef<Path>,
    straight_threshold_deg: f64,
) -> Result<RoadSuite> {
    let files = json_files(dir.as_ref())?;
    let mut ids = Vec::new();
    let mut vectors = Vec::new();
    let mut skipped = 0usize;
    for path in &files {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let road = parse_road(&bytes)?;
        if !road.valid {
            skipped += 1;
            continue;
        }
        ids.push(stem(path));
        vectors.push(extract_road_features(&road, straight_threshold_deg)?);
    }
    if ids.is_empty() {
        return Err(Error::Data("every road test was flagged invalid".into()));
    }
    Ok(RoadSuite {
        table: assemble_table(ids, vectors)?,
        skipped,
        straight_threshold_deg,
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
