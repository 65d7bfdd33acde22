//! End-to-end orchestration: configuration, staged artifacts and the run
//! manifest.
//!
//! A run lives in one output directory. Every stage reads only artifacts
//! written by earlier stages plus the [`RunConfig`], so stages can be run
//! individually or chained by [`run_pipeline`]. All randomness flows from the
//! mandatory master seed; re-running a config reproduces every artifact
//! byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::extraction;
use crate::geometry::{self, Bounds, CoverageReport};
use crate::metadata::{load_metadata, save_metadata, MetadataTable, Outcome};
use crate::pilot::{self, InstanceSpace, ProjectionModel};
use crate::plot::{render_svg, ColorSource};
use crate::prediction::{
    self, ClassifierKind, ClassifierSpec, ComparisonReport, TrainedModel,
};
use crate::preprocess::{
    self, correlation_matrix, CorrelationMatrix, NormalizationParams, PruneReport,
};
use crate::rng;
use crate::selection::{self, SelectedFeatures};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "ISA_AV_OUT_DIR";

/// Source format of the scenario suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetKind {
    /// Directory of per-timestep JSON simulation logs.
    Timeseries,
    /// Directory of road-spine JSON documents.
    Road,
    /// A ready-made metadata CSV.
    MetadataCsv,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Timeseries => "timeseries",
            DatasetKind::Road => "road",
            DatasetKind::MetadataCsv => "metadata-csv",
        }
    }

    pub fn parse(s: &str) -> Result<DatasetKind> {
        match s {
            "timeseries" => Ok(DatasetKind::Timeseries),
            "road" => Ok(DatasetKind::Road),
            "metadata-csv" => Ok(DatasetKind::MetadataCsv),
            other => Err(Error::Usage(format!(
                "unknown dataset kind {other:?} (expected timeseries, road or metadata-csv)"
            ))),
        }
    }
}

/// Full configuration of a run. Assembled from defaults, an optional
/// key=value config file, and flag overrides (which win).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub input: PathBuf,
    pub dataset: DatasetKind,
    pub theta_redundant: f64,
    pub theta_weak: f64,
    pub theta_strong: f64,
    /// Straight/turn threshold for road segmentation, degrees.
    pub straight_angle: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub budget: usize,
    pub restarts: usize,
    pub repetitions: usize,
    pub classifier: ClassifierKind,
    pub out_dir: PathBuf,
    /// Worker threads for parallel stages; 0 leaves the default.
    pub workers: usize,
}

/// The keys accepted in config files and as flag overrides.
pub const CONFIG_KEYS: [&str; 15] = [
    "seed",
    "input",
    "dataset",
    "theta_redundant",
    "theta_weak",
    "theta_strong",
    "straight_angle",
    "k_min",
    "k_max",
    "budget",
    "restarts",
    "repetitions",
    "classifier",
    "out_dir",
    "workers",
];

/// Partially specified config while sources are being merged.
#[derive(Debug, Clone, Default)]
struct Draft {
    entries: BTreeMap<String, String>,
}

impl Draft {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Usage(format!("unknown config key {key:?}")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Usage(format!("config key {key}: cannot parse {value:?}")))
}

impl RunConfig {
    /// Merge defaults, an optional config file, and override pairs
    /// (later sources win). The seed is mandatory.
    pub fn from_sources(
        config_file: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<RunConfig> {
        let mut draft = Draft::default();
        if let Some(path) = config_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Usage(format!(
                        "{}:{}: expected key = value",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                draft.set(key.trim(), value.trim())?;
            }
        }
        for (key, value) in overrides {
            draft.set(key, value)?;
        }
        RunConfig::from_draft(&draft)
    }

    fn from_draft(draft: &Draft) -> Result<RunConfig> {
        let get = |key: &str| draft.entries.get(key).map(|s| s.as_str());
        let seed = match get("seed") {
            Some(v) => parse_num::<u64>("seed", v)?,
            None => {
                return Err(Error::Usage(
                    "a master seed is required (seed = <u64>); wall-clock seeding is not supported"
                        .into(),
                ))
            }
        };
        let out_dir = match get("out_dir") {
            Some(v) => PathBuf::from(v),
            None => match std::env::var(OUT_DIR_ENV) {
                Ok(v) if !v.is_empty() => PathBuf::from(v),
                _ => PathBuf::from("isa-run"),
            },
        };
        let config = RunConfig {
            seed,
            input: PathBuf::from(get("input").unwrap_or("")),
            dataset: match get("dataset") {
                Some(v) => DatasetKind::parse(v)?,
                None => DatasetKind::MetadataCsv,
            },
            theta_redundant: match get("theta_redundant") {
                Some(v) => parse_num("theta_redundant", v)?,
                None => 0.95,
            },
            theta_weak: match get("theta_weak") {
                Some(v) => parse_num("theta_weak", v)?,
                None => 0.10,
            },
            theta_strong: match get("theta_strong") {
                Some(v) => parse_num("theta_strong", v)?,
                None => geometry::DEFAULT_THETA_STRONG,
            },
            straight_angle: match get("straight_angle") {
                Some(v) => parse_num("straight_angle", v)?,
                None => extraction::DEFAULT_STRAIGHT_THRESHOLD_DEG,
            },
            k_min: match get("k_min") {
                Some(v) => parse_num("k_min", v)?,
                None => 2,
            },
            k_max: match get("k_max") {
                Some(v) => parse_num("k_max", v)?,
                None => selection::DEFAULT_K_MAX,
            },
            budget: match get("budget") {
                Some(v) => parse_num("budget", v)?,
                None => selection::DEFAULT_BUDGET,
            },
            restarts: match get("restarts") {
                Some(v) => parse_num("restarts", v)?,
                None => pilot::DEFAULT_RESTARTS,
            },
            repetitions: match get("repetitions") {
                Some(v) => parse_num("repetitions", v)?,
                None => prediction::DEFAULT_REPETITIONS,
            },
            classifier: match get("classifier") {
                Some(v) => ClassifierKind::parse(v)?,
                None => ClassifierKind::RandomForest,
            },
            out_dir,
            workers: match get("workers") {
                Some(v) => parse_num("workers", v)?,
                None => 0,
            },
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Usage(msg));
        if !(0.0 < self.theta_redundant && self.theta_redundant <= 1.0) {
            return bad(format!(
                "theta_redundant must lie in (0,1], got {}",
                self.theta_redundant
            ));
        }
        if !(0.0..1.0).contains(&self.theta_weak) {
            return bad(format!("theta_weak must lie in [0,1), got {}", self.theta_weak));
        }
        if !(0.0 < self.theta_strong && self.theta_strong <= 1.0) {
            return bad(format!(
                "theta_strong must lie in (0,1], got {}",
                self.theta_strong
            ));
        }
        if !(self.straight_angle > 0.0 && self.straight_angle < 180.0) {
            return bad(format!(
                "straight_angle must lie in (0,180) degrees, got {}",
                self.straight_angle
            ));
        }
        if self.k_min < 2 || self.k_min > self.k_max {
            return bad(format!(
                "k range [{},{}] must satisfy 2 <= k_min <= k_max",
                self.k_min, self.k_max
            ));
        }
        if self.budget == 0 {
            return bad("budget must be at least 1".into());
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        if self.repetitions < 5 {
            return bad(format!(
                "repetitions must be at least 5, got {}",
                self.repetitions
            ));
        }
        Ok(())
    }

    /// Canonical string form of every setting, for the manifest echo.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        map.insert("seed".into(), self.seed.to_string());
        map.insert("input".into(), self.input.display().to_string());
        map.insert("dataset".into(), self.dataset.as_str().into());
        map.insert("theta_redundant".into(), self.theta_redundant.to_string());
        map.insert("theta_weak".into(), self.theta_weak.to_string());
        map.insert("theta_strong".into(), self.theta_strong.to_string());
        map.insert("straight_angle".into(), self.straight_angle.to_string());
        map.insert("k_min".into(), self.k_min.to_string());
        map.insert("k_max".into(), self.k_max.to_string());
        map.insert("budget".into(), self.budget.to_string());
        map.insert("restarts".into(), self.restarts.to_string());
        map.insert("repetitions".into(), self.repetitions.to_string());
        map.insert("classifier".into(), self.classifier.as_str().into());
        map.insert("out_dir".into(), self.out_dir.display().to_string());
        map.insert("workers".into(), self.workers.to_string());
        map
    }

    // Artifact locations inside the run directory.
    pub fn metadata_path(&self) -> PathBuf {
        self.out_dir.join("metadata.csv")
    }
    pub fn preprocessed_path(&self) -> PathBuf {
        self.out_dir.join("preprocessed.csv")
    }
    pub fn prune_report_path(&self) -> PathBuf {
        self.out_dir.join("prune_report.csv")
    }
    pub fn normalization_path(&self) -> PathBuf {
        self.out_dir.join("normalization.json")
    }
    pub fn selection_path(&self) -> PathBuf {
        self.out_dir.join("selection.csv")
    }
    pub fn selected_path(&self) -> PathBuf {
        self.out_dir.join("selected.json")
    }
    pub fn projection_path(&self) -> PathBuf {
        self.out_dir.join("projection.json")
    }
    pub fn space_path(&self) -> PathBuf {
        self.out_dir.join("space.csv")
    }
    pub fn coverage_path(&self) -> PathBuf {
        self.out_dir.join("coverage.json")
    }
    pub fn model_path(&self) -> PathBuf {
        self.out_dir.join("model.json")
    }
    pub fn comparison_path(&self) -> PathBuf {
        self.out_dir.join("comparison.csv")
    }
    pub fn plots_dir(&self) -> PathBuf {
        self.out_dir.join("plots")
    }
    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join("manifest.json")
    }
}

/// Record of a completed pipeline run: the configuration, what each stage
/// produced, and a SHA-256 digest of every artifact. Written atomically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: BTreeMap<String, String>,
    /// (stage name, wall seconds), in execution order.
    pub stage_seconds: Vec<(String, f64)>,
    pub selected_features: Vec<String>,
    pub pilot_objective: f64,
    pub area_is: f64,
    pub area_bound: f64,
    pub coverage_percent: f64,
    /// Relative artifact path -> SHA-256 hex digest, sorted by path.
    pub digests: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        write_atomic(path.as_ref(), json.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunManifest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Write via a sibling temp file and rename, so readers never observe a
/// half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn ensure_out_dir(config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parse/compute the metadata table from the configured input and write
/// `metadata.csv`.
pub fn stage_extract(config: &RunConfig) -> Result<MetadataTable> {
    ensure_out_dir(config)?;
    let table = match config.dataset {
        DatasetKind::Timeseries => extraction::extract_timeseries_suite(&config.input)?,
        DatasetKind::Road => {
            extraction::extract_road_suite(&config.input, config.straight_angle)?.table
        }
        DatasetKind::MetadataCsv => load_metadata(&config.input)?,
    };
    save_metadata(&table, config.metadata_path())?;
    Ok(table)
}

/// Impute, z-score and prune `metadata.csv`; write the standardized pruned
/// table, the prune report and the normalization parameters.
pub fn stage_preprocess(
    config: &RunConfig,
) -> Result<(MetadataTable, NormalizationParams, PruneReport)> {
    ensure_out_dir(config)?;
    let raw = load_metadata(config.metadata_path())?;
    let imputed = preprocess::impute_missing(&raw)?;
    let scored = preprocess::zscore(&imputed)?;
    let corr = correlation_matrix(&scored.table);
    let (pruned, mut report) =
        preprocess::prune_features(&scored.table, &corr, config.theta_redundant, config.theta_weak)?;
    report.zero_variance = scored.dropped_zero_variance.clone();

    let params = restrict_normalization(&scored.params, pruned.feature_names())?;
    save_metadata(&pruned, config.preprocessed_path())?;
    write_text(&config.prune_report_path(), &report.to_csv())?;
    write_text(
        &config.normalization_path(),
        &serde_json::to_string_pretty(&params)?,
    )?;
    Ok((pruned, params, report))
}

/// Normalization parameters for a subset of features, by name.
fn restrict_normalization(
    params: &NormalizationParams,
    names: &[String],
) -> Result<NormalizationParams> {
    let mut means = Vec::with_capacity(names.len());
    let mut stds = Vec::with_capacity(names.len());
    for name in names {
        let idx = params
            .feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownFeature(name.clone()))?;
        means.push(params.means[idx]);
        stds.push(params.stds[idx]);
    }
    Ok(NormalizationParams {
        feature_names: names.to_vec(),
        means,
        stds,
    })
}

fn load_preprocessed(config: &RunConfig) -> Result<MetadataTable> {
    load_metadata(config.preprocessed_path())
}

fn load_normalization(config: &RunConfig) -> Result<NormalizationParams> {
    let path = config.normalization_path();
    let text =
        std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(serde_json::from_str(&text)?)
}

fn load_selected(config: &RunConfig) -> Result<SelectedFeatures> {
    let path = config.selected_path();
    let text =
        std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Cluster the pruned features and search the per-cluster combinations for
/// the best outcome separation; write `selection.csv` (all scored tuples,
/// best first) and `selected.json` (the winner).
pub fn stage_select(config: &RunConfig) -> Result<SelectedFeatures> {
    ensure_out_dir(config)?;
    let table = load_preprocessed(config)?;
    let corr = correlation_matrix(&table);
    let p = table.n_features();
    let k_max = config.k_max.min(p.saturating_sub(1));
    let seed = rng::derive_seed(config.seed, &[rng::tag("selection")]);
    let clustering = selection::cluster_features(&corr, (config.k_min, k_max), seed)?;
    let (selected, scores) = selection::select_features(&table, &clustering, config.budget, seed)?;
    write_text(
        &config.selection_path(),
        &SelectedFeatures::report_csv(&table, &scores),
    )?;
    write_text(
        &config.selected_path(),
        &serde_json::to_string_pretty(&selected)?,
    )?;
    Ok(selected)
}

/// The selected feature columns as a column-major (n x i) matrix for the
/// projection, plus the standardized outcome vector.
fn projection_inputs(table: &MetadataTable, names: &[String]) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let cols: Vec<usize> = names
        .iter()
        .map(|name| {
            table
                .column_index(name)
                .ok_or_else(|| Error::UnknownFeature(name.clone()))
        })
        .collect::<Result<_>>()?;
    let n = cols.len();
    let i = table.n_instances();
    let mut f = vec![0.0; n * i];
    for (k, &c) in cols.iter().enumerate() {
        for t in 0..i {
            f[k * i + t] = table.value(t, c);
        }
    }
    let y_raw = table.outcome_vector();
    let mean = y_raw.iter().sum::<f64>() / i as f64;
    let var = y_raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (i as f64 - 1.0);
    if var <= 0.0 {
        return Err(Error::OneClass);
    }
    let std = var.sqrt();
    let y: Vec<f64> = y_raw.iter().map(|v| (v - mean) / std).collect();
    Ok((f, y, n))
}

/// Fit the 2D projection on the selected features and place every instance;
/// write `projection.json` and `space.csv`.
pub fn stage_project(config: &RunConfig) -> Result<(ProjectionModel, InstanceSpace)> {
    ensure_out_dir(config)?;
    let table = load_preprocessed(config)?;
    let selected = load_selected(config)?;
    let normalization = load_normalization(config)?;
    let (f, y, n) = projection_inputs(&table, &selected.names)?;
    let seed = rng::derive_seed(config.seed, &[rng::tag("pilot")]);
    let model = pilot::fit_pilot(&f, &y, n, config.restarts, seed)?.with_features(
        selected.names.clone(),
        Some(restrict_normalization(&normalization, &selected.names)?),
    );
    let coords = pilot::project(&model, &f)?;
    let space = InstanceSpace {
        instance_ids: table.instance_ids().to_vec(),
        coords,
        outcomes: table.outcomes().to_vec(),
    };
    model.save(config.projection_path())?;
    save_space(&space, &config.space_path())?;
    Ok((model, space))
}

/// Write the instance space as `id,z1,z2,outcome`.
pub fn save_space(space: &InstanceSpace, path: &Path) -> Result<()> {
    let mut out = String::from("id,z1,z2,outcome\n");
    for (i, id) in space.instance_ids.iter().enumerate() {
        out.push_str(&format!(
            "{id},{},{},{}\n",
            space.coords[i][0],
            space.coords[i][1],
            space.outcomes[i].as_str()
        ));
    }
    write_text(path, &out)
}

pub fn load_space(path: &Path) -> Result<InstanceSpace> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let mut space = InstanceSpace {
        instance_ids: Vec::new(),
        coords: Vec::new(),
        outcomes: Vec::new(),
    };
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| Error::Data(format!("{}: bad number {:?}", path.display(), field(i))))
        };
        space.instance_ids.push(field(0));
        space.coords.push([num(1)?, num(2)?]);
        space.outcomes.push(Outcome::parse(&field(3))?);
    }
    if space.instance_ids.is_empty() {
        return Err(Error::ZeroRows);
    }
    Ok(space)
}

/// Boundary area, DBSCAN footprints and the coverage percentage; writes
/// `coverage.json`.
pub fn stage_coverage(config: &RunConfig) -> Result<CoverageReport> {
    ensure_out_dir(config)?;
    let table = load_preprocessed(config)?;
    let model = ProjectionModel::load(config.projection_path())?;
    let space = load_space(&config.space_path())?;
    let (f, _, n) = projection_inputs(&table, &model.feature_names)?;
    let bounds = Bounds::from_features(&f, n);
    let selected_table = table.select_columns(
        &model
            .feature_names
            .iter()
            .map(|name| {
                table
                    .column_index(name)
                    .ok_or_else(|| Error::UnknownFeature(name.clone()))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let corr: CorrelationMatrix = correlation_matrix(&selected_table);
    let report = geometry::compute_coverage(&space, &model, &bounds, &corr, config.theta_strong)?;
    report.save(config.coverage_path())?;
    Ok(report)
}

/// Train the configured classifier on the selected standardized features;
/// writes `model.json`.
pub fn stage_train(config: &RunConfig) -> Result<TrainedModel> {
    ensure_out_dir(config)?;
    let table = load_preprocessed(config)?;
    let selected = load_selected(config)?;
    let normalization = load_normalization(config)?;
    let cols: Vec<usize> = selected
        .names
        .iter()
        .map(|name| {
            table
                .column_index(name)
                .ok_or_else(|| Error::UnknownFeature(name.clone()))
        })
        .collect::<Result<_>>()?;
    let sub = table.select_columns(&cols)?;
    let x: Vec<Vec<f64>> = (0..sub.n_instances()).map(|r| sub.row(r).to_vec()).collect();
    let spec = ClassifierSpec::new(
        config.classifier,
        rng::derive_seed(config.seed, &[rng::tag("train")]),
    );
    let model = prediction::train(&spec, &x, sub.outcomes())?.with_features(
        selected.names.clone(),
        Some(restrict_normalization(&normalization, &selected.names)?),
    );
    model.save(config.model_path())?;
    Ok(model)
}

/// Selected-versus-random classifier comparison over seeded splits; writes
/// `comparison.csv`.
pub fn stage_compare(config: &RunConfig) -> Result<ComparisonReport> {
    ensure_out_dir(config)?;
    let table = load_preprocessed(config)?;
    let selected = load_selected(config)?;
    let seed = rng::derive_seed(config.seed, &[rng::tag("comparison")]);
    let report = prediction::compare_selected_vs_random(
        &table,
        &selected.names,
        config.repetitions,
        seed,
    )?;
    write_text(&config.comparison_path(), &report.to_csv())?;
    Ok(report)
}

/// Render the outcome plot plus one plot per selected feature under
/// `plots/`. The coverage overlay is added when `coverage.json` exists.
pub fn stage_plot(config: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_out_dir(config)?;
    let plots = config.plots_dir();
    std::fs::create_dir_all(&plots).map_err(|e| Error::io(plots.display().to_string(), e))?;
    let space = load_space(&config.space_path())?;
    let table = load_preprocessed(config)?;
    let selected = load_selected(config)?;
    let coverage = config
        .coverage_path()
        .exists()
        .then(|| CoverageReport::load(config.coverage_path()))
        .transpose()?;

    let mut written = Vec::new();
    let outcome_path = plots.join("outcome.svg");
    render_svg(&space, ColorSource::Outcome, coverage.as_ref(), &outcome_path)?;
    written.push(outcome_path);
    for name in &selected.names {
        let col = table
            .column_index(name)
            .ok_or_else(|| Error::UnknownFeature(name.clone()))?;
        let values = table.column(col);
        let path = plots.join(format!("feature_{name}.svg"));
        render_svg(
            &space,
            ColorSource::Feature { name, values: &values },
            coverage.as_ref(),
            &path,
        )?;
        written.push(path);
    }
    Ok(written)
}

/// Run every stage in order, time them, digest every artifact and write
/// `manifest.json` atomically.
pub fn run_pipeline(config: &RunConfig) -> Result<RunManifest> {
    if config.workers > 0 {
        // The global pool can only be built once per process; later runs in
        // the same process keep the first setting.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build_global();
    }
    ensure_out_dir(config)?;

    let mut stage_seconds = Vec::new();
    let mut timed = |name: &str, f: &mut dyn FnMut() -> Result<()>| -> Result<()> {
        let start = Instant::now();
        f()?;
        stage_seconds.push((name.to_string(), start.elapsed().as_secs_f64()));
        Ok(())
    };

    timed("extract", &mut || stage_extract(config).map(|_| ()))?;
    timed("preprocess", &mut || stage_preprocess(config).map(|_| ()))?;
    let mut selected_features = Vec::new();
    timed("select", &mut || {
        selected_features = stage_select(config)?.names;
        Ok(())
    })?;
    let mut pilot_objective = f64::NAN;
    timed("project", &mut || {
        pilot_objective = stage_project(config)?.0.objective;
        Ok(())
    })?;
    let (mut area_is, mut area_bound, mut coverage_percent) = (f64::NAN, f64::NAN, f64::NAN);
    timed("coverage", &mut || {
        let report = stage_coverage(config)?;
        area_is = report.area_is;
        area_bound = report.area_bound;
        coverage_percent = report.coverage_percent;
        Ok(())
    })?;
    timed("train", &mut || stage_train(config).map(|_| ()))?;
    timed("compare", &mut || stage_compare(config).map(|_| ()))?;
    timed("plot", &mut || stage_plot(config).map(|_| ()))?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.echo(),
        stage_seconds,
        selected_features,
        pilot_objective,
        area_is,
        area_bound,
        coverage_percent,
        digests: digest_dir(&config.out_dir)?,
    };
    manifest.save(config.manifest_path())?;
    Ok(manifest)
}

/// SHA-256 of every file under the run directory (except the manifest
/// itself), keyed by the path relative to it.
pub fn digest_dir(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut digests = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        let entries =
            std::fs::read_dir(&current).map_err(|e| Error::io(current.display().to_string(), e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(current.display().to_string(), e))?;
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap_or(&path)
                    .to_string_lossy()
                    .into_owned();
                if rel == "manifest.json" {
                    continue;
                }
                let bytes =
                    std::fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
                digests.insert(rel, sha256_hex(&bytes));
            }
        }
    }
    Ok(digests)
}
