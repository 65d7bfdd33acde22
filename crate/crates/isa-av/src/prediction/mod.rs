//! Outcome prediction: five classifiers, evaluation metrics, and the
//! selected-vs-random feature comparison with Wilcoxon significance.

pub mod knn;
pub mod mlp;
pub mod naive_bayes;
pub mod tree;
pub mod wilcoxon;

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metadata::{MetadataTable, Outcome};
use crate::preprocess::NormalizationParams;
use crate::rng;

pub use knn::Knn;
pub use mlp::Mlp;
pub use naive_bayes::GaussianNb;
pub use tree::{DecisionTree, ForestParams, RandomForest, SplitFeatures};
pub use wilcoxon::wilcoxon_signed_rank;

/// The five classifier families from the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    RandomForest,
    DecisionTree,
    Knn,
    Mlp,
    NaiveBayes,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::RandomForest,
        ClassifierKind::DecisionTree,
        ClassifierKind::Knn,
        ClassifierKind::Mlp,
        ClassifierKind::NaiveBayes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::NaiveBayes => "naive_bayes",
        }
    }

    pub fn parse(s: &str) -> Result<ClassifierKind> {
        match s {
            "random_forest" | "rf" => Ok(ClassifierKind::RandomForest),
            "decision_tree" | "dt" => Ok(ClassifierKind::DecisionTree),
            "knn" => Ok(ClassifierKind::Knn),
            "mlp" => Ok(ClassifierKind::Mlp),
            "naive_bayes" | "nb" => Ok(ClassifierKind::NaiveBayes),
            other => Err(Error::Usage(format!("unknown classifier kind `{other}`"))),
        }
    }
}

/// A classifier choice plus everything needed to train it reproducibly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub seed: u64,
    pub forest: ForestParams,
    pub knn_k: usize,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> ClassifierSpec {
        ClassifierSpec {
            kind,
            seed,
            forest: ForestParams::default(),
            knn_k: knn::DEFAULT_K,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ModelParams {
    Forest(RandomForest),
    Tree(DecisionTree),
    Knn(Knn),
    Mlp(Mlp),
    NaiveBayes(GaussianNb),
}

/// A fitted classifier together with the feature columns it expects and the
/// normalization that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub params: ModelParams,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub normalization: Option<NormalizationParams>,
}

fn check_finite(x: &[Vec<f64>]) -> Result<()> {
    for row in x {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
    }
    Ok(())
}

/// Train a classifier of the requested kind. Deterministic given the spec's
/// seed; errors if the labels contain a single class only.
pub fn train(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[Outcome]) -> Result<TrainedModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    check_finite(x)?;
    let unsafe_count = y.iter().filter(|&&o| o == Outcome::Unsafe).count();
    if unsafe_count == 0 || unsafe_count == y.len() {
        return Err(Error::OneClass);
    }
    let params = match spec.kind {
        ClassifierKind::RandomForest => {
            ModelParams::Forest(RandomForest::fit(x, y, spec.forest, spec.seed))
        }
        ClassifierKind::DecisionTree => {
            let mut rng_ = rng::stream(spec.seed, &[rng::tag("tree")]);
            ModelParams::Tree(DecisionTree::fit(x, y, SplitFeatures::All, &mut rng_))
        }
        ClassifierKind::Knn => ModelParams::Knn(Knn::fit(x, y, spec.knn_k)),
        ClassifierKind::Mlp => ModelParams::Mlp(Mlp::fit(x, y, spec.seed)),
        ClassifierKind::NaiveBayes => ModelParams::NaiveBayes(GaussianNb::fit(x, y)),
    };
    Ok(TrainedModel {
        kind: spec.kind,
        params,
        n_features: x[0].len(),
        feature_names: Vec::new(),
        normalization: None,
    })
}

impl TrainedModel {
    pub fn with_features(
        mut self,
        names: Vec<String>,
        normalization: Option<NormalizationParams>,
    ) -> TrainedModel {
        self.feature_names = names;
        self.normalization = normalization;
        self
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrainedModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One label per input row.
pub fn predict(model: &TrainedModel, x: &[Vec<f64>]) -> Result<Vec<Outcome>> {
    check_finite(x)?;
    for row in x {
        if row.len() != model.n_features {
            return Err(Error::DimensionMismatch {
                expected: model.n_features,
                got: row.len(),
            });
        }
    }
    Ok(x.iter()
        .map(|row| match &model.params {
            ModelParams::Forest(m) => m.predict_one(row),
            ModelParams::Tree(m) => m.predict_one(row),
            ModelParams::Knn(m) => m.predict_one(row),
            ModelParams::Mlp(m) => m.predict_one(row),
            ModelParams::NaiveBayes(m) => m.predict_one(row),
        })
        .collect())
}

/// Confusion counts and P/R/F1 with Unsafe as the positive class, plus
/// macro-averaged variants. Zero-denominator metrics are 0 and flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64, bool, bool) {
    let (p, p_undef) = if tp + fp == 0 {
        (0.0, true)
    } else {
        (tp as f64 / (tp + fp) as f64, false)
    };
    let (r, r_undef) = if tp + fn_ == 0 {
        (0.0, true)
    } else {
        (tp as f64 / (tp + fn_) as f64, false)
    };
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f1, p_undef, r_undef)
}

pub fn evaluate(pred: &[Outcome], truth: &[Outcome]) -> EvalReport {
    assert_eq!(pred.len(), truth.len());
    assert!(!pred.is_empty());
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fn_ = 0;
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (Outcome::Unsafe, Outcome::Unsafe) => tp += 1,
            (Outcome::Unsafe, Outcome::Safe) => fp += 1,
            (Outcome::Safe, Outcome::Safe) => tn += 1,
            (Outcome::Safe, Outcome::Unsafe) => fn_ += 1,
        }
    }
    let (precision, recall, f1, p_undef, r_undef) = prf(tp, fp, fn_);
    // Safe as positive class for the other half of the macro average.
    let (ps, rs, f1s, _, _) = prf(tn, fn_, fp);
    EvalReport {
        true_pos: tp,
        false_pos: fp,
        true_neg: tn,
        false_neg: fn_,
        precision,
        recall,
        f1,
        precision_undefined: p_undef,
        recall_undefined: r_undef,
        macro_precision: (precision + ps) / 2.0,
        macro_recall: (recall + rs) / 2.0,
        macro_f1: (f1 + f1s) / 2.0,
    }
}

/// Stratified seeded split; class proportions preserved within one instance.
pub fn split_train_test(
    table: &MetadataTable,
    fraction: f64,
    seed: u64,
) -> Result<(MetadataTable, MetadataTable)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Usage(format!(
            "train fraction must be in (0,1), got {fraction}"
        )));
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class_id, class) in [Outcome::Safe, Outcome::Unsafe].iter().enumerate() {
        let members: Vec<usize> = table
            .outcomes()
            .iter()
            .enumerate()
            .filter(|(_, o)| *o == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 2 {
            return Err(Error::ClassTooSmall(class.as_str().to_string()));
        }
        let mut shuffled = members.clone();
        let mut rng_ = rng::stream(seed, &[rng::tag("split"), class_id as u64]);
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut rng_);
        let n_train = ((fraction * members.len() as f64).round() as usize)
            .clamp(1, members.len() - 1);
        train_idx.extend_from_slice(&shuffled[..n_train]);
        test_idx.extend_from_slice(&shuffled[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((table.select_rows(&train_idx)?, table.select_rows(&test_idx)?))
}

fn rows_of(table: &MetadataTable) -> Vec<Vec<f64>> {
    (0..table.n_instances()).map(|r| table.row(r).to_vec()).collect()
}

/// One repetition of one classifier kind: the selected-feature model versus
/// the random-feature baseline on the same split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub kind: ClassifierKind,
    pub repetition: usize,
    pub random_features: Vec<String>,
    pub selected: EvalReport,
    pub random: EvalReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonStat {
    pub kind: ClassifierKind,
    pub p_precision: f64,
    pub p_recall: f64,
    pub p_f1: f64,
    pub significant_precision: bool,
    pub significant_recall: bool,
    pub significant_f1: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub repetitions: usize,
    pub selected_features: Vec<String>,
    pub rows: Vec<ComparisonRow>,
    pub stats: Vec<ComparisonStat>,
}

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;
pub const DEFAULT_REPETITIONS: usize = 10;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "kind,repetition,arm,precision,recall,f1,macro_precision,macro_recall,macro_f1\n",
        );
        for row in &self.rows {
            for (arm, report) in [("selected", &row.selected), ("random", &row.random)] {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    row.kind.as_str(),
                    row.repetition,
                    arm,
                    report.precision,
                    report.recall,
                    report.f1,
                    report.macro_precision,
                    report.macro_recall,
                    report.macro_f1,
                ));
            }
        }
        out.push_str("kind,p_precision,p_recall,p_f1,significant_f1\n");
        for s in &self.stats {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.kind.as_str(),
                s.p_precision,
                s.p_recall,
                s.p_f1,
                s.significant_f1
            ));
        }
        out
    }
}

/// Train every classifier kind on the selected features and on an equally
/// sized random subset of the pool, over `repetitions` seeded splits, and
/// test selected-vs-random differences with the Wilcoxon signed-rank test.
///
/// The pool is the full feature set of `table` (expected post-pruning).
pub fn compare_selected_vs_random(
    table: &MetadataTable,
    selected: &[String],
    repetitions: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    if repetitions < 5 {
        return Err(Error::Usage(format!(
            "need at least 5 repetitions, got {repetitions}"
        )));
    }
    let pool = table.feature_names();
    if selected.is_empty() || selected.len() > pool.len() {
        return Err(Error::PoolTooSmall {
            pool: pool.len(),
            want: selected.len(),
        });
    }
    let selected_cols: Vec<usize> = selected
        .iter()
        .map(|name| {
            table
                .column_index(name)
                .ok_or_else(|| Error::UnknownFeature(name.clone()))
        })
        .collect::<Result<_>>()?;

    // Per-repetition inputs are precomputed so every parallel task owns a
    // fully derived seed and the merge order is fixed by (kind, repetition).
    let mut tasks = Vec::new();
    for rep in 0..repetitions {
        let split_seed = rng::derive_seed(seed, &[rng::tag("comparison-split"), rep as u64]);
        let (train_table, test_table) = split_train_test(table, DEFAULT_TRAIN_FRACTION, split_seed)?;

        // Uniform subset of the pool with the selected cardinality.
        let mut rng_ = rng::stream(seed, &[rng::tag("comparison-random-features"), rep as u64]);
        let mut pool_idx: Vec<usize> = (0..pool.len()).collect();
        for i in 0..selected_cols.len() {
            let j = rng_.gen_range(i..pool_idx.len());
            pool_idx.swap(i, j);
        }
        let mut random_cols = pool_idx[..selected_cols.len()].to_vec();
        random_cols.sort_unstable();

        for kind in ClassifierKind::ALL {
            tasks.push((rep, kind, train_table.clone(), test_table.clone(), random_cols.clone()));
        }
    }

    let mut rows: Vec<ComparisonRow> = tasks
        .into_par_iter()
        .map(|(rep, kind, train_table, test_table, random_cols)| {
            let truth = test_table.outcomes().to_vec();
            let arm = |cols: &[usize], arm_tag: &str| -> Result<EvalReport> {
                let tr = train_table.select_columns(cols)?;
                let te = test_table.select_columns(cols)?;
                let model_seed = rng::derive_seed(
                    seed,
                    &[rng::tag("comparison-train"), rng::tag(arm_tag), rng::tag(kind.as_str()), rep as u64],
                );
                let model = train(&ClassifierSpec::new(kind, model_seed), &rows_of(&tr), tr.outcomes())?;
                let pred = predict(&model, &rows_of(&te))?;
                Ok(evaluate(&pred, &truth))
            };
            let selected_report = arm(&selected_cols, "selected")?;
            let random_report = arm(&random_cols, "random")?;
            Ok(ComparisonRow {
                kind,
                repetition: rep,
                random_features: random_cols.iter().map(|&c| pool[c].clone()).collect(),
                selected: selected_report,
                random: random_report,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|row| {
        (
            ClassifierKind::ALL.iter().position(|k| *k == row.kind).unwrap(),
            row.repetition,
        )
    });

    let stats = ClassifierKind::ALL
        .iter()
        .map(|&kind| {
            let kind_rows: Vec<&ComparisonRow> = rows.iter().filter(|r| r.kind == kind).collect();
            let paired = |f: fn(&EvalReport) -> f64| -> f64 {
                let a: Vec<f64> = kind_rows.iter().map(|r| f(&r.selected)).collect();
                let b: Vec<f64> = kind_rows.iter().map(|r| f(&r.random)).collect();
                wilcoxon_signed_rank(&a, &b)
            };
            let p_precision = paired(|e| e.precision);
            let p_recall = paired(|e| e.recall);
            let p_f1 = paired(|e| e.f1);
            ComparisonStat {
                kind,
                p_precision,
                p_recall,
                p_f1,
                significant_precision: p_precision <= SIGNIFICANCE_LEVEL,
                significant_recall: p_recall <= SIGNIFICANCE_LEVEL,
                significant_f1: p_f1 <= SIGNIFICANCE_LEVEL,
            }
        })
        .collect();

    Ok(ComparisonReport {
        repetitions,
        selected_features: selected.to_vec(),
        rows,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::MissingMask;

    fn balanced_table(n: usize, d: usize) -> MetadataTable {
        let mut values = Vec::new();
        let mut outcomes = Vec::new();
        let mut ids = Vec::new();
        for i in 0..n {
            let label = if i % 2 == 0 { Outcome::Safe } else { Outcome::Unsafe };
            let offset = label.as_f64() * 10.0;
            for j in 0..d {
                let noise = ((i * 31 + j * 17) % 13) as f64 / 13.0;
                // Only feature 0 carries the class signal.
                values.push(if j == 0 { offset + noise } else { noise });
            }
            outcomes.push(label);
            ids.push(format!("s{i}"));
        }
        let names = (0..d).map(|j| format!("f{j}")).collect();
        MetadataTable::new(ids, names, values, outcomes, MissingMask::new(n, d)).unwrap()
    }

    #[test]
    fn split_is_stratified_and_seed_stable() {
        let table = balanced_table(100, 3);
        let (train, test) = split_train_test(&table, 0.8, 7).unwrap();
        assert_eq!(train.n_instances(), 80);
        assert_eq!(test.n_instances(), 20);
        let unsafe_train = train.outcomes().iter().filter(|&&o| o == Outcome::Unsafe).count();
        let unsafe_test = test.outcomes().iter().filter(|&&o| o == Outcome::Unsafe).count();
        assert_eq!(unsafe_train, 40);
        assert_eq!(unsafe_test, 10);
        let (train2, _) = split_train_test(&table, 0.8, 7).unwrap();
        assert_eq!(train.instance_ids(), train2.instance_ids());
    }

    #[test]
    fn tiny_minority_class_errors() {
        let mut values = Vec::new();
        let mut outcomes = Vec::new();
        let mut ids = Vec::new();
        for i in 0..10 {
            values.push(i as f64);
            outcomes.push(if i == 0 { Outcome::Unsafe } else { Outcome::Safe });
            ids.push(format!("s{i}"));
        }
        let table = MetadataTable::new(
            ids,
            vec!["x".into()],
            values,
            outcomes,
            MissingMask::new(10, 1),
        )
        .unwrap();
        assert!(matches!(
            split_train_test(&table, 0.8, 1),
            Err(Error::ClassTooSmall(_))
        ));
    }

    #[test]
    fn evaluate_hand_confusion_matrix() {
        use Outcome::{Safe, Unsafe};
        let truth = [Unsafe, Unsafe, Safe, Safe];
        let all_unsafe = [Unsafe, Unsafe, Unsafe, Unsafe];
        let report = evaluate(&all_unsafe, &truth);
        assert_eq!(report.precision, 0.5);
        assert_eq!(report.recall, 1.0);
        assert!((report.f1 - 2.0 / 3.0).abs() < 1e-12);

        let perfect = evaluate(&truth, &truth);
        assert_eq!(perfect.precision, 1.0);
        assert_eq!(perfect.recall, 1.0);
        assert_eq!(perfect.f1, 1.0);
        assert_eq!(perfect.macro_f1, 1.0);

        let all_safe = [Safe, Safe, Safe, Safe];
        let none = evaluate(&all_safe, &truth);
        assert!(none.precision_undefined);
        assert_eq!(none.precision, 0.0);
        assert_eq!(none.f1, 0.0);
    }

    #[test]
    fn one_class_training_errors() {
        let x = vec![vec![0.0]; 12];
        let y = vec![Outcome::Safe; 12];
        let spec = ClassifierSpec::new(ClassifierKind::Knn, 0);
        assert!(matches!(train(&spec, &x, &y), Err(Error::OneClass)));
    }

    #[test]
    fn every_kind_fits_separable_blobs() {
        let table = balanced_table(60, 2);
        let x = rows_of(&table);
        let y = table.outcomes();
        for kind in ClassifierKind::ALL {
            let model = train(&ClassifierSpec::new(kind, 5), &x, y).unwrap();
            let pred = predict(&model, &x).unwrap();
            let correct = pred.iter().zip(y).filter(|(a, b)| a == b).count();
            assert!(
                correct as f64 / y.len() as f64 >= 0.99,
                "{} underfits separable data",
                kind.as_str()
            );
        }
    }

    #[test]
    fn model_roundtrips_through_json() {
        let table = balanced_table(40, 2);
        let x = rows_of(&table);
        let spec = ClassifierSpec::new(ClassifierKind::NaiveBayes, 1);
        let model = train(&spec, &x, table.outcomes())
            .unwrap()
            .with_features(vec!["f0".into(), "f1".into()], None);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = TrainedModel::load(&path).unwrap();
        assert_eq!(loaded.feature_names, model.feature_names);
        assert_eq!(predict(&loaded, &x).unwrap(), predict(&model, &x).unwrap());
    }

    #[test]
    fn comparison_shape_and_signal_direction() {
        let table = balanced_table(120, 6);
        let report =
            compare_selected_vs_random(&table, &["f0".to_string()], 6, 99).unwrap();
        assert_eq!(report.rows.len(), 6 * ClassifierKind::ALL.len());
        assert_eq!(report.stats.len(), 5);
        for s in &report.stats {
            assert!(s.p_f1 > 0.0 && s.p_f1 <= 1.0);
        }
        // Same report twice: deterministic.
        let again = compare_selected_vs_random(&table, &["f0".to_string()], 6, 99).unwrap();
        assert_eq!(serde_json::to_string(&report).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn degenerate_random_arm_gives_p_one() {
        // Pool has exactly the selected feature, so random == selected.
        let table = balanced_table(60, 1);
        let report = compare_selected_vs_random(&table, &["f0".to_string()], 5, 3).unwrap();
        for row in &report.rows {
            assert_eq!(row.selected, row.random);
        }
        for s in &report.stats {
            assert_eq!(s.p_f1, 1.0);
        }
    }
}
