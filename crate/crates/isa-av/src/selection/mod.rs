//! Feature selection: cluster correlated features, then search one-per-
//! cluster combinations for the subset whose 2D PCA projection predicts the
//! outcome best.

pub mod kmedoids;
pub mod pca;

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metadata::{MetadataTable, Outcome};
use crate::prediction::tree::{ForestParams, RandomForest, SplitFeatures};
use crate::preprocess::CorrelationMatrix;
use crate::rng;

pub use kmedoids::{silhouette, Dissimilarity};
pub use pca::{pca2, Pca2};

pub const DEFAULT_BUDGET: usize = 20_000;
pub const DEFAULT_K_MAX: usize = 15;
pub const CV_FOLDS: usize = 5;
/// Forest used for scoring combinations: cheap, shallow-search setting.
pub const SCORING_TREES: usize = 50;

/// A clustering of features under the dissimilarity 1 − |ρ|.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureClustering {
    pub k: usize,
    /// Cluster id per feature index.
    pub assignment: Vec<usize>,
    /// Medoid feature index per cluster id.
    pub medoids: Vec<usize>,
    /// (k, mean silhouette) for every candidate k examined.
    pub silhouettes: Vec<(usize, f64)>,
}

impl FeatureClustering {
    /// Member feature indices per cluster, ascending inside each cluster.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (f, &c) in self.assignment.iter().enumerate() {
            groups[c].push(f);
        }
        groups
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombinationScore {
    /// Feature indices, ascending; one per cluster.
    pub tuple: Vec<usize>,
    /// Mean 5-fold misclassification rate in [0,1].
    pub error: f64,
    /// PCA loadings of the tuple's columns, m×2.
    pub loadings: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectedFeatures {
    pub names: Vec<String>,
    pub winner: CombinationScore,
    pub evaluated: usize,
    /// True when the Cartesian product exceeded the budget and was sampled.
    pub sampled: bool,
}

impl SelectedFeatures {
    /// CSV of every evaluated combination: feature names (space separated)
    /// and cross-validated error, best first.
    pub fn report_csv(table: &MetadataTable, scores: &[CombinationScore]) -> String {
        let mut out = String::from("features,error\n");
        for s in scores {
            let names: Vec<&str> = s
                .tuple
                .iter()
                .map(|&f| table.feature_names()[f].as_str())
                .collect();
            out.push_str(&format!("{},{}\n", names.join(" "), s.error));
        }
        out
    }
}

/// Dissimilarity 1 − |ρ| from a correlation matrix.
fn dissimilarity(corr: &CorrelationMatrix) -> Dissimilarity {
    let n = corr.n();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[i * n + j] = 1.0 - corr.get(i, j).abs();
            }
        }
    }
    Dissimilarity { n, d }
}

/// Cluster features for every k in `k_range` (inclusive) and keep the
/// clustering with the best mean silhouette; ties go to the smallest k.
/// Cluster ids are renumbered by ascending medoid index.
pub fn cluster_features(
    corr: &CorrelationMatrix,
    k_range: (usize, usize),
    seed: u64,
) -> Result<FeatureClustering> {
    let p = corr.n();
    if p < 3 {
        return Err(Error::Usage(format!(
            "need at least 3 features to cluster, got {p}"
        )));
    }
    let (k_min, k_max) = k_range;
    if k_min < 2 || k_max >= p || k_min > k_max {
        return Err(Error::Usage(format!(
            "k range [{k_min},{k_max}] must lie within [2,{}]",
            p - 1
        )));
    }
    let d = dissimilarity(corr);
    if d.d.iter().all(|&v| v == 0.0) {
        return Err(Error::AllIdentical);
    }

    let mut best: Option<(f64, usize, Vec<usize>, Vec<usize>)> = None;
    let mut silhouettes = Vec::new();
    for k in k_min..=k_max {
        let mut rng_ = rng::stream(seed, &[rng::tag("kmedoids"), k as u64]);
        let (medoids, labels, _) = kmedoids::kmedoids(&d, k, &mut rng_);
        let s = silhouette(&labels, &d);
        silhouettes.push((k, s));
        let better = match &best {
            None => true,
            Some((bs, _, _, _)) => s > bs + 1e-12,
        };
        if better {
            best = Some((s, k, medoids, labels));
        }
    }
    let (_, k, medoids, labels) = best.unwrap();
    Ok(FeatureClustering {
        k,
        assignment: labels,
        medoids,
        silhouettes,
    })
}

/// Stratified fold ids (0..folds) in canonical instance order: instances are
/// processed sorted by id, shuffled per class with a seeded stream, and dealt
/// round-robin. Invariant under row permutations of the table.
fn stratified_folds(table: &MetadataTable, folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut canonical: Vec<usize> = (0..table.n_instances()).collect();
    canonical.sort_by(|&a, &b| table.instance_ids()[a].cmp(&table.instance_ids()[b]));
    let mut fold_of = vec![0usize; table.n_instances()];
    for (class_id, class) in [Outcome::Safe, Outcome::Unsafe].iter().enumerate() {
        let mut members: Vec<usize> = canonical
            .iter()
            .copied()
            .filter(|&i| table.outcomes()[i] == *class)
            .collect();
        if members.len() < folds {
            return Err(Error::TooFewPerClass(members.len()));
        }
        let mut rng_ = rng::stream(seed, &[rng::tag("cv-folds"), class_id as u64]);
        use rand::seq::SliceRandom;
        members.shuffle(&mut rng_);
        for (pos, &i) in members.iter().enumerate() {
            fold_of[i] = pos % folds;
        }
    }
    Ok(fold_of)
}

/// Seed for one combination, stable under tuple reordering.
fn combo_seed(master: u64, tuple: &[usize]) -> u64 {
    let mut context = vec![rng::tag("combination")];
    let mut sorted = tuple.to_vec();
    sorted.sort_unstable();
    context.extend(sorted.iter().map(|&f| f as u64));
    rng::derive_seed(master, &context)
}

/// Score one feature tuple: project its columns to 2D with PCA and measure
/// the 5-fold cross-validated misclassification rate of a small random
/// forest on those coordinates.
pub fn evaluate_combination(
    tuple: &[usize],
    table: &MetadataTable,
    master_seed: u64,
) -> Result<CombinationScore> {
    let mut sorted = tuple.to_vec();
    sorted.sort_unstable();
    let x: Vec<Vec<f64>> = (0..table.n_instances())
        .map(|r| sorted.iter().map(|&f| table.value(r, f)).collect())
        .collect();
    let (coords, loadings): (Vec<Vec<f64>>, Vec<[f64; 2]>) = if sorted.len() >= 2 {
        let p = pca2(&x);
        (p.coords.iter().map(|z| z.to_vec()).collect(), p.loadings)
    } else {
        (x.clone(), vec![[1.0, 0.0]])
    };

    let seed = combo_seed(master_seed, &sorted);
    let fold_of = stratified_folds(table, CV_FOLDS, seed)?;
    let y = table.outcomes();
    let params = ForestParams {
        n_trees: SCORING_TREES,
        bootstrap: true,
        split_features: SplitFeatures::Sqrt,
    };
    let mut error_sum = 0.0;
    for fold in 0..CV_FOLDS {
        let train_idx: Vec<usize> = (0..x.len()).filter(|&i| fold_of[i] != fold).collect();
        let test_idx: Vec<usize> = (0..x.len()).filter(|&i| fold_of[i] == fold).collect();
        let tx: Vec<Vec<f64>> = train_idx.iter().map(|&i| coords[i].clone()).collect();
        let ty: Vec<Outcome> = train_idx.iter().map(|&i| y[i]).collect();
        let forest = RandomForest::fit(
            &tx,
            &ty,
            params,
            rng::derive_seed(seed, &[rng::tag("cv-forest"), fold as u64]),
        );
        let correct = test_idx
            .iter()
            .filter(|&&i| forest.predict_one(&coords[i]) == y[i])
            .count();
        error_sum += 1.0 - correct as f64 / test_idx.len() as f64;
    }
    Ok(CombinationScore {
        tuple: sorted,
        error: error_sum / CV_FOLDS as f64,
        loadings,
    })
}

/// All combination tuples to score: the full Cartesian product when it fits
/// the budget, otherwise a uniform seeded sample without replacement.
fn combinations(clusters: &[Vec<usize>], budget: usize, seed: u64) -> (Vec<Vec<usize>>, bool) {
    let product: u128 = clusters.iter().map(|c| c.len() as u128).product();
    let decode = |mut code: u128| -> Vec<usize> {
        let mut tuple = Vec::with_capacity(clusters.len());
        for cluster in clusters {
            let idx = (code % cluster.len() as u128) as usize;
            code /= cluster.len() as u128;
            tuple.push(cluster[idx]);
        }
        tuple
    };
    if product <= budget as u128 {
        ((0..product).map(decode).collect(), false)
    } else {
        let mut rng_ = rng::stream(seed, &[rng::tag("combination-sample")]);
        let mut seen = HashSet::with_capacity(budget);
        let mut tuples = Vec::with_capacity(budget);
        while tuples.len() < budget {
            let code = rng_.gen_range(0..product);
            if seen.insert(code) {
                tuples.push(decode(code));
            }
        }
        (tuples, true)
    }
}

/// Search the one-feature-per-cluster combinations for the lowest
/// cross-validated error; ties break to the lexicographically smallest
/// sorted tuple. Also returns every score for the selection report.
pub fn select_features(
    table: &MetadataTable,
    clustering: &FeatureClustering,
    budget: usize,
    seed: u64,
) -> Result<(SelectedFeatures, Vec<CombinationScore>)> {
    assert!(budget >= 1);
    let clusters = clustering.clusters();
    let (tuples, sampled) = combinations(&clusters, budget, seed);
    let mut scores: Vec<CombinationScore> = tuples
        .par_iter()
        .map(|tuple| evaluate_combination(tuple, table, seed))
        .collect::<Result<_>>()?;
    scores.sort_by(|a, b| a.error.partial_cmp(&b.error).unwrap().then(a.tuple.cmp(&b.tuple)));
    let winner = scores[0].clone();
    let names = winner
        .tuple
        .iter()
        .map(|&f| table.feature_names()[f].clone())
        .collect();
    Ok((
        SelectedFeatures {
            names,
            winner,
            evaluated: scores.len(),
            sampled,
        },
        scores,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::MissingMask;
    use crate::preprocess::correlation_matrix;

    fn corr_from(rho: &[&[f64]], names: &[&str]) -> CorrelationMatrix {
        let n = names.len();
        let mut flat = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                flat[i * n + j] = rho[i][j];
            }
        }
        CorrelationMatrix {
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            rho: flat,
            rho_y: vec![0.5; n],
            degenerate: vec![false; n],
        }
    }

    #[test]
    fn correlated_pair_forms_its_own_cluster() {
        let corr = corr_from(
            &[
                &[1.0, 0.99, 0.0],
                &[0.99, 1.0, 0.0],
                &[0.0, 0.0, 1.0],
            ],
            &["f1", "f2", "f3"],
        );
        let clustering = cluster_features(&corr, (2, 2), 1).unwrap();
        assert_eq!(clustering.k, 2);
        assert_eq!(clustering.assignment[0], clustering.assignment[1]);
        assert_ne!(clustering.assignment[0], clustering.assignment[2]);
    }

    #[test]
    fn perfectly_correlated_features_always_co_cluster() {
        let corr = corr_from(
            &[
                &[1.0, 1.0, 0.1, 0.2],
                &[1.0, 1.0, 0.1, 0.2],
                &[0.1, 0.1, 1.0, 0.3],
                &[0.2, 0.2, 0.3, 1.0],
            ],
            &["a", "b", "c", "d"],
        );
        for seed in 0..5 {
            let clustering = cluster_features(&corr, (2, 3), seed).unwrap();
            assert_eq!(clustering.assignment[0], clustering.assignment[1]);
        }
    }

    #[test]
    fn identical_features_error() {
        let corr = corr_from(
            &[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]],
            &["a", "b", "c"],
        );
        assert!(matches!(
            cluster_features(&corr, (2, 2), 0),
            Err(Error::AllIdentical)
        ));
    }

    #[test]
    fn clustering_is_deterministic() {
        let corr = corr_from(
            &[
                &[1.0, 0.8, 0.1, 0.2, 0.05],
                &[0.8, 1.0, 0.15, 0.25, 0.1],
                &[0.1, 0.15, 1.0, 0.9, 0.2],
                &[0.2, 0.25, 0.9, 1.0, 0.1],
                &[0.05, 0.1, 0.2, 0.1, 1.0],
            ],
            &["a", "b", "c", "d", "e"],
        );
        let x = cluster_features(&corr, (2, 4), 11).unwrap();
        let y = cluster_features(&corr, (2, 4), 11).unwrap();
        assert_eq!(x.assignment, y.assignment);
        assert_eq!(x.k, y.k);
    }

    fn signal_table(n: usize, informative: &[usize], d: usize, seed: u64) -> MetadataTable {
        use rand::Rng;
        let mut rng_ = rng::stream(seed, &[rng::tag("signal-table")]);
        let mut values = Vec::new();
        let mut outcomes = Vec::new();
        let mut ids = Vec::new();
        for i in 0..n {
            let label = if rng_.gen_bool(0.5) { Outcome::Unsafe } else { Outcome::Safe };
            for j in 0..d {
                let base: f64 = rng_.gen_range(-1.0..1.0);
                let v = if informative.contains(&j) {
                    base * 0.3 + label.as_f64() * 2.0 - 1.0
                } else {
                    base
                };
                values.push(v);
            }
            outcomes.push(label);
            ids.push(format!("s{i:04}"));
        }
        let names = (0..d).map(|j| format!("f{j}")).collect();
        MetadataTable::new(ids, names, values, outcomes, MissingMask::new(n, d)).unwrap()
    }

    #[test]
    fn informative_tuple_scores_low_error() {
        let table = signal_table(200, &[0], 3, 5);
        let score = evaluate_combination(&[0, 1], &table, 42).unwrap();
        assert!(score.error <= 0.05, "error {}", score.error);
    }

    #[test]
    fn uninformative_tuple_scores_coin_flip() {
        // Labels independent of every feature.
        let table = signal_table(1000, &[], 3, 6);
        let score = evaluate_combination(&[0, 1], &table, 42).unwrap();
        assert!((score.error - 0.5).abs() <= 0.05, "error {}", score.error);
    }

    #[test]
    fn combination_error_is_deterministic_and_order_invariant() {
        let table = signal_table(100, &[0], 4, 7);
        let a = evaluate_combination(&[0, 2], &table, 9).unwrap();
        let b = evaluate_combination(&[2, 0], &table, 9).unwrap();
        assert_eq!(a.error, b.error);

        // Permuting rows must not change the error: folds follow ids.
        let mut perm: Vec<usize> = (0..table.n_instances()).collect();
        perm.reverse();
        let shuffled = table.select_rows(&perm).unwrap();
        let c = evaluate_combination(&[0, 2], &shuffled, 9).unwrap();
        assert_eq!(a.error, c.error);
    }

    #[test]
    fn tiny_class_errors_in_cv() {
        let mut values = Vec::new();
        let mut outcomes = Vec::new();
        let mut ids = Vec::new();
        for i in 0..20 {
            values.extend([i as f64, -(i as f64)]);
            outcomes.push(if i < 3 { Outcome::Unsafe } else { Outcome::Safe });
            ids.push(format!("s{i}"));
        }
        let table = MetadataTable::new(
            ids,
            vec!["a".into(), "b".into()],
            values,
            outcomes,
            MissingMask::new(20, 2),
        )
        .unwrap();
        assert!(matches!(
            evaluate_combination(&[0, 1], &table, 0),
            Err(Error::TooFewPerClass(3))
        ));
    }

    #[test]
    fn budget_sampling_contract() {
        let clusters: Vec<Vec<usize>> = (0..4).map(|c| (c * 10..c * 10 + 8).collect()).collect();
        // Product 8^4 = 4096 > budget 100 → exactly 100 distinct tuples.
        let (tuples, sampled) = combinations(&clusters, 100, 3);
        assert!(sampled);
        assert_eq!(tuples.len(), 100);
        let unique: HashSet<Vec<usize>> = tuples.iter().cloned().collect();
        assert_eq!(unique.len(), 100);
        // Budget covers the product → exhaustive, unsampled.
        let (all, sampled2) = combinations(&clusters, 5000, 3);
        assert!(!sampled2);
        assert_eq!(all.len(), 4096);
    }

    #[test]
    fn select_features_picks_the_planted_feature() {
        let table = signal_table(200, &[0], 6, 8);
        let corr = correlation_matrix(&table);
        let clustering = cluster_features(&corr, (2, 4), 21).unwrap();
        let (selected, scores) = select_features(&table, &clustering, 1000, 21).unwrap();
        assert_eq!(selected.names.len(), clustering.k);
        assert!(selected.names.contains(&"f0".to_string()));
        assert_eq!(selected.evaluated, scores.len());
        assert!(!selected.sampled);
        assert_eq!(selected.winner.error, scores[0].error);
    }
}
