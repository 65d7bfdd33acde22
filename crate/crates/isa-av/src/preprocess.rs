//! Normalisation, Spearman correlation and redundancy pruning.
//!
//! Features arrive on wildly different scales, so they are z-scored to zero
//! mean and unit sample standard deviation. Spearman rank correlation (with
//! fractional average-tie ranks, computed as the Pearson correlation of the
//! ranks) drives both redundancy pruning between features and the removal of
//! features with next to no association with the scenario outcome.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metadata::MetadataTable;

/// Per-feature mean and sample standard deviation (n-1 denominator) used to
/// standardise a table; stored so later projections can reuse the same fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl NormalizationParams {
    /// Standardise one raw feature vector with the stored parameters.
    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: raw.len(),
            });
        }
        Ok(raw
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}

/// Outcome of z-scoring: the standardised table, the fit parameters, and
/// the names of zero-variance columns that had to be dropped.
#[derive(Debug)]
pub struct ZscoreResult {
    pub table: MetadataTable,
    pub params: NormalizationParams,
    pub dropped_zero_variance: Vec<String>,
}

/// Spearman correlations among features (`rho`, p x p) and between each
/// feature and the outcome (`rho_y`). Degenerate columns (zero rank
/// variance) are flagged and correlate as 0.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub feature_names: Vec<String>,
    pub rho: Vec<f64>,
    pub rho_y: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn n(&self) -> usize {
        self.feature_names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.n() + j]
    }
}

/// Everything removed during pruning, for the human/machine-readable report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PruneReport {
    pub zero_variance: Vec<String>,
    /// (kept, dropped, rho) per redundant pair acted on.
    pub redundant: Vec<(String, String, f64)>,
    /// (dropped, rho_y) per weakly associated feature.
    pub weak: Vec<(String, f64)>,
    pub imputed_cells: usize,
}

impl PruneReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "prune report: {} imputed cells\n",
            self.imputed_cells
        ));
        for name in &self.zero_variance {
            out.push_str(&format!("dropped {name}: zero variance\n"));
        }
        for (kept, dropped, rho) in &self.redundant {
            out.push_str(&format!(
                "dropped {dropped}: redundant with {kept} (rho={rho:.4})\n"
            ));
        }
        for (name, rho_y) in &self.weak {
            out.push_str(&format!(
                "dropped {name}: weak outcome correlation (rho_y={rho_y:.4})\n"
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("action,feature,partner,rho\n");
        for name in &self.zero_variance {
            out.push_str(&format!("zero_variance,{name},,\n"));
        }
        for (kept, dropped, rho) in &self.redundant {
            out.push_str(&format!("redundant,{dropped},{kept},{rho}\n"));
        }
        for (name, rho_y) in &self.weak {
            out.push_str(&format!("weak,{name},outcome,{rho_y}\n"));
        }
        out
    }
}

/// Replace every missing cell by its column median over non-missing cells.
/// The mask is retained so reports can still count imputations.
pub fn impute_missing(table: &MetadataTable) -> Result<MetadataTable> {
    if !table.missing().any() {
        return Ok(table.clone());
    }
    let rows = table.n_instances();
    let cols = table.n_features();
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        values.extend_from_slice(table.row(r));
    }
    for c in 0..cols {
        let mut present: Vec<f64> = (0..rows)
            .filter(|&r| !table.missing().get(r, c))
            .map(|r| table.value(r, c))
            .collect();
        if present.is_empty() {
            return Err(Error::AllMissing(table.feature_names()[c].clone()));
        }
        present.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = present.len();
        let med = if n % 2 == 1 {
            present[n / 2]
        } else {
            (present[n / 2 - 1] + present[n / 2]) / 2.0
        };
        for r in 0..rows {
            if table.missing().get(r, c) {
                values[r * cols + c] = med;
            }
        }
    }
    table.with_values(values)
}

fn column_mean_std(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    if col.len() < 2 {
        return (mean, 0.0);
    }
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Standardise every column to mean 0, sample std 1. Zero-variance columns
/// cannot be standardised and are dropped instead of failing.
pub fn zscore(table: &MetadataTable) -> Result<ZscoreResult> {
    let cols = table.n_features();
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for c in 0..cols {
        let col = table.column(c);
        let (mean, std) = column_mean_std(&col);
        if std <= 0.0 {
            dropped.push(table.feature_names()[c].clone());
        } else {
            keep.push(c);
            means.push(mean);
            stds.push(std);
        }
    }
    if keep.is_empty() {
        return Err(Error::NothingLeft);
    }
    let kept = table.select_columns(&keep)?;
    let rows = kept.n_instances();
    let mut values = Vec::with_capacity(rows * keep.len());
    for r in 0..rows {
        for (j, v) in kept.row(r).iter().enumerate() {
            values.push((v - means[j]) / stds[j]);
        }
    }
    let names = kept.feature_names().to_vec();
    Ok(ZscoreResult {
        table: kept.with_values(values)?,
        params: NormalizationParams {
            feature_names: names,
            means,
            stds,
        },
        dropped_zero_variance: dropped,
    })
}

/// Fractional (average-tie) ranks of a vector, 1-based.
pub fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // Tied block [i, j): average rank.
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with a degeneracy flag: a vector with zero
/// rank variance yields (0, true).
pub fn spearman_flagged(x: &[f64], y: &[f64]) -> (f64, bool) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let rx = fractional_ranks(x);
    let ry = fractional_ranks(y);
    match pearson(&rx, &ry) {
        Some(rho) => (rho, false),
        None => (0.0, true),
    }
}

/// Spearman rank correlation; degenerate inputs correlate as 0.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    spearman_flagged(x, y).0
}

/// Pairwise feature correlations plus feature-outcome correlations.
pub fn correlation_matrix(table: &MetadataTable) -> CorrelationMatrix {
    let p = table.n_features();
    let ranks: Vec<Vec<f64>> = (0..p)
        .map(|c| fractional_ranks(&table.column(c)))
        .collect();
    let y_ranks = fractional_ranks(&table.outcome_vector());
    let mut rho = vec![0.0; p * p];
    let mut degenerate = vec![false; p];
    for i in 0..p {
        rho[i * p + i] = 1.0;
        for j in (i + 1)..p {
            let r = pearson(&ranks[i], &ranks[j]).unwrap_or(0.0);
            rho[i * p + j] = r;
            rho[j * p + i] = r;
        }
        if pearson(&ranks[i], &ranks[i]).is_none() {
            degenerate[i] = true;
        }
    }
    let rho_y: Vec<f64> = (0..p)
        .map(|i| pearson(&ranks[i], &y_ranks).unwrap_or(0.0))
        .collect();
    CorrelationMatrix {
        feature_names: table.feature_names().to_vec(),
        rho,
        rho_y,
        degenerate,
    }
}

/// Drop redundant and outcome-irrelevant features.
///
/// Pairs are visited by descending |rho|; whenever |rho_ij| >= theta_redundant
/// and both members are still alive, the member with the smaller |rho_y| is
/// dropped (tie: larger column index). Remaining features with
/// |rho_y| < theta_weak are then dropped as weak.
pub fn prune_features(
    table: &MetadataTable,
    corr: &CorrelationMatrix,
    theta_redundant: f64,
    theta_weak: f64,
) -> Result<(MetadataTable, PruneReport)> {
    let p = corr.n();
    assert_eq!(p, table.n_features());
    let mut pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|&(a, b), &(c, d)| {
        corr.get(c, d)
            .abs()
            .partial_cmp(&corr.get(a, b).abs())
            .unwrap()
            .then(a.cmp(&c))
            .then(b.cmp(&d))
    });

    let mut alive = vec![true; p];
    let mut report = PruneReport {
        imputed_cells: table.missing().count(),
        ..Default::default()
    };
    for (i, j) in pairs {
        if !(alive[i] && alive[j]) {
            continue;
        }
        let rho = corr.get(i, j);
        if rho.abs() < theta_redundant {
            break;
        }
        let (keep, drop) = {
            let (yi, yj) = (corr.rho_y[i].abs(), corr.rho_y[j].abs());
            if yi > yj {
                (i, j)
            } else if yj > yi {
                (j, i)
            } else {
                (i, j) // tie: drop the larger column index
            }
        };
        alive[drop] = false;
        report.redundant.push((
            corr.feature_names[keep].clone(),
            corr.feature_names[drop].clone(),
            rho,
        ));
    }
    for i in 0..p {
        if alive[i] && corr.rho_y[i].abs() < theta_weak {
            alive[i] = false;
            report
                .weak
                .push((corr.feature_names[i].clone(), corr.rho_y[i]));
        }
    }
    let keep: Vec<usize> = (0..p).filter(|&i| alive[i]).collect();
    if keep.is_empty() {
        return Err(Error::NothingLeft);
    }
    Ok((table.select_columns(&keep)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::{MissingMask, Outcome};
    use proptest::prelude::*;

    fn table(names: &[&str], rows: &[&[f64]], outcomes: &[Outcome]) -> MetadataTable {
        let values: Vec<f64> = rows.iter().flat_map(|r| r.iter().cloned()).collect();
        MetadataTable::new(
            (0..rows.len()).map(|i| format!("s{i}")).collect(),
            names.iter().map(|s| s.to_string()).collect(),
            values,
            outcomes.to_vec(),
            MissingMask::new(rows.len(), names.len()),
        )
        .unwrap()
    }

    #[test]
    fn impute_median_of_two() {
        let mut mask = MissingMask::new(3, 1);
        mask.set(1, 0, true);
        let t = MetadataTable::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["x".into()],
            vec![1.0, f64::NAN, 3.0],
            vec![Outcome::Safe, Outcome::Safe, Outcome::Unsafe],
            mask,
        )
        .unwrap();
        let imputed = impute_missing(&t).unwrap();
        assert_eq!(imputed.column(0), vec![1.0, 2.0, 3.0]);
        assert!(imputed.missing().get(1, 0), "mask retained");
    }

    #[test]
    fn impute_without_missing_is_identity() {
        let t = table(
            &["x"],
            &[&[1.0], &[2.0]],
            &[Outcome::Safe, Outcome::Unsafe],
        );
        assert_eq!(impute_missing(&t).unwrap(), t);
    }

    #[test]
    fn impute_all_missing_errors() {
        let mut mask = MissingMask::new(2, 1);
        mask.set(0, 0, true);
        mask.set(1, 0, true);
        let t = MetadataTable::new(
            vec!["a".into(), "b".into()],
            vec!["x".into()],
            vec![f64::NAN, f64::NAN],
            vec![Outcome::Safe, Outcome::Unsafe],
            mask,
        )
        .unwrap();
        assert!(matches!(impute_missing(&t), Err(Error::AllMissing(_))));
    }

    #[test]
    fn zscore_hand_example() {
        let t = table(
            &["x"],
            &[&[1.0], &[2.0], &[3.0]],
            &[Outcome::Safe, Outcome::Safe, Outcome::Unsafe],
        );
        let z = zscore(&t).unwrap();
        let col = z.table.column(0);
        // mean 2, sample std 1
        assert!((col[0] + 1.0).abs() < 1e-9);
        assert!(col[1].abs() < 1e-9);
        assert!((col[2] - 1.0).abs() < 1e-9);
        assert_eq!(z.params.means, vec![2.0]);
        assert!((z.params.stds[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zscore_drops_constant_column() {
        let t = table(
            &["c", "x"],
            &[&[5.0, 1.0], &[5.0, 2.0], &[5.0, 4.0]],
            &[Outcome::Safe, Outcome::Safe, Outcome::Unsafe],
        );
        let z = zscore(&t).unwrap();
        assert_eq!(z.dropped_zero_variance, vec!["c".to_string()]);
        assert_eq!(z.table.feature_names(), &["x"]);
    }

    #[test]
    fn zscore_is_idempotent() {
        let t = table(
            &["x", "y"],
            &[&[1.0, 10.0], &[4.0, -3.0], &[2.0, 7.0], &[8.0, 0.5]],
            &[Outcome::Safe, Outcome::Safe, Outcome::Unsafe, Outcome::Unsafe],
        );
        let once = zscore(&t).unwrap();
        let twice = zscore(&once.table).unwrap();
        for c in 0..2 {
            for (a, b) in once.table.column(c).iter().zip(twice.table.column(c)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spearman_known_values() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]) + 1.0).abs() < 1e-12);
        // 1 - 6*2/(4*15) = 0.8
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn spearman_degenerate_flag() {
        let (rho, degenerate) = spearman_flagged(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]);
        assert_eq!(rho, 0.0);
        assert!(degenerate);
    }

    #[test]
    fn prune_identical_columns() {
        let t = table(
            &["a", "b"],
            &[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0], &[4.0, 4.0]],
            &[Outcome::Safe, Outcome::Safe, Outcome::Unsafe, Outcome::Unsafe],
        );
        let corr = correlation_matrix(&t);
        let (pruned, report) = prune_features(&t, &corr, 0.95, 0.0).unwrap();
        assert_eq!(pruned.n_features(), 1);
        assert_eq!(report.redundant.len(), 1);
    }

    #[test]
    fn prune_weak_feature() {
        // y follows column a exactly; column b is unrelated.
        let t = table(
            &["a", "b"],
            &[
                &[0.0, 5.0],
                &[0.0, -2.0],
                &[1.0, 5.5],
                &[1.0, -2.2],
                &[0.0, 1.0],
                &[1.0, 0.9],
            ],
            &[
                Outcome::Safe,
                Outcome::Safe,
                Outcome::Unsafe,
                Outcome::Unsafe,
                Outcome::Safe,
                Outcome::Unsafe,
            ],
        );
        let corr = correlation_matrix(&t);
        assert!(corr.rho_y[1].abs() < 0.1);
        let (pruned, report) = prune_features(&t, &corr, 0.95, 0.1).unwrap();
        assert_eq!(pruned.feature_names(), &["a"]);
        assert_eq!(report.weak.len(), 1);
    }

    #[test]
    fn prune_hand_example_four_features() {
        // rho_12 high, feature 4 weak; constructed via synthetic rho inputs.
        let names = vec!["f1".into(), "f2".into(), "f3".into(), "f4".into()];
        let mut rho = vec![0.0; 16];
        for i in 0..4 {
            rho[i * 4 + i] = 1.0;
        }
        rho[1] = 0.97;
        rho[4] = 0.97;
        let corr = CorrelationMatrix {
            feature_names: names,
            rho,
            rho_y: vec![0.5, 0.3, 0.2, 0.05],
            degenerate: vec![false; 4],
        };
        let t = table(
            &["f1", "f2", "f3", "f4"],
            &[&[1.0, 1.0, 1.0, 1.0], &[2.0, 2.0, 2.0, 2.0]],
            &[Outcome::Safe, Outcome::Unsafe],
        );
        let (pruned, report) = prune_features(&t, &corr, 0.95, 0.1).unwrap();
        assert_eq!(pruned.feature_names(), &["f1", "f3"]);
        assert_eq!(report.redundant[0].1, "f2");
        assert_eq!(report.weak[0].0, "f4");
    }

    proptest! {
        #[test]
        fn spearman_is_symmetric(
            xs in proptest::collection::vec(-100.0f64..100.0, 3..30),
            ys in proptest::collection::vec(-100.0f64..100.0, 3..30),
        ) {
            let n = xs.len().min(ys.len());
            let (x, y) = (&xs[..n], &ys[..n]);
            let a = spearman(x, y);
            let b = spearman(y, x);
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn spearman_invariant_under_monotone_transform(
            xs in proptest::collection::vec(-50.0f64..50.0, 4..25),
            ys in proptest::collection::vec(-50.0f64..50.0, 4..25),
        ) {
            let n = xs.len().min(ys.len());
            let (x, y) = (&xs[..n], &ys[..n]);
            let x3: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let a = spearman(x, y);
            let b = spearman(&x3, y);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn correlation_matrix_instance_order_invariant() {
        let t = table(
            &["x", "y"],
            &[&[1.0, 9.0], &[3.0, 2.0], &[2.0, 5.0], &[4.0, 1.0]],
            &[Outcome::Safe, Outcome::Unsafe, Outcome::Safe, Outcome::Unsafe],
        );
        let permuted = t.select_rows(&[2, 0, 3, 1]).unwrap();
        let a = correlation_matrix(&t);
        let b = correlation_matrix(&permuted);
        for (x, y) in a.rho.iter().zip(&b.rho) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.rho_y.iter().zip(&b.rho_y) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
