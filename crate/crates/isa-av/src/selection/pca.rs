//! Two-component principal component analysis.

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct Pca2 {
    /// m×2 loadings (eigenvectors of the covariance, descending eigenvalue).
    pub loadings: Vec<[f64; 2]>,
    /// instances × 2 projected coordinates.
    pub coords: Vec<[f64; 2]>,
    pub explained: [f64; 2],
    /// True when the data had rank < 2 and the second component is noise.
    pub rank_deficient: bool,
}

/// PCA of an instances × m matrix onto its top two components. Each loading's
/// sign is fixed so its largest-magnitude entry is positive (first such entry
/// on magnitude ties).
pub fn pca2(x: &[Vec<f64>]) -> Pca2 {
    let n = x.len();
    let m = x[0].len();
    assert!(m >= 2, "need at least two columns");

    let means: Vec<f64> = (0..m)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut cov = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let s: f64 = x
                .iter()
                .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
                .sum::<f64>()
                / denom;
            cov[(a, b)] = s;
            cov[(b, a)] = s;
        }
    }

    let total: f64 = (0..m).map(|j| cov[(j, j)]).sum();
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut loadings = vec![[0.0; 2]; m];
    let mut explained = [0.0; 2];
    for c in 0..2 {
        let col = eig.eigenvectors.column(order[c]);
        explained[c] = eig.eigenvalues[order[c]].max(0.0);
        let mut lead = 0;
        for j in 1..m {
            if col[j].abs() > col[lead].abs() {
                lead = j;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..m {
            loadings[j][c] = sign * col[j];
        }
    }

    let coords = x
        .iter()
        .map(|r| {
            let mut z = [0.0; 2];
            for c in 0..2 {
                z[c] = (0..m).map(|j| (r[j] - means[j]) * loadings[j][c]).sum();
            }
            z
        })
        .collect();

    let rank_deficient = explained[1] <= 1e-12 * total.max(1e-300);
    Pca2 {
        loadings,
        coords,
        explained,
        rank_deficient,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Classic Jacobi rotation eigensolver, kept as an independent check on
    /// the library decomposition.
    fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = a.len();
        let mut v = vec![vec![0.0; n]; n];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for _ in 0..200 {
            let mut off = 0.0;
            let (mut p, mut q) = (0, 1);
            for i in 0..n {
                for j in (i + 1)..n {
                    if a[i][j].abs() > off {
                        off = a[i][j].abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if off < 1e-14 {
                break;
            }
            let theta = 0.5 * (2.0 * a[p][q]).atan2(a[p][p] - a[q][q]);
            let (c, s) = (theta.cos(), theta.sin());
            for k in 0..n {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp + s * akq;
                a[k][q] = -s * akp + c * akq;
            }
            for k in 0..n {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk + s * aqk;
                a[q][k] = -s * apk + c * aqk;
            }
            for k in 0..n {
                let (vkp, vkq) = (v[k][p], v[k][q]);
                v[k][p] = c * vkp + s * vkq;
                v[k][q] = -s * vkp + c * vkq;
            }
        }
        let eigenvalues = (0..n).map(|i| a[i][i]).collect();
        (eigenvalues, v)
    }

    #[test]
    fn line_data_has_diagonal_first_loading() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        let p = pca2(&x);
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        assert!((p.loadings[0][0] - inv_sqrt2).abs() < 1e-12);
        assert!((p.loadings[1][0] - inv_sqrt2).abs() < 1e-12);
        assert!(p.explained[1].abs() < 1e-12);
        assert!(p.rank_deficient);
    }

    #[test]
    fn explained_variance_preserves_trace_in_2d() {
        let x: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.7;
                vec![t.sin() * 1.3, t.cos() * 0.9]
            })
            .collect();
        let p = pca2(&x);
        let n = x.len() as f64;
        let means: Vec<f64> = (0..2)
            .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let total: f64 = (0..2)
            .map(|j| {
                x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / (n - 1.0)
            })
            .sum();
        assert!((p.explained[0] + p.explained[1] - total).abs() < 1e-10);
    }

    #[test]
    fn loadings_match_jacobi_oracle() {
        let mut rng_ = crate::rng::stream(4, &[crate::rng::tag("pca-test")]);
        let x: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..4).map(|_| rng_.gen_range(-1.0..1.0)).collect())
            .collect();
        let p = pca2(&x);

        let n = x.len() as f64;
        let m = 4;
        let means: Vec<f64> = (0..m)
            .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let mut cov = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in 0..m {
                cov[a][b] = x
                    .iter()
                    .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
                    .sum::<f64>()
                    / (n - 1.0);
            }
        }
        let (vals, vecs) = jacobi_eigen(cov);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
        for c in 0..2 {
            assert!((p.explained[c] - vals[order[c]]).abs() < 1e-8);
            let col: Vec<f64> = (0..m).map(|j| vecs[j][order[c]]).collect();
            let mut lead = 0;
            for j in 1..m {
                if col[j].abs() > col[lead].abs() {
                    lead = j;
                }
            }
            let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..m {
                assert!((p.loadings[j][c] - sign * col[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn covariance_preserving_duplication_keeps_loadings() {
        let base: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64;
                vec![t.sin(), (0.5 * t).cos(), t.sin() * 0.2 + (0.3 * t).cos()]
            })
            .collect();
        // Appending each point mirrored about the mean preserves mean and
        // scales the covariance uniformly, so loadings are unchanged.
        let n = base.len() as f64;
        let means: Vec<f64> = (0..3)
            .map(|j| base.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let mut doubled = base.clone();
        for r in &base {
            doubled.push((0..3).map(|j| 2.0 * means[j] - r[j]).collect());
        }
        let p1 = pca2(&base);
        let p2 = pca2(&doubled);
        for j in 0..3 {
            for c in 0..2 {
                assert!((p1.loadings[j][c] - p2.loadings[j][c]).abs() < 1e-8);
            }
        }
    }
}
