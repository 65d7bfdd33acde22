//! PAM-style k-medoids over an explicit dissimilarity matrix, plus the
//! silhouette score used to choose k.

use rand::Rng;

/// Square dissimilarity matrix, row-major.
#[derive(Debug, Clone)]
pub struct Dissimilarity {
    pub n: usize,
    pub d: Vec<f64>,
}

impl Dissimilarity {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Assign each point to its nearest medoid (ties to the earlier medoid).
fn assign(d: &Dissimilarity, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut labels = vec![0usize; d.n];
    let mut cost = 0.0;
    for i in 0..d.n {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, &m) in medoids.iter().enumerate() {
            let dd = d.get(i, m);
            if dd < best_d {
                best_d = dd;
                best = c;
            }
        }
        labels[i] = best;
        cost += best_d;
    }
    (labels, cost)
}

/// One PAM run from a random initial medoid set: greedy swap descent until
/// no single medoid/non-medoid exchange lowers the total cost.
fn pam_once(d: &Dissimilarity, k: usize, rng: &mut impl Rng) -> (Vec<usize>, f64) {
    let mut pool: Vec<usize> = (0..d.n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut medoids: Vec<usize> = pool[..k].to_vec();
    medoids.sort_unstable();
    let (_, mut cost) = assign(d, &medoids);
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for slot in 0..k {
            for cand in 0..d.n {
                if medoids.contains(&cand) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[slot] = cand;
                trial.sort_unstable();
                let (_, c) = assign(d, &trial);
                if c < cost - 1e-12 {
                    let better = match best {
                        None => true,
                        Some((bc, _, _)) => c < bc - 1e-12,
                    };
                    if better {
                        best = Some((c, slot, cand));
                    }
                }
            }
        }
        match best {
            None => break,
            Some((c, slot, cand)) => {
                medoids[slot] = cand;
                medoids.sort_unstable();
                cost = c;
            }
        }
    }
    (medoids, cost)
}

pub const PAM_RESTARTS: usize = 10;

/// Best-of-`PAM_RESTARTS` k-medoids clustering. Returns (medoids sorted,
/// labels by medoid order, total cost). Deterministic for a given stream.
pub fn kmedoids(d: &Dissimilarity, k: usize, rng: &mut impl Rng) -> (Vec<usize>, Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..PAM_RESTARTS {
        let (medoids, cost) = pam_once(d, k, rng);
        let keep = match &best {
            None => true,
            Some((_, bc)) => cost < bc - 1e-12,
        };
        if keep {
            best = Some((medoids, cost));
        }
    }
    let (medoids, cost) = best.unwrap();
    let (labels, _) = assign(d, &medoids);
    (medoids, labels, cost)
}

/// Mean silhouette of an assignment under the given dissimilarity.
/// Points in singleton clusters contribute 0.
pub fn silhouette(labels: &[usize], d: &Dissimilarity) -> f64 {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let sizes: Vec<usize> = (0..k)
        .map(|c| labels.iter().filter(|&&l| l == c).count())
        .collect();
    let mut total = 0.0;
    for i in 0..d.n {
        let own = labels[i];
        if sizes[own] <= 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..d.n {
            if j != i {
                sums[labels[j]] += d.get(i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let s = (b - a) / a.max(b).max(1e-300);
        total += s;
    }
    total / d.n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn from_points(points: &[f64]) -> Dissimilarity {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = (points[i] - points[j]).abs();
            }
        }
        Dissimilarity { n, d }
    }

    #[test]
    fn two_far_pairs_cluster_cleanly() {
        let d = from_points(&[0.0, 0.01, 0.99, 1.0]);
        let mut rng_ = rng::stream(1, &[rng::tag("pam-test")]);
        let (_, labels, _) = kmedoids(&d, 2, &mut rng_);
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[2], labels[3]);
        assert_ne!(labels[0], labels[2]);
        let s = silhouette(&labels, &d);
        assert!(s > 0.97, "silhouette {s}");
    }

    #[test]
    fn tight_blob_forced_into_two_scores_low() {
        let d = from_points(&[0.0, 0.001, 0.002, 0.003]);
        let mut rng_ = rng::stream(2, &[rng::tag("pam-test")]);
        let (_, labels, _) = kmedoids(&d, 2, &mut rng_);
        assert!(silhouette(&labels, &d) < 0.7);
    }

    #[test]
    fn singleton_contributes_zero() {
        // One far outlier alone; its s must be 0 by convention.
        let d = from_points(&[0.0, 0.1, 10.0]);
        let labels = vec![0, 0, 1];
        let s = silhouette(&labels, &d);
        // Only the two near points contribute: both strongly positive.
        let expected = ((10.0 - 0.1f64) / 10.0 + (9.9 - 0.1) / 9.9) / 3.0;
        assert!((s - expected).abs() < 1e-12);
    }

    #[test]
    fn seeded_rerun_is_identical() {
        let d = from_points(&[0.3, 0.1, 0.8, 0.75, 0.2, 0.9]);
        let mut a = rng::stream(7, &[rng::tag("pam-test")]);
        let mut b = rng::stream(7, &[rng::tag("pam-test")]);
        assert_eq!(kmedoids(&d, 3, &mut a), kmedoids(&d, 3, &mut b));
    }
}
