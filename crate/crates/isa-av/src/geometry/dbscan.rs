//! DBSCAN with a uniform-grid neighbourhood index.

use std::collections::HashMap;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DbscanLabel {
    Noise,
    Cluster(usize),
}

/// Neighbour lookup over ε-sized grid cells: candidates are confined to the
/// 3×3 cell block around a query point.
struct Grid {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn build(points: &[[f64; 2]], eps: f64) -> Grid {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let key = ((p[0] / eps).floor() as i64, (p[1] / eps).floor() as i64);
            cells.entry(key).or_default().push(i);
        }
        Grid { cell: eps, cells }
    }

    /// Indices within ε (inclusive) of `p`, ascending.
    fn neighbors(&self, points: &[[f64; 2]], p: [f64; 2], eps: f64) -> Vec<usize> {
        let cx = (p[0] / self.cell).floor() as i64;
        let cy = (p[1] / self.cell).floor() as i64;
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = self.cells.get(&(cx + dx, cy + dy)) {
                    for &i in bucket {
                        let q = points[i];
                        let d2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                        if d2 <= eps * eps {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Standard DBSCAN. A point is core when at least `k` points (itself
/// included) lie within ε. Points are scanned in index order; border points
/// keep the first core cluster that reaches them.
pub fn dbscan(points: &[[f64; 2]], k: usize, eps: f64) -> Vec<DbscanLabel> {
    assert!(eps > 0.0 && k >= 1);
    let n = points.len();
    let grid = Grid::build(points, eps);
    let mut labels = vec![None::<DbscanLabel>; n];
    let mut cluster = 0usize;
    for start in 0..n {
        if labels[start].is_some() {
            continue;
        }
        let neigh = grid.neighbors(points, points[start], eps);
        if neigh.len() < k {
            labels[start] = Some(DbscanLabel::Noise);
            continue;
        }
        labels[start] = Some(DbscanLabel::Cluster(cluster));
        let mut queue: VecDeque<usize> = neigh.into_iter().collect();
        while let Some(q) = queue.pop_front() {
            match labels[q] {
                Some(DbscanLabel::Cluster(_)) => continue,
                // Noise becomes a border point of this cluster.
                Some(DbscanLabel::Noise) | None => {
                    let was_unvisited = labels[q].is_none();
                    labels[q] = Some(DbscanLabel::Cluster(cluster));
                    if was_unvisited {
                        let q_neigh = grid.neighbors(points, points[q], eps);
                        if q_neigh.len() >= k {
                            queue.extend(q_neigh);
                        }
                    }
                }
            }
        }
        cluster += 1;
    }
    labels.into_iter().map(Option::unwrap).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Textbook O(n²) reference without any spatial index.
    pub fn dbscan_naive(points: &[[f64; 2]], k: usize, eps: f64) -> Vec<DbscanLabel> {
        let n = points.len();
        let neigh = |i: usize| -> Vec<usize> {
            (0..n)
                .filter(|&j| {
                    let (p, q) = (points[i], points[j]);
                    (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) <= eps * eps
                })
                .collect()
        };
        let mut labels = vec![None::<DbscanLabel>; n];
        let mut cluster = 0usize;
        for start in 0..n {
            if labels[start].is_some() {
                continue;
            }
            let ns = neigh(start);
            if ns.len() < k {
                labels[start] = Some(DbscanLabel::Noise);
                continue;
            }
            labels[start] = Some(DbscanLabel::Cluster(cluster));
            let mut queue: std::collections::VecDeque<usize> = ns.into_iter().collect();
            while let Some(q) = queue.pop_front() {
                match labels[q] {
                    Some(DbscanLabel::Cluster(_)) => continue,
                    other => {
                        let was_unvisited = other.is_none();
                        labels[q] = Some(DbscanLabel::Cluster(cluster));
                        if was_unvisited {
                            let qn = neigh(q);
                            if qn.len() >= k {
                                queue.extend(qn);
                            }
                        }
                    }
                }
            }
            cluster += 1;
        }
        labels.into_iter().map(Option::unwrap).collect()
    }

    #[test]
    fn two_blobs_two_clusters() {
        let mut pts = Vec::new();
        for i in 0..5 {
            pts.push([i as f64 * 0.1, 0.0]);
        }
        for i in 0..5 {
            pts.push([10.0 + i as f64 * 0.1, 0.0]);
        }
        let labels = dbscan(&pts, 3, 1.0);
        assert!(labels.iter().all(|l| *l != DbscanLabel::Noise));
        assert_eq!(labels[0], DbscanLabel::Cluster(0));
        assert_eq!(labels[9], DbscanLabel::Cluster(1));
    }

    #[test]
    fn lone_point_is_noise() {
        let pts = [[0.0, 0.0], [0.1, 0.0], [0.2, 0.0], [50.0, 50.0]];
        let labels = dbscan(&pts, 2, 1.0);
        assert_eq!(labels[3], DbscanLabel::Noise);
    }

    #[test]
    fn grid_version_matches_naive_reference() {
        let mut rng_ = crate::rng::stream(3, &[crate::rng::tag("dbscan-test")]);
        for round in 0..100 {
            let pts: Vec<[f64; 2]> = (0..200)
                .map(|_| [rng_.gen_range(0.0..10.0), rng_.gen_range(0.0..10.0)])
                .collect();
            let eps = rng_.gen_range(0.2..1.5);
            let k = rng_.gen_range(2..8);
            assert_eq!(
                dbscan(&pts, k, eps),
                dbscan_naive(&pts, k, eps),
                "divergence in round {round} (k={k}, eps={eps})"
            );
        }
    }

    #[test]
    fn noise_set_is_permutation_invariant() {
        let mut rng_ = crate::rng::stream(8, &[crate::rng::tag("dbscan-perm")]);
        let pts: Vec<[f64; 2]> = (0..120)
            .map(|_| [rng_.gen_range(0.0..4.0), rng_.gen_range(0.0..4.0)])
            .collect();
        let labels = dbscan(&pts, 4, 0.5);
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.reverse();
        let shuffled: Vec<[f64; 2]> = perm.iter().map(|&i| pts[i]).collect();
        let labels2 = dbscan(&shuffled, 4, 0.5);
        for (new_idx, &orig_idx) in perm.iter().enumerate() {
            assert_eq!(
                labels[orig_idx] == DbscanLabel::Noise,
                labels2[new_idx] == DbscanLabel::Noise
            );
        }
    }
}
