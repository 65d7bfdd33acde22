//! K-nearest-neighbour classifier (Euclidean distance).

use serde::{Deserialize, Serialize};

use crate::metadata::Outcome;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<Outcome>,
}

pub const DEFAULT_K: usize = 5;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Knn {
    pub fn fit(x: &[Vec<f64>], y: &[Outcome], k: usize) -> Knn {
        Knn {
            k: k.min(x.len()),
            points: x.to_vec(),
            labels: y.to_vec(),
        }
    }

    /// Majority vote over the k nearest training points. Vote ties break to
    /// the class with the smaller mean neighbour distance, then to Safe.
    /// Distance ties between training points break by index.
    pub fn predict_one(&self, row: &[f64]) -> Outcome {
        let mut order: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (sq_dist(row, p), i))
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let neighbors = &order[..self.k];

        let mut count = [0usize; 2];
        let mut dist_sum = [0.0f64; 2];
        for &(d2, i) in neighbors {
            let c = match self.labels[i] {
                Outcome::Safe => 0,
                Outcome::Unsafe => 1,
            };
            count[c] += 1;
            dist_sum[c] += d2.sqrt();
        }
        if count[1] > count[0] {
            Outcome::Unsafe
        } else if count[0] > count[1] {
            Outcome::Safe
        } else {
            let mean_safe = dist_sum[0] / count[0] as f64;
            let mean_unsafe = dist_sum[1] / count[1] as f64;
            if mean_unsafe < mean_safe {
                Outcome::Unsafe
            } else {
                Outcome::Safe
            }
        }
    }
}
