//! Gaussian naive Bayes with variance smoothing.

use serde::{Deserialize, Serialize};

use crate::metadata::Outcome;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Per-class feature means, index 0 = Safe, 1 = Unsafe.
    pub means: [Vec<f64>; 2],
    /// Per-class feature variances, already smoothed.
    pub variances: [Vec<f64>; 2],
    pub log_priors: [f64; 2],
}

pub const VAR_SMOOTHING: f64 = 1e-9;

impl GaussianNb {
    pub fn fit(x: &[Vec<f64>], y: &[Outcome]) -> GaussianNb {
        let d = x[0].len();
        let n = x.len();

        // Smoothing floor: 1e-9 times the largest overall feature variance.
        let mut max_var = 0.0f64;
        for j in 0..d {
            let mean = x.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var = x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
            max_var = max_var.max(var);
        }
        let epsilon = VAR_SMOOTHING * max_var;

        let mut means = [vec![0.0; d], vec![0.0; d]];
        let mut variances = [vec![0.0; d], vec![0.0; d]];
        let mut counts = [0usize; 2];
        for (row, label) in x.iter().zip(y) {
            let c = *label as usize;
            counts[c] += 1;
            for j in 0..d {
                means[c][j] += row[j];
            }
        }
        for c in 0..2 {
            for j in 0..d {
                means[c][j] /= counts[c] as f64;
            }
        }
        for (row, label) in x.iter().zip(y) {
            let c = *label as usize;
            for j in 0..d {
                variances[c][j] += (row[j] - means[c][j]).powi(2);
            }
        }
        for c in 0..2 {
            for j in 0..d {
                variances[c][j] = variances[c][j] / counts[c] as f64 + epsilon;
            }
        }
        let log_priors = [
            (counts[0] as f64 / n as f64).ln(),
            (counts[1] as f64 / n as f64).ln(),
        ];
        GaussianNb {
            means,
            variances,
            log_priors,
        }
    }

    fn log_joint(&self, row: &[f64], c: usize) -> f64 {
        let mut ll = self.log_priors[c];
        for (j, &v) in row.iter().enumerate() {
            let var = self.variances[c][j];
            let diff = v - self.means[c][j];
            ll += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - diff * diff / (2.0 * var);
        }
        ll
    }

    /// Posterior threshold at 0.5; equal posteriors resolve to Safe.
    pub fn predict_one(&self, row: &[f64]) -> Outcome {
        if self.log_joint(row, 1) > self.log_joint(row, 0) {
            Outcome::Unsafe
        } else {
            Outcome::Safe
        }
    }

    pub fn posterior_unsafe(&self, row: &[f64]) -> f64 {
        let a = self.log_joint(row, 0);
        let b = self.log_joint(row, 1);
        let m = a.max(b);
        let ea = (a - m).exp();
        let eb = (b - m).exp();
        eb / (ea + eb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_gaussian_parameters() {
        // Safe: {1, 3} → mean 2, var 1. Unsafe: {10, 14} → mean 12, var 4.
        let x = vec![vec![1.0], vec![3.0], vec![10.0], vec![14.0]];
        let y = vec![
            Outcome::Safe,
            Outcome::Safe,
            Outcome::Unsafe,
            Outcome::Unsafe,
        ];
        let nb = GaussianNb::fit(&x, &y);
        assert!((nb.means[0][0] - 2.0).abs() < 1e-12);
        assert!((nb.means[1][0] - 12.0).abs() < 1e-12);
        // Overall variance of {1,3,10,14} is 27.5 → epsilon = 2.75e-8.
        let eps = 1e-9 * 27.5;
        assert!((nb.variances[0][0] - (1.0 + eps)).abs() < 1e-12);
        assert!((nb.variances[1][0] - (4.0 + eps)).abs() < 1e-12);
        assert!((nb.log_priors[0] - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn decision_boundary_of_unit_gaussians_is_midpoint() {
        // N(0,1) vs N(4,1), equal priors: equal likelihood at x = 2.
        let mut x = Vec::new();
        let mut y = Vec::new();
        // Symmetric samples reproducing mean 0/4 and variance 1 exactly.
        for &v in &[-1.0, 0.0, 0.0, 1.0] {
            x.push(vec![v]);
            y.push(Outcome::Safe);
        }
        for &v in &[3.0, 4.0, 4.0, 5.0] {
            x.push(vec![v + 0.0]);
            y.push(Outcome::Unsafe);
        }
        let nb = GaussianNb::fit(&x, &y);
        // Class variances are 0.5 here but symmetric, so the boundary stays 2.
        assert_eq!(nb.predict_one(&[1.99]), Outcome::Safe);
        assert_eq!(nb.predict_one(&[2.01]), Outcome::Unsafe);
        assert!((nb.posterior_unsafe(&[2.0]) - 0.5).abs() < 1e-9);
    }
}
