//! PILOT: a linear 2D projection fitted so that both the features and the
//! outcome are maximally recoverable from the coordinates.
//!
//! The objective over the projection matrix A (2×n) is
//! ‖F − B·Z‖²_F + ‖Y − C·Z‖²_F with Z = A·F, where B (n×2) and C (1×2) are
//! the least-squares readouts for the current Z. B and C have closed forms,
//! so the search runs over A alone with the envelope-theorem gradient.

use rand::distributions::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::Normal;

use crate::error::{Error, Result};
use crate::metadata::Outcome;
use crate::preprocess::NormalizationParams;
use crate::rng;
use crate::selection::pca2;

pub const DEFAULT_RESTARTS: usize = 30;
pub const MAX_ITERATIONS: usize = 1000;
pub const RELATIVE_TOLERANCE: f64 = 1e-8;
pub const RIDGE: f64 = 1e-10;
/// Spread of the Gaussian perturbations applied to the PCA start.
pub const RESTART_SIGMA: f64 = 0.3;

/// Fitted projection. Matrices are row-major: `a` is 2×n, `b` is n×2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionModel {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: [f64; 2],
    pub objective: f64,
    pub n: usize,
    pub feature_names: Vec<String>,
    pub normalization: Option<NormalizationParams>,
    /// True when some objective evaluation needed the ridge fallback.
    pub ridge_used: bool,
    pub seed: u64,
}

/// Instances placed in the 2D space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSpace {
    pub instance_ids: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    pub outcomes: Vec<Outcome>,
}

/// Objective value plus the optimal readouts for a fixed A.
pub struct Evaluation {
    pub value: f64,
    pub b: Vec<f64>,
    pub c: [f64; 2],
    pub ridge_used: bool,
}

/// F is n×i row-major (n feature rows, i instance columns); Y has length i.
pub fn pilot_objective(a: &[f64], f: &[f64], y: &[f64], n: usize) -> Evaluation {
    let i = y.len();
    assert_eq!(a.len(), 2 * n);
    assert_eq!(f.len(), n * i);

    // Z = A·F, 2×i.
    let mut z = vec![0.0; 2 * i];
    for r in 0..2 {
        for k in 0..n {
            let ark = a[r * n + k];
            if ark != 0.0 {
                let row = &f[k * i..(k + 1) * i];
                for (t, zv) in z[r * i..(r + 1) * i].iter_mut().enumerate() {
                    *zv += ark * row[t];
                }
            }
        }
    }

    // M = Z·Zᵀ, 2×2, with a ridge fallback when singular.
    let mut m = [0.0f64; 4];
    for t in 0..i {
        let (z0, z1) = (z[t], z[i + t]);
        m[0] += z0 * z0;
        m[1] += z0 * z1;
        m[3] += z1 * z1;
    }
    m[2] = m[1];
    let mut det = m[0] * m[3] - m[1] * m[2];
    let scale = m[0].abs().max(m[3].abs()).max(1.0);
    let mut ridge_used = false;
    if det.abs() < 1e-12 * scale * scale {
        m[0] += RIDGE;
        m[3] += RIDGE;
        det = m[0] * m[3] - m[1] * m[2];
        ridge_used = true;
    }
    let inv = [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det];

    // B = F·Zᵀ·M⁻¹ (n×2), C = Y·Zᵀ·M⁻¹ (1×2).
    let mut b = vec![0.0; 2 * n];
    for k in 0..n {
        let row = &f[k * i..(k + 1) * i];
        let mut fz = [0.0f64; 2];
        for t in 0..i {
            fz[0] += row[t] * z[t];
            fz[1] += row[t] * z[i + t];
        }
        b[k * 2] = fz[0] * inv[0] + fz[1] * inv[2];
        b[k * 2 + 1] = fz[0] * inv[1] + fz[1] * inv[3];
    }
    let mut yz = [0.0f64; 2];
    for t in 0..i {
        yz[0] += y[t] * z[t];
        yz[1] += y[t] * z[i + t];
    }
    let c = [
        yz[0] * inv[0] + yz[1] * inv[2],
        yz[0] * inv[1] + yz[1] * inv[3],
    ];

    let mut value = 0.0;
    for k in 0..n {
        let row = &f[k * i..(k + 1) * i];
        for t in 0..i {
            let r = row[t] - b[k * 2] * z[t] - b[k * 2 + 1] * z[i + t];
            value += r * r;
        }
    }
    for t in 0..i {
        let r = y[t] - c[0] * z[t] - c[1] * z[i + t];
        value += r * r;
    }
    Evaluation {
        value,
        b,
        c,
        ridge_used,
    }
}

/// Envelope-theorem gradient of the reduced objective with respect to A:
/// −2·(Bᵀ·R_F + Cᵀ·R_Y)·Fᵀ where R_F and R_Y are the residuals at the
/// optimal B, C for the current A.
pub fn pilot_gradient(a: &[f64], f: &[f64], y: &[f64], n: usize) -> Vec<f64> {
    let i = y.len();
    let eval = pilot_objective(a, f, y, n);
    let mut z = vec![0.0; 2 * i];
    for r in 0..2 {
        for k in 0..n {
            let ark = a[r * n + k];
            for t in 0..i {
                z[r * i + t] += ark * f[k * i + t];
            }
        }
    }
    // G = Bᵀ·R_F + Cᵀ·R_Y, 2×i.
    let mut g = vec![0.0; 2 * i];
    for k in 0..n {
        let row = &f[k * i..(k + 1) * i];
        let (b0, b1) = (eval.b[k * 2], eval.b[k * 2 + 1]);
        for t in 0..i {
            let r = row[t] - b0 * z[t] - b1 * z[i + t];
            g[t] += b0 * r;
            g[i + t] += b1 * r;
        }
    }
    for t in 0..i {
        let r = y[t] - eval.c[0] * z[t] - eval.c[1] * z[i + t];
        g[t] += eval.c[0] * r;
        g[i + t] += eval.c[1] * r;
    }
    let mut grad = vec![0.0; 2 * n];
    for r in 0..2 {
        for k in 0..n {
            let mut s = 0.0;
            for t in 0..i {
                s += g[r * i + t] * f[k * i + t];
            }
            grad[r * n + k] = -2.0 * s;
        }
    }
    grad
}

/// BFGS with Armijo backtracking from one starting point. The objective
/// sequence is non-increasing; stops on relative change < tolerance.
fn bfgs(mut a: Vec<f64>, f: &[f64], y: &[f64], n: usize) -> (Vec<f64>, f64, bool) {
    let dim = 2 * n;
    let mut h = vec![0.0; dim * dim];
    for d in 0..dim {
        h[d * dim + d] = 1.0;
    }
    let mut value = pilot_objective(&a, f, y, n).value;
    let mut grad = pilot_gradient(&a, f, y, n);
    let mut ridge_seen = false;
    for _ in 0..MAX_ITERATIONS {
        // Direction = −H·grad.
        let mut dir = vec![0.0; dim];
        for r in 0..dim {
            let mut s = 0.0;
            for c in 0..dim {
                s += h[r * dim + c] * grad[c];
            }
            dir[r] = -s;
        }
        let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if slope >= 0.0 {
            // Reset a non-descent direction to steepest descent.
            for d in 0..dim {
                for c in 0..dim {
                    h[d * dim + c] = if d == c { 1.0 } else { 0.0 };
                }
            }
            dir = grad.iter().map(|g| -g).collect();
        }
        let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();

        let mut step = 1.0;
        let mut next_a;
        let mut next_eval;
        loop {
            next_a = a
                .iter()
                .zip(&dir)
                .map(|(ai, di)| ai + step * di)
                .collect::<Vec<f64>>();
            next_eval = pilot_objective(&next_a, f, y, n);
            if next_eval.value.is_finite() && next_eval.value <= value + 1e-4 * step * slope {
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                return (a, value, ridge_seen);
            }
        }
        ridge_seen |= next_eval.ridge_used;
        let next_grad = pilot_gradient(&next_a, f, y, n);

        // BFGS inverse-Hessian update.
        let s: Vec<f64> = next_a.iter().zip(&a).map(|(x, o)| x - o).collect();
        let yv: Vec<f64> = next_grad.iter().zip(&grad).map(|(x, o)| x - o).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let mut hy = vec![0.0; dim];
            for r in 0..dim {
                for c in 0..dim {
                    hy[r] += h[r * dim + c] * yv[c];
                }
            }
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for r in 0..dim {
                for c in 0..dim {
                    h[r * dim + c] += (rho + rho * rho * yhy) * s[r] * s[c]
                        - rho * (hy[r] * s[c] + s[r] * hy[c]);
                }
            }
        }

        let converged = (value - next_eval.value).abs() <= RELATIVE_TOLERANCE * value.abs().max(1e-30);
        a = next_a;
        value = next_eval.value;
        grad = next_grad;
        if converged {
            break;
        }
    }
    (a, value, ridge_seen)
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Fit the projection from multiple starts: the PCA loadings transposed,
/// plus seeded Gaussian perturbations of them. The lowest final objective
/// wins (ties to the lowest restart index), then the sign of each row of A
/// is fixed so its coordinate correlates non-negatively with the outcome
/// (near-zero correlation: largest-|·| entry of the row made positive).
pub fn fit_pilot(f: &[f64], y: &[f64], n: usize, restarts: usize, seed: u64) -> Result<ProjectionModel> {
    let i = y.len();
    assert!(restarts >= 1);
    if i <= n || n < 2 {
        return Err(Error::DimensionMismatch { expected: n + 1, got: i });
    }

    // PCA start: loadings of the instance rows, transposed to 2×n.
    let instances: Vec<Vec<f64>> = (0..i)
        .map(|t| (0..n).map(|k| f[k * i + t]).collect())
        .collect();
    let pca = pca2(&instances);
    let mut a0 = vec![0.0; 2 * n];
    for k in 0..n {
        a0[k] = pca.loadings[k][0];
        a0[n + k] = pca.loadings[k][1];
    }

    let runs: Vec<(usize, Vec<f64>, f64, bool)> = (0..restarts)
        .into_par_iter()
        .filter_map(|r| {
            let start = if r == 0 {
                a0.clone()
            } else {
                let mut rng_ = rng::stream(seed, &[rng::tag("pilot-restart"), r as u64]);
                let gauss = Normal::new(0.0, RESTART_SIGMA).unwrap();
                a0.iter().map(|v| v + gauss.sample(&mut rng_)).collect()
            };
            let (a, value, ridge) = bfgs(start, f, y, n);
            value.is_finite().then_some((r, a, value, ridge))
        })
        .collect();
    let best = runs
        .iter()
        .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(a.0.cmp(&b.0)))
        .ok_or(Error::OptimizerDiverged)?;
    let (_, mut a, objective, ridge_from_fit) = best.clone();

    let eval = pilot_objective(&a, f, y, n);
    let mut b = eval.b;
    let mut c = eval.c;
    for r in 0..2 {
        let z_r: Vec<f64> = (0..i)
            .map(|t| (0..n).map(|k| a[r * n + k] * f[k * i + t]).sum())
            .collect();
        let corr = pearson(&z_r, y);
        let flip = if corr.abs() < 1e-6 {
            let mut lead = 0;
            for k in 1..n {
                if a[r * n + k].abs() > a[r * n + lead].abs() {
                    lead = k;
                }
            }
            a[r * n + lead] < 0.0
        } else {
            corr < 0.0
        };
        if flip {
            for k in 0..n {
                a[r * n + k] = -a[r * n + k];
            }
            for k in 0..n {
                b[k * 2 + r] = -b[k * 2 + r];
            }
            c[r] = -c[r];
        }
    }

    Ok(ProjectionModel {
        a,
        b,
        c,
        objective,
        n,
        feature_names: Vec::new(),
        normalization: None,
        ridge_used: ridge_from_fit || eval.ridge_used,
        seed,
    })
}

impl ProjectionModel {
    pub fn with_features(
        mut self,
        names: Vec<String>,
        normalization: Option<NormalizationParams>,
    ) -> ProjectionModel {
        self.feature_names = names;
        self.normalization = normalization;
        self
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<ProjectionModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Project standardized feature columns (n×j row-major) into the plane.
pub fn project(model: &ProjectionModel, f_new: &[f64]) -> Result<Vec<[f64; 2]>> {
    let n = model.n;
    if f_new.len() % n != 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f_new.len(),
        });
    }
    let j = f_new.len() / n;
    Ok((0..j)
        .map(|t| {
            let mut z = [0.0; 2];
            for r in 0..2 {
                for k in 0..n {
                    z[r] += model.a[r * n + k] * f_new[k * j + t];
                }
            }
            z
        })
        .collect())
}
