//! Single-hidden-layer perceptron trained with Adam on log loss.
//!
//! Architecture: d inputs → 100 rectified units → 1 logistic output.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metadata::Outcome;
use crate::rng;

pub const HIDDEN: usize = 100;
pub const LEARNING_RATE: f64 = 1e-3;
pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
pub const MAX_EPOCHS: usize = 200;
pub const BATCH: usize = 32;
/// Stop after this many epochs without the loss improving by TOL.
pub const PATIENCE: usize = 10;
pub const TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    /// Hidden weights, HIDDEN rows of d entries.
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    fn new(len: usize) -> Adam {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * grads[i];
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * grads[i] * grads[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= LEARNING_RATE * mhat / (vhat.sqrt() + ADAM_EPS);
        }
    }
}

impl Mlp {
    fn init(d: usize, rng_: &mut ChaCha8Rng) -> Mlp {
        use rand::Rng;
        let limit1 = (6.0 / (d + HIDDEN) as f64).sqrt();
        let limit2 = (6.0 / (HIDDEN + 1) as f64).sqrt();
        let w1 = (0..HIDDEN)
            .map(|_| (0..d).map(|_| rng_.gen_range(-limit1..limit1)).collect())
            .collect();
        let w2 = (0..HIDDEN).map(|_| rng_.gen_range(-limit2..limit2)).collect();
        Mlp {
            w1,
            b1: vec![0.0; HIDDEN],
            w2,
            b2: 0.0,
        }
    }

    fn forward(&self, row: &[f64]) -> (Vec<f64>, f64) {
        let hidden: Vec<f64> = self
            .w1
            .iter()
            .zip(&self.b1)
            .map(|(w, b)| {
                let z: f64 = w.iter().zip(row).map(|(a, x)| a * x).sum::<f64>() + b;
                z.max(0.0)
            })
            .collect();
        let out = sigmoid(
            self.w2.iter().zip(&hidden).map(|(a, h)| a * h).sum::<f64>() + self.b2,
        );
        (hidden, out)
    }

    pub fn fit(x: &[Vec<f64>], y: &[Outcome], seed: u64) -> Mlp {
        let d = x[0].len();
        let mut rng_ = rng::stream(seed, &[rng::tag("mlp")]);
        let mut net = Mlp::init(d, &mut rng_);

        // Flat parameter layout for the optimizer: w1 rows, b1, w2, b2.
        let n_params = HIDDEN * d + HIDDEN + HIDDEN + 1;
        let mut adam = Adam::new(n_params);

        let targets: Vec<f64> = y.iter().map(|o| o.as_f64()).collect();
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut best_loss = f64::INFINITY;
        let mut stale = 0usize;

        for _epoch in 0..MAX_EPOCHS {
            order.shuffle(&mut rng_);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(BATCH) {
                let mut grads = vec![0.0; n_params];
                for &i in batch {
                    let row = &x[i];
                    let (hidden, out) = net.forward(row);
                    let p = out.clamp(1e-12, 1.0 - 1e-12);
                    epoch_loss -= targets[i] * p.ln() + (1.0 - targets[i]) * (1.0 - p).ln();
                    // dL/dz_out for sigmoid + log loss.
                    let delta_out = out - targets[i];
                    let scale = delta_out / batch.len() as f64;
                    let base_b1 = HIDDEN * d;
                    let base_w2 = base_b1 + HIDDEN;
                    let base_b2 = base_w2 + HIDDEN;
                    grads[base_b2] += scale;
                    for h in 0..HIDDEN {
                        grads[base_w2 + h] += scale * hidden[h];
                        if hidden[h] > 0.0 {
                            let delta_h = scale * net.w2[h];
                            grads[base_b1 + h] += delta_h;
                            for (j, &v) in row.iter().enumerate() {
                                grads[h * d + j] += delta_h * v;
                            }
                        }
                    }
                }
                let mut params = net.pack();
                adam.step(&mut params, &grads);
                net.unpack(&params, d);
            }
            epoch_loss /= x.len() as f64;
            if epoch_loss < best_loss - TOL {
                best_loss = epoch_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= PATIENCE {
                    break;
                }
            }
        }
        net
    }

    fn pack(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.w1.iter().flatten().copied().collect();
        p.extend(&self.b1);
        p.extend(&self.w2);
        p.push(self.b2);
        p
    }

    fn unpack(&mut self, params: &[f64], d: usize) {
        for h in 0..HIDDEN {
            self.w1[h].copy_from_slice(&params[h * d..(h + 1) * d]);
        }
        let base = HIDDEN * d;
        self.b1.copy_from_slice(&params[base..base + HIDDEN]);
        self.w2.copy_from_slice(&params[base + HIDDEN..base + 2 * HIDDEN]);
        self.b2 = params[base + 2 * HIDDEN];
    }

    pub fn predict_one(&self, row: &[f64]) -> Outcome {
        if self.forward(row).1 > 0.5 {
            Outcome::Unsafe
        } else {
            Outcome::Safe
        }
    }
}
