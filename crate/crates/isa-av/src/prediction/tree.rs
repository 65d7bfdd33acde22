//! CART decision trees (Gini impurity) and bagged random forests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metadata::Outcome;
use crate::rng;

/// How many candidate features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitFeatures {
    All,
    /// max(1, floor(sqrt(d))) features, resampled per node.
    Sqrt,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        outcome: Outcome,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub n_features: usize,
}

fn gini(unsafe_count: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = unsafe_count as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

fn majority(y: &[Outcome], idx: &[usize]) -> Outcome {
    let unsafe_count = idx.iter().filter(|&&i| y[i] == Outcome::Unsafe).count();
    // Tie resolves to Safe.
    if 2 * unsafe_count > idx.len() {
        Outcome::Unsafe
    } else {
        Outcome::Safe
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Outcome],
    split_features: SplitFeatures,
}

impl Builder<'_> {
    /// Best (impurity decrease, feature, threshold) over the candidate
    /// features, scanning split points between distinct sorted values.
    /// Candidates are visited in ascending index order so ties resolve to
    /// the lowest feature index and lowest threshold.
    fn best_split(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let candidates: Vec<usize> = match self.split_features {
            SplitFeatures::All => (0..d).collect(),
            SplitFeatures::Sqrt => {
                let take = ((d as f64).sqrt().floor() as usize).max(1);
                let mut pool: Vec<usize> = (0..d).collect();
                // Partial Fisher-Yates for a uniform subset.
                for i in 0..take {
                    let j = rng.gen_range(i..pool.len());
                    pool.swap(i, j);
                }
                let mut chosen = pool[..take].to_vec();
                chosen.sort_unstable();
                chosen
            }
        };

        let total = idx.len();
        let total_unsafe = idx.iter().filter(|&&i| self.y[i] == Outcome::Unsafe).count();
        let parent = gini(total_unsafe, total);
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &candidates {
            let mut order: Vec<usize> = idx.to_vec();
            order.sort_by(|&a, &b| {
                self.x[a][f]
                    .partial_cmp(&self.x[b][f])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut left_unsafe = 0usize;
            for (k, &i) in order.iter().enumerate().take(total - 1) {
                if self.y[i] == Outcome::Unsafe {
                    left_unsafe += 1;
                }
                let left_n = k + 1;
                let (va, vb) = (self.x[i][f], self.x[order[k + 1]][f]);
                if va == vb {
                    continue;
                }
                let right_n = total - left_n;
                let right_unsafe = total_unsafe - left_unsafe;
                let weighted = (left_n as f64 * gini(left_unsafe, left_n)
                    + right_n as f64 * gini(right_unsafe, right_n))
                    / total as f64;
                let gain = parent - weighted;
                let threshold = (va + vb) / 2.0;
                let better = match best {
                    None => gain > 1e-12,
                    Some((bg, _, _)) => gain > bg + 1e-12,
                };
                if better {
                    best = Some((gain, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Node {
        let unsafe_count = idx.iter().filter(|&&i| self.y[i] == Outcome::Unsafe).count();
        if unsafe_count == 0 || unsafe_count == idx.len() || idx.len() < 2 {
            return Node::Leaf {
                outcome: majority(self.y, idx),
            };
        }
        match self.best_split(idx, rng) {
            None => Node::Leaf {
                outcome: majority(self.y, idx),
            },
            Some((feature, threshold)) => {
                let (left, right): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(self.build(&left, rng)),
                    right: Box::new(self.build(&right, rng)),
                }
            }
        }
    }
}

impl DecisionTree {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[Outcome],
        split_features: SplitFeatures,
        rng: &mut ChaCha8Rng,
    ) -> DecisionTree {
        let builder = Builder {
            x,
            y,
            split_features,
        };
        let idx: Vec<usize> = (0..x.len()).collect();
        DecisionTree {
            root: builder.build(&idx, rng),
            n_features: x[0].len(),
        }
    }

    pub fn predict_one(&self, row: &[f64]) -> Outcome {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { outcome } => return *outcome,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub split_features: SplitFeatures,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            bootstrap: true,
            split_features: SplitFeatures::Sqrt,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(x: &[Vec<f64>], y: &[Outcome], params: ForestParams, seed: u64) -> RandomForest {
        let trees = (0..params.n_trees)
            .map(|t| {
                let mut rng = rng::stream(seed, &[rng::tag("forest-tree"), t as u64]);
                if params.bootstrap {
                    let idx: Vec<usize> =
                        (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect();
                    let bx: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
                    let by: Vec<Outcome> = idx.iter().map(|&i| y[i]).collect();
                    DecisionTree::fit(&bx, &by, params.split_features, &mut rng)
                } else {
                    DecisionTree::fit(x, y, params.split_features, &mut rng)
                }
            })
            .collect();
        RandomForest { trees }
    }

    pub fn predict_one(&self, row: &[f64]) -> Outcome {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict_one(row) == Outcome::Unsafe)
            .count();
        if 2 * votes > self.trees.len() {
            Outcome::Unsafe
        } else {
            Outcome::Safe
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_free_data() -> (Vec<Vec<f64>>, Vec<Outcome>) {
        // Outcome = indicator(x0 > 0.5), second feature pure noise-ish.
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 10) as f64 / 10.0, ((i * 7) % 13) as f64])
            .collect();
        let y: Vec<Outcome> = x
            .iter()
            .map(|r| {
                if r[0] > 0.5 {
                    Outcome::Unsafe
                } else {
                    Outcome::Safe
                }
            })
            .collect();
        (x, y)
    }

    #[test]
    fn tree_fits_threshold_rule_exactly() {
        let (x, y) = xor_free_data();
        let mut rng = rng::stream(0, &[1]);
        let tree = DecisionTree::fit(&x, &y, SplitFeatures::All, &mut rng);
        for (row, label) in x.iter().zip(&y) {
            assert_eq!(tree.predict_one(row), *label);
        }
    }

    #[test]
    fn forest_with_one_unbagged_tree_equals_decision_tree() {
        let (x, y) = xor_free_data();
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            split_features: SplitFeatures::All,
        };
        let forest = RandomForest::fit(&x, &y, params, 9);
        let mut rng = rng::stream(9, &[rng::tag("forest-tree"), 0]);
        let tree = DecisionTree::fit(&x, &y, SplitFeatures::All, &mut rng);
        for row in &x {
            assert_eq!(forest.predict_one(row), tree.predict_one(row));
        }
    }

    #[test]
    fn forest_is_deterministic() {
        let (x, y) = xor_free_data();
        let a = RandomForest::fit(&x, &y, ForestParams::default(), 7);
        let b = RandomForest::fit(&x, &y, ForestParams::default(), 7);
        for row in &x {
            assert_eq!(a.predict_one(row), b.predict_one(row));
        }
    }
}
