//! Two-sided Wilcoxon signed-rank test for paired samples.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::preprocess::fractional_ranks;

/// Exact enumeration is used up to this many nonzero differences.
pub const EXACT_LIMIT: usize = 25;

/// Two-sided p-value for paired observations. Zero differences are
/// discarded; |d| is ranked with average ties; the statistic is
/// W = min(W+, W−). Exact distribution for m ≤ 25 nonzero pairs, normal
/// approximation with tie and continuity corrections above. All-zero
/// differences give p = 1.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let m = diffs.len();
    if m == 0 {
        return 1.0;
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = fractional_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = m as f64 * (m as f64 + 1.0) / 2.0;
    let w = w_plus.min(total - w_plus);

    if m <= EXACT_LIMIT {
        exact_p(&ranks, w)
    } else {
        normal_p(&ranks, w, m)
    }
}

/// P(W+ ≤ w) under the null by subset-sum counting, doubled to two sides.
/// Ranks are doubled so tie averages (half-integers) become exact integers.
fn exact_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut counts = vec![0u64; max_sum + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=max_sum).rev() {
            counts[s] += counts[s - r];
        }
    }
    let threshold = (2.0 * w).round() as usize;
    let tail: u64 = counts[..=threshold.min(max_sum)].iter().sum();
    let p = 2.0 * tail as f64 / (1u64 << ranks.len()) as f64;
    p.min(1.0)
}

fn normal_p(ranks: &[f64], w: f64, m: usize) -> f64 {
    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    // Tie correction: group equal ranks and subtract sum(t^3 - t)/48.
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w - mean + 0.5) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    (2.0 * normal.cdf(z)).min(1.0)
}
