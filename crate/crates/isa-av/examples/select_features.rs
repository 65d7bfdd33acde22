//! Cluster correlated features with k-medoids and search the per-cluster
//! combinations for the subset that best separates safe from unsafe.
//!
//! ```bash
//! cargo run --example select_features
//! ```

use isa_av::metadata::{MetadataTable, MissingMask, Outcome};
use isa_av::preprocess::correlation_matrix;
use isa_av::rng;
use isa_av::selection::{cluster_features, select_features};
use isa_av::Result;
use rand::Rng;

/// Three latent signals, two features per signal; the outcome depends on the
/// first two signals only, so the best pick is one feature from each of the
/// first two clusters.
fn synthetic_table() -> MetadataTable {
    let mut rng_ = rng::stream(11, &[rng::tag("selection-example")]);
    let n = 300;
    let mut values = Vec::new();
    let mut outcomes = Vec::new();
    for _ in 0..n {
        let s: [f64; 3] = [
            rng_.gen_range(-1.0..1.0),
            rng_.gen_range(-1.0..1.0),
            rng_.gen_range(-1.0..1.0),
        ];
        for sig in s {
            values.push(sig + 0.1 * rng_.gen_range(-1.0..1.0));
            values.push(-sig + 0.1 * rng_.gen_range(-1.0..1.0));
        }
        outcomes.push(if s[0] + s[1] > 0.0 { Outcome::Unsafe } else { Outcome::Safe });
    }
    MetadataTable::new(
        (0..n).map(|i| format!("sc{i:03}")).collect(),
        ["a_pos", "a_neg", "b_pos", "b_neg", "c_pos", "c_neg"]
            .map(String::from)
            .to_vec(),
        values,
        outcomes,
        MissingMask::new(n, 6),
    )
    .unwrap()
}

fn main() -> Result<()> {
    let table = synthetic_table();
    let corr = correlation_matrix(&table);
    let seed = 2024;

    let clustering = cluster_features(&corr, (2, table.n_features() - 1), seed)?;
    println!("silhouette per k:");
    for (k, s) in &clustering.silhouettes {
        let marker = if *k == clustering.k { "  <- chosen" } else { "" };
        println!("  k={k}: {s:.4}{marker}");
    }
    for (c, members) in clustering.clusters().iter().enumerate() {
        let names: Vec<&str> = members
            .iter()
            .map(|&f| table.feature_names()[f].as_str())
            .collect();
        println!("cluster {c}: {names:?}");
    }

    let (selected, scores) = select_features(&table, &clustering, 20_000, seed)?;
    println!(
        "\nevaluated {} combinations{}; best cross-validated error {:.4}",
        selected.evaluated,
        if selected.sampled { " (sampled)" } else { "" },
        selected.winner.error
    );
    println!("selected features: {:?}", selected.names);
    println!("\ntop 3 combinations:");
    for score in scores.iter().take(3) {
        let names: Vec<&str> = score
            .tuple
            .iter()
            .map(|&f| table.feature_names()[f].as_str())
            .collect();
        println!("  {names:?}: error {:.4}", score.error);
    }
    Ok(())
}
