//! Impute missing cells, z-score the features, and prune redundant or
//! outcome-irrelevant columns.
//!
//! ```bash
//! cargo run --example preprocess_features
//! ```

use isa_av::metadata::{MetadataTable, MissingMask, Outcome};
use isa_av::preprocess::{correlation_matrix, impute_missing, prune_features, zscore};
use isa_av::rng;
use isa_av::Result;
use rand::Rng;

/// 200 instances, 5 features: two informative signals, a near-copy of the
/// first (redundant), pure noise (weak), and one with a few missing cells.
fn synthetic_table() -> MetadataTable {
    let mut rng_ = rng::stream(7, &[rng::tag("preprocess-example")]);
    let n = 200;
    let mut values = Vec::new();
    let mut outcomes = Vec::new();
    let mut mask = MissingMask::new(n, 5);
    for r in 0..n {
        let s1: f64 = rng_.gen_range(-1.0..1.0);
        let s2: f64 = rng_.gen_range(-1.0..1.0);
        let noise = rng_.gen_range(-1.0..1.0);
        values.extend([
            s1,
            s2,
            s1 + 0.01 * rng_.gen_range(-1.0..1.0), // redundant with s1
            noise,                                 // no outcome association
            s2 + 0.2 * rng_.gen_range(-1.0..1.0),
        ]);
        if r % 40 == 0 {
            mask.set(r, 4, true);
            let idx = values.len() - 1;
            values[idx] = f64::NAN;
        }
        outcomes.push(if s1 + s2 > 0.0 { Outcome::Unsafe } else { Outcome::Safe });
    }
    MetadataTable::new(
        (0..n).map(|i| format!("sc{i:03}")).collect(),
        ["sig_one", "sig_two", "sig_copy", "noise", "sig_two_echo"]
            .map(String::from)
            .to_vec(),
        values,
        outcomes,
        mask,
    )
    .unwrap()
}

fn main() -> Result<()> {
    let raw = synthetic_table();
    println!(
        "raw table: {} x {} with {} missing cells",
        raw.n_instances(),
        raw.n_features(),
        raw.missing().count()
    );

    let imputed = impute_missing(&raw)?;
    let scored = zscore(&imputed)?;
    let corr = correlation_matrix(&scored.table);
    println!("\nSpearman correlation with the outcome:");
    for (name, rho_y) in corr.feature_names.iter().zip(&corr.rho_y) {
        println!("  {name:>13}: {rho_y:+.3}");
    }

    let (pruned, report) = prune_features(&scored.table, &corr, 0.95, 0.10)?;
    println!("\n{}", report.to_text());
    println!("surviving features: {:?}", pruned.feature_names());
    Ok(())
}
