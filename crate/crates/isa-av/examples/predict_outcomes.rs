//! Train the five classifiers on scenario features, evaluate them on a held
//! out split, and test whether the selected features beat random subsets
//! (Wilcoxon signed-rank over repeated splits).
//!
//! ```bash
//! cargo run --example predict_outcomes
//! ```

use isa_av::metadata::{MetadataTable, MissingMask, Outcome};
use isa_av::prediction::{
    compare_selected_vs_random, evaluate, predict, split_train_test, train, ClassifierKind,
    ClassifierSpec,
};
use isa_av::rng;
use isa_av::Result;
use rand::Rng;

/// Two informative features and four noise features.
fn synthetic_table() -> MetadataTable {
    let mut rng_ = rng::stream(17, &[rng::tag("prediction-example")]);
    let n = 400;
    let mut values = Vec::new();
    let mut outcomes = Vec::new();
    for _ in 0..n {
        let s1: f64 = rng_.gen_range(-1.0..1.0);
        let s2: f64 = rng_.gen_range(-1.0..1.0);
        values.extend([
            s1 + 0.1 * rng_.gen_range(-1.0..1.0),
            s2 + 0.1 * rng_.gen_range(-1.0..1.0),
            rng_.gen_range(-1.0..1.0),
            rng_.gen_range(-1.0..1.0),
            rng_.gen_range(-1.0..1.0),
            rng_.gen_range(-1.0..1.0),
        ]);
        outcomes.push(if s1 * s2 > 0.0 { Outcome::Unsafe } else { Outcome::Safe });
    }
    MetadataTable::new(
        (0..n).map(|i| format!("sc{i:03}")).collect(),
        ["sig_a", "sig_b", "n1", "n2", "n3", "n4"].map(String::from).to_vec(),
        values,
        outcomes,
        MissingMask::new(n, 6),
    )
    .unwrap()
}

fn main() -> Result<()> {
    let table = synthetic_table();
    let (train_table, test_table) = split_train_test(&table, 0.8, 42)?;
    let rows = |t: &MetadataTable| -> Vec<Vec<f64>> {
        (0..t.n_instances()).map(|r| t.row(r).to_vec()).collect()
    };

    println!("per-classifier F1 on the held-out 20% (unsafe positive):");
    for kind in ClassifierKind::ALL {
        let spec = ClassifierSpec::new(kind, 7);
        let model = train(&spec, &rows(&train_table), train_table.outcomes())?;
        let pred = predict(&model, &rows(&test_table))?;
        let report = evaluate(&pred, test_table.outcomes());
        println!(
            "  {:>13}: precision {:.3}, recall {:.3}, F1 {:.3}",
            kind.as_str(),
            report.precision,
            report.recall,
            report.f1
        );
    }

    let selected = ["sig_a".to_string(), "sig_b".to_string()];
    let comparison = compare_selected_vs_random(&table, &selected, 10, 42)?;
    println!("\nselected {:?} vs random subsets over 10 splits:", selected);
    for stat in &comparison.stats {
        println!(
            "  {:>13}: p(F1) = {:.4}{}",
            stat.kind.as_str(),
            stat.p_f1,
            if stat.significant_f1 { "  -> significant at 0.05" } else { "" }
        );
    }
    Ok(())
}
