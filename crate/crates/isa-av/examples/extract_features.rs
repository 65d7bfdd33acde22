//! Parse scenario files and compute their feature vectors.
//!
//! Uses the two bundled sample scenarios: a per-timestep simulation log
//! (61 static/dynamic features) and a road-spine document (15 structural
//! features).
//!
//! ```bash
//! cargo run --example extract_features
//! ```

use std::path::Path;

use isa_av::extraction::{
    extract_road_suite, extract_timeseries_suite, DEFAULT_STRAIGHT_THRESHOLD_DEG,
};
use isa_av::Result;

fn main() -> Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");

    // Copy the samples into per-format suite directories: extraction takes a
    // directory of .json files, one scenario per file.
    let work = tempfile::tempdir().expect("tempdir");
    let ts_dir = work.path().join("timeseries");
    let road_dir = work.path().join("roads");
    std::fs::create_dir_all(&ts_dir).unwrap();
    std::fs::create_dir_all(&road_dir).unwrap();
    std::fs::copy(
        data.join("scenario_timeseries.json"),
        ts_dir.join("scenario_001.json"),
    )
    .unwrap();
    std::fs::copy(data.join("road_test.json"), road_dir.join("road_001.json")).unwrap();

    let table = extract_timeseries_suite(&ts_dir)?;
    println!(
        "time-series suite: {} scenario(s), {} features",
        table.n_instances(),
        table.n_features()
    );
    for name in ["num_NPCs", "min_obsDist", "ego_speed"] {
        if let Some(col) = table.column_index(name) {
            println!("  {name:>12} = {:.4}", table.value(0, col));
        }
    }
    println!("  outcome      = {}", table.outcomes()[0].as_str());

    let suite = extract_road_suite(&road_dir, DEFAULT_STRAIGHT_THRESHOLD_DEG)?;
    println!(
        "\nroad suite: {} test(s), {} features ({} invalid skipped)",
        suite.table.n_instances(),
        suite.table.n_features(),
        suite.skipped
    );
    for name in ["road_distance", "num_l_turns", "num_r_turns", "total_angle"] {
        if let Some(col) = suite.table.column_index(name) {
            println!("  {name:>13} = {:.4}", suite.table.value(0, col));
        }
    }
    println!("  outcome       = {}", suite.table.outcomes()[0].as_str());
    Ok(())
}
