//! Measure how much of the reachable instance space a test suite covers:
//! project the feature-range boundary vertices, cluster the instances with
//! DBSCAN, wrap each cluster in an alpha shape, and relate the footprint
//! union to the boundary hull area.
//!
//! ```bash
//! cargo run --example measure_coverage
//! ```

use isa_av::geometry::{compute_coverage, dbscan_params, Bounds};
use isa_av::metadata::Outcome;
use isa_av::pilot::{fit_pilot, project, InstanceSpace};
use isa_av::preprocess::{correlation_matrix, zscore, impute_missing};
use isa_av::metadata::{MetadataTable, MissingMask};
use isa_av::rng;
use isa_av::Result;
use rand::Rng;

fn main() -> Result<()> {
    // A suite that explores only part of the reachable range: three features
    // drawn from two latent factors, with the suite concentrated in two
    // off-centre blobs.
    let n = 3;
    let i = 400;
    let mut rng_ = rng::stream(21, &[rng::tag("coverage-example")]);
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    for t in 0..i {
        let centre = if t % 2 == 0 { 0.6 } else { -0.6 };
        let u: f64 = centre + 0.25 * rng_.gen_range(-1.0..1.0);
        let v: f64 = 0.3 * rng_.gen_range(-1.0..1.0);
        rows.push(vec![u, v, 0.7 * u + 0.3 * v]);
        outcomes.push(if u > 0.0 { Outcome::Unsafe } else { Outcome::Safe });
    }
    let table = MetadataTable::new(
        (0..i).map(|t| format!("sc{t:03}")).collect(),
        ["u", "v", "w"].map(String::from).to_vec(),
        rows.iter().flatten().copied().collect(),
        outcomes,
        MissingMask::new(i, n),
    )
    .unwrap();

    let standardized = zscore(&impute_missing(&table)?)?.table;
    let mut f = vec![0.0; n * i];
    for k in 0..n {
        for t in 0..i {
            f[k * i + t] = standardized.value(t, k);
        }
    }
    let y = standardized.outcome_vector();
    let model = fit_pilot(&f, &y, n, 10, 5)?;
    let space = InstanceSpace {
        instance_ids: standardized.instance_ids().to_vec(),
        coords: project(&model, &f)?,
        outcomes: standardized.outcomes().to_vec(),
    };

    let bounds = Bounds::from_features(&f, n);
    let corr = correlation_matrix(&standardized);
    let report = compute_coverage(&space, &model, &bounds, &corr, 0.7)?;

    let (k, eps) = (report.dbscan_k, report.dbscan_eps);
    println!("DBSCAN parameters: k = {k}, eps = {eps:.4}");
    let (k2, _) = dbscan_params(i, 1.0, 1.0);
    assert_eq!(k, k2);
    println!("boundary hull area:   {:.4}", report.area_bound);
    println!("footprint union area: {:.4}", report.area_is);
    println!("coverage:             {:.2}%", report.coverage_percent);
    println!("clusters: {} ({} noise points)", report.footprints.len(), report.noise_count);
    for fp in &report.footprints {
        println!(
            "  cluster {}: {} points, area {:.4}{}",
            fp.cluster,
            fp.size,
            fp.area,
            if fp.degenerate { " (degenerate)" } else { "" }
        );
    }
    Ok(())
}
