//! Instance-space geometry: the empirical boundary of reachable scenarios,
//! clustering of tested instances, footprint areas, and the coverage metric.

pub mod alpha;
pub mod dbscan;
pub mod hull;
pub mod polygon;

use geo::{Area, BooleanOps, Coord, LineString, MultiPolygon};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pilot::{project, InstanceSpace, ProjectionModel};
use crate::preprocess::CorrelationMatrix;

pub use alpha::{alpha_shape, AlphaShape};
pub use dbscan::{dbscan, DbscanLabel};
pub use hull::convex_hull;
pub use polygon::{polygon_area, Polygon};

/// Features with 2^n boundary vertices are enumerable up to this n.
pub const MAX_BOUNDARY_FEATURES: usize = 20;
pub const DEFAULT_THETA_STRONG: f64 = 0.7;

/// Per-feature bounds in standardized units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bounds {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl Bounds {
    /// Column-wise min/max of an n×i feature matrix (row-major rows).
    pub fn from_features(f: &[f64], n: usize) -> Bounds {
        let i = f.len() / n;
        let mut upper = vec![f64::NEG_INFINITY; n];
        let mut lower = vec![f64::INFINITY; n];
        for k in 0..n {
            for t in 0..i {
                upper[k] = upper[k].max(f[k * i + t]);
                lower[k] = lower[k].min(f[k * i + t]);
            }
        }
        Bounds { upper, lower }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Elimination {
    /// Bitmask of the removed vertex: bit j set means feature j at its
    /// upper bound.
    pub vertex: u32,
    pub pair: (usize, usize),
    pub rho: f64,
}

/// The 2^n upper/lower vertex enumeration after correlation pruning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryVertexSet {
    pub bounds: Bounds,
    /// Surviving vertices as n-vectors.
    pub vertices: Vec<Vec<f64>>,
    pub masks: Vec<u32>,
    pub eliminated: Vec<Elimination>,
}

/// Enumerate the 2^n hypercube vertices over the bounds and remove those
/// that contradict a strong feature correlation: for ρ_ij ≥ θ the mixed
/// assignments {U_i,L_j}/{L_i,U_j} go, for ρ_ij ≤ −θ the aligned ones.
pub fn build_boundary(
    bounds: &Bounds,
    corr: &CorrelationMatrix,
    theta_strong: f64,
) -> Result<BoundaryVertexSet> {
    let n = bounds.upper.len();
    assert_eq!(bounds.lower.len(), n);
    assert_eq!(corr.n(), n);
    assert!(theta_strong > 0.0 && theta_strong <= 1.0);
    if n > MAX_BOUNDARY_FEATURES {
        return Err(Error::TooManyFeatures(n));
    }

    let mut rules = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let rho = corr.get(i, j);
            if rho.abs() >= theta_strong {
                rules.push((i, j, rho));
            }
        }
    }

    let mut vertices = Vec::new();
    let mut masks = Vec::new();
    let mut eliminated = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let violation = rules.iter().find(|&&(i, j, rho)| {
            let ui = mask & (1 << i) != 0;
            let uj = mask & (1 << j) != 0;
            if rho > 0.0 {
                ui != uj
            } else {
                ui == uj
            }
        });
        match violation {
            Some(&(i, j, rho)) => eliminated.push(Elimination {
                vertex: mask,
                pair: (i, j),
                rho,
            }),
            None => {
                vertices.push(
                    (0..n)
                        .map(|k| {
                            if mask & (1 << k) != 0 {
                                bounds.upper[k]
                            } else {
                                bounds.lower[k]
                            }
                        })
                        .collect(),
                );
                masks.push(mask);
            }
        }
    }
    Ok(BoundaryVertexSet {
        bounds: bounds.clone(),
        vertices,
        masks,
        eliminated,
    })
}

/// Auto DBSCAN parameters from the instance count and coordinate ranges:
/// k = max(min(⌈r/20⌉, 50), 3) and ε = k·Γ(2)/√(rπ)·(range_z1·range_z2),
/// with Γ(2) = 1.
pub fn dbscan_params(r: usize, range_z1: f64, range_z2: f64) -> (usize, f64) {
    assert!(r >= 1 && range_z1 > 0.0 && range_z2 > 0.0);
    let k = ((r as f64 / 20.0).ceil() as usize).min(50).max(3);
    (k, dbscan_eps(k, r, range_z1, range_z2))
}

/// The ε equation alone, for a given neighbourhood size k.
pub fn dbscan_eps(k: usize, r: usize, range_z1: f64, range_z2: f64) -> f64 {
    k as f64 / (r as f64 * std::f64::consts::PI).sqrt() * (range_z1 * range_z2)
}

/// One DBSCAN cluster's footprint in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Footprint {
    pub cluster: usize,
    pub size: usize,
    pub area: f64,
    pub polygons: Vec<Polygon>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub area_is: f64,
    pub area_bound: f64,
    pub coverage_percent: f64,
    pub boundary: Polygon,
    pub footprints: Vec<Footprint>,
    pub dbscan_k: usize,
    pub dbscan_eps: f64,
    pub noise_count: usize,
}

impl CoverageReport {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<CoverageReport> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// The coverage ratio of Eq-style reporting: 100·area_IS/area_bound.
pub fn coverage_percent(area_is: f64, area_bound: f64) -> f64 {
    100.0 * area_is / area_bound
}

fn to_geo(shape: &AlphaShape) -> MultiPolygon<f64> {
    let ring = |p: &Polygon| {
        LineString::from(
            p.vertices
                .iter()
                .map(|v| Coord { x: v[0], y: v[1] })
                .collect::<Vec<_>>(),
        )
    };
    // One connected region: a single counterclockwise outer loop, the
    // clockwise loops are holes.
    let mut outer = None;
    let mut holes = Vec::new();
    for p in &shape.polygons {
        if p.signed_area() > 0.0 && outer.is_none() {
            outer = Some(ring(p));
        } else {
            holes.push(ring(p));
        }
    }
    match outer {
        Some(exterior) => MultiPolygon::new(vec![geo::Polygon::new(exterior, holes)]),
        None => MultiPolygon::new(Vec::new()),
    }
}

/// Boundary area, clustered footprints, and the coverage percentage for a
/// projected instance space.
pub fn compute_coverage(
    space: &InstanceSpace,
    model: &ProjectionModel,
    bounds: &Bounds,
    corr: &CorrelationMatrix,
    theta_strong: f64,
) -> Result<CoverageReport> {
    let boundary_set = build_boundary(bounds, corr, theta_strong)?;
    let n = model.n;
    let q = boundary_set.vertices.len();
    let mut f_vertices = vec![0.0; n * q];
    for (t, v) in boundary_set.vertices.iter().enumerate() {
        for k in 0..n {
            f_vertices[k * q + t] = v[k];
        }
    }
    let projected = project(model, &f_vertices)?;
    let boundary = convex_hull(&projected).map_err(|_| Error::DegenerateBoundary)?;
    let area_bound = polygon_area(&boundary)?;
    if area_bound <= 0.0 {
        return Err(Error::DegenerateBoundary);
    }

    let coords = &space.coords;
    let r = coords.len();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in coords {
        for d in 0..2 {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    let (k, eps) = dbscan_params(r, (hi[0] - lo[0]).max(1e-12), (hi[1] - lo[1]).max(1e-12));
    let labels = dbscan(coords, k, eps);
    let n_clusters = labels
        .iter()
        .filter_map(|l| match l {
            DbscanLabel::Cluster(c) => Some(c + 1),
            DbscanLabel::Noise => None,
        })
        .max()
        .unwrap_or(0);
    let noise_count = labels.iter().filter(|l| **l == DbscanLabel::Noise).count();

    let members: Vec<Vec<[f64; 2]>> = (0..n_clusters)
        .map(|c| {
            coords
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == DbscanLabel::Cluster(c))
                .map(|(p, _)| *p)
                .collect()
        })
        .collect();
    let shapes: Vec<AlphaShape> = members.par_iter().map(|pts| alpha_shape(pts)).collect();

    let mut union: MultiPolygon<f64> = MultiPolygon::new(Vec::new());
    for shape in &shapes {
        if !shape.degenerate {
            union = union.union(&to_geo(shape));
        }
    }
    let area_is = union.unsigned_area();

    let footprints = shapes
        .iter()
        .enumerate()
        .map(|(c, s)| Footprint {
            cluster: c,
            size: members[c].len(),
            area: s.area,
            polygons: s.polygons.clone(),
            degenerate: s.degenerate,
        })
        .collect();

    Ok(CoverageReport {
        area_is,
        area_bound,
        coverage_percent: coverage_percent(area_is, area_bound),
        boundary,
        footprints,
        dbscan_k: k,
        dbscan_eps: eps,
        noise_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::Outcome;
    use rand::Rng;

    fn uncorrelated(n: usize) -> CorrelationMatrix {
        let mut rho = vec![0.0; n * n];
        for i in 0..n {
            rho[i * n + i] = 1.0;
        }
        CorrelationMatrix {
            feature_names: (0..n).map(|k| format!("f{k}")).collect(),
            rho,
            rho_y: vec![0.0; n],
            degenerate: vec![false; n],
        }
    }

    fn unit_bounds(n: usize) -> Bounds {
        Bounds {
            upper: vec![1.0; n],
            lower: vec![-1.0; n],
        }
    }

    #[test]
    fn no_strong_correlations_keep_all_vertices() {
        let set = build_boundary(&unit_bounds(3), &uncorrelated(3), 0.7).unwrap();
        assert_eq!(set.vertices.len(), 8);
        assert!(set.eliminated.is_empty());
    }

    #[test]
    fn positive_correlation_removes_mixed_vertices() {
        let mut corr = uncorrelated(2);
        corr.rho = vec![1.0, 0.9, 0.9, 1.0];
        let set = build_boundary(&unit_bounds(2), &corr, 0.7).unwrap();
        assert_eq!(set.vertices.len(), 2);
        // Survivors are LL (mask 0) and UU (mask 3).
        assert_eq!(set.masks, vec![0b00, 0b11]);
        assert_eq!(set.eliminated.len(), 2);
    }

    #[test]
    fn negative_correlation_removes_aligned_vertices() {
        let mut corr = uncorrelated(2);
        corr.rho = vec![1.0, -0.9, -0.9, 1.0];
        let set = build_boundary(&unit_bounds(2), &corr, 0.7).unwrap();
        assert_eq!(set.masks, vec![0b01, 0b10]);
    }

    #[test]
    fn theta_one_keeps_everything_without_perfect_pairs() {
        let mut corr = uncorrelated(4);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    corr.rho[i * 4 + j] = 0.95;
                }
            }
        }
        let set = build_boundary(&unit_bounds(4), &corr, 1.0).unwrap();
        assert_eq!(set.vertices.len(), 16);
    }

    #[test]
    fn too_many_features_error() {
        let n = 21;
        assert!(matches!(
            build_boundary(&unit_bounds(n), &uncorrelated(n), 0.7),
            Err(Error::TooManyFeatures(21))
        ));
    }

    #[test]
    fn dbscan_parameter_equations() {
        assert_eq!(dbscan_params(28_946, 1.0, 1.0).0, 50);
        assert_eq!(dbscan_params(40, 1.0, 1.0).0, 3);
        let expected = 3.0 / (10.0 * std::f64::consts::PI.sqrt());
        assert!((dbscan_eps(3, 100, 1.0, 1.0) - expected).abs() < 1e-9);
    }

    #[test]
    fn coverage_formula_matches_reported_percentages() {
        assert_eq!(format!("{:.2}", coverage_percent(29.84, 91.28)), "32.69");
        assert_eq!(format!("{:.2}", coverage_percent(18.40, 36.79)), "50.01");
        assert_eq!(coverage_percent(36.79, 36.79), 100.0);
    }

    fn toy_space(scale: f64, seed: u64) -> (InstanceSpace, ProjectionModel, Bounds) {
        let mut rng_ = crate::rng::stream(seed, &[crate::rng::tag("cov-test")]);
        let coords: Vec<[f64; 2]> = (0..300)
            .map(|i| {
                let center = if i % 2 == 0 { [-2.0, 0.0] } else { [2.0, 1.0] };
                [
                    scale * (center[0] + rng_.gen_range(-1.0..1.0)),
                    scale * (center[1] + rng_.gen_range(-1.0..1.0)),
                ]
            })
            .collect();
        let space = InstanceSpace {
            instance_ids: (0..coords.len()).map(|i| format!("s{i}")).collect(),
            outcomes: vec![Outcome::Safe; coords.len()],
            coords,
        };
        let model = ProjectionModel {
            a: vec![
                scale, 0.0, 0.3 * scale, 0.0, scale, -0.2 * scale,
            ],
            b: vec![0.0; 6],
            c: [0.0; 2],
            objective: 0.0,
            n: 3,
            feature_names: Vec::new(),
            normalization: None,
            ridge_used: false,
            seed: 0,
        };
        let bounds = Bounds {
            upper: vec![4.0, 4.0, 2.0],
            lower: vec![-4.0, -4.0, -2.0],
        };
        (space, model, bounds)
    }

    #[test]
    fn coverage_is_scale_equivariant() {
        let (space1, model1, bounds) = toy_space(1.0, 3);
        let report1 =
            compute_coverage(&space1, &model1, &bounds, &uncorrelated(3), 0.7).unwrap();
        let s = 2.5;
        let space2 = InstanceSpace {
            instance_ids: space1.instance_ids.clone(),
            coords: space1.coords.iter().map(|c| [s * c[0], s * c[1]]).collect(),
            outcomes: space1.outcomes.clone(),
        };
        let mut model2 = model1.clone();
        for v in &mut model2.a {
            *v *= s;
        }
        let report2 =
            compute_coverage(&space2, &model2, &bounds, &uncorrelated(3), 0.7).unwrap();
        assert!(
            (report1.coverage_percent - report2.coverage_percent).abs() < 1e-9,
            "{} vs {}",
            report1.coverage_percent,
            report2.coverage_percent
        );
        assert!((report2.area_bound / report1.area_bound - s * s).abs() < 1e-9 * s * s);
    }

    #[test]
    fn coverage_report_is_consistent() {
        let (space, model, bounds) = toy_space(1.0, 4);
        let report = compute_coverage(&space, &model, &bounds, &uncorrelated(3), 0.7).unwrap();
        assert!(report.area_bound > 0.0);
        assert!(report.area_is > 0.0);
        assert!(report.coverage_percent > 0.0);
        assert!(report.area_is <= report.area_bound * 1.5);
        let footprint_sum: f64 = report.footprints.iter().map(|f| f.area).sum();
        // Union never exceeds the sum of parts.
        assert!(report.area_is <= footprint_sum + 1e-9);
    }
}
