//! Road-test parsing and the 15 structural road features.
//!
//! A road test is a JSON object with a `road_points` array of `[x, y]` pairs
//! (the road spine, in meters) and a `test_outcome` of `FAIL` or `PASS`.
//! Features are computed from per-vertex heading changes: vertices turning
//! by at least the straight threshold are grouped into maximal same-sign
//! turn segments, everything else into straight segments.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::metadata::{MetadataTable, Outcome};

use super::FeatureVector;

/// Per-vertex heading changes below this many degrees count as straight.
pub const DEFAULT_STRAIGHT_THRESHOLD_DEG: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct RoadTest {
    pub test_id: String,
    pub points: Vec<[f64; 2]>,
    pub outcome: Outcome,
    /// `is_valid` from the source document; invalid tests are skipped.
    pub valid: bool,
}

/// Result of extracting a whole road-test directory.
#[derive(Debug)]
pub struct RoadSuite {
    pub table: MetadataTable,
    pub skipped: usize,
    pub straight_threshold_deg: f64,
}

/// Parse a road-test document. Exactly-repeated consecutive points are
/// collapsed; `FAIL` maps to Unsafe and `PASS` to Safe.
pub fn parse_road(bytes: &[u8]) -> Result<RoadTest> {
    let doc: Value = serde_json::from_slice(bytes)?;
    let Value::Object(map) = doc else {
        return Err(Error::NotAnObject);
    };
    let raw = map
        .get("road_points")
        .and_then(Value::as_array)
        .ok_or(Error::TooFewPoints)?;
    let mut points: Vec<[f64; 2]> = Vec::with_capacity(raw.len());
    for (i, pair) in raw.iter().enumerate() {
        let coords = pair.as_array().ok_or(Error::MalformedPoint(i))?;
        if coords.len() < 2 {
            return Err(Error::MalformedPoint(i));
        }
        let x = coords[0].as_f64().ok_or(Error::MalformedPoint(i))?;
        let y = coords[1].as_f64().ok_or(Error::MalformedPoint(i))?;
        if points.last() != Some(&[x, y]) {
            points.push([x, y]);
        }
    }
    if points.len() < 2 {
        return Err(Error::TooFewPoints);
    }
    let outcome_text = map
        .get("test_outcome")
        .and_then(Value::as_str)
        .unwrap_or("");
    let outcome = match outcome_text {
        "FAIL" => Outcome::Unsafe,
        "PASS" => Outcome::Safe,
        other => return Err(Error::BadRoadOutcome(other.to_string())),
    };
    Ok(RoadTest {
        test_id: map
            .get("test_id")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string(),
        points,
        outcome,
        valid: map.get("is_valid").and_then(Value::as_bool).unwrap_or(true),
    })
}

const ROAD_FEATURES: [&str; 15] = [
    "min_angle",
    "max_angle",
    "mean_angle",
    "median_angle",
    "std_angle",
    "total_angle",
    "min_pivot_off",
    "max_pivot_off",
    "mean_pivot_off",
    "median_pivot_off",
    "std_pivot_off",
    "num_l_turns",
    "num_r_turns",
    "num_straights",
    "road_distance",
];

/// The 15 road feature names, in column order.
pub fn road_feature_names() -> Vec<String> {
    ROAD_FEATURES.iter().map(|s| s.to_string()).collect()
}

/// Signed heading change at vertex `b`, in degrees. Positive is a left
/// (counterclockwise) turn.
fn turn_angle_deg(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1]];
    let v = [c[0] - b[0], c[1] - b[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.atan2(dot).to_degrees()
}

/// Circumradius of the triangle `abc`; `None` when collinear.
fn circumradius(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<f64> {
    let la = ((b[0] - c[0]).powi(2) + (b[1] - c[1]).powi(2)).sqrt();
    let lb = ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt();
    let lc = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let area2 = cross.abs();
    if area2 < 1e-12 * la * lb {
        return None;
    }
    Some(la * lb * lc / (2.0 * area2))
}

#[derive(PartialEq, Clone, Copy)]
enum VertexClass {
    Straight,
    Left,
    Right,
}

fn population_std(vals: &[f64]) -> f64 {
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt()
}

fn median(vals: &[f64]) -> f64 {
    let mut sorted = vals.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn five_stats(vals: &[f64]) -> [Option<f64>; 5] {
    if vals.is_empty() {
        return [None; 5];
    }
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    [
        Some(min),
        Some(max),
        Some(mean),
        Some(median(vals)),
        Some(population_std(vals)),
    ]
}

/// Compute the 15 structural road features.
///
/// Turn angles are summed absolute per-vertex heading changes in degrees;
/// `pivot_off` is the mean circumradius of the consecutive point triples of
/// a turn segment (collinear triples excluded). A road with zero turn
/// segments yields missing angle/pivot statistics.
pub fn extract_road_features(
    road: &RoadTest,
    straight_threshold_deg: f64,
) -> Result<FeatureVector> {
    let pts = &road.points;
    if pts.len() < 2 {
        return Err(Error::TooFewPoints);
    }
    let road_distance: f64 = pts
        .windows(2)
        .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
        .sum();

    let classes: Vec<(VertexClass, f64, Option<f64>)> = (1..pts.len().saturating_sub(1))
        .map(|i| {
            let angle = turn_angle_deg(pts[i - 1], pts[i], pts[i + 1]);
            let class = if angle.abs() < straight_threshold_deg {
                VertexClass::Straight
            } else if angle > 0.0 {
                VertexClass::Left
            } else {
                VertexClass::Right
            };
            (class, angle, circumradius(pts[i - 1], pts[i], pts[i + 1]))
        })
        .collect();

    let mut turn_angles: Vec<f64> = Vec::new();
    let mut pivot_offs: Vec<f64> = Vec::new();
    let mut num_l = 0usize;
    let mut num_r = 0usize;
    let mut num_straights = 0usize;
    let mut run_start = 0usize;
    while run_start < classes.len() {
        let class = classes[run_start].0;
        let mut run_end = run_start + 1;
        while run_end < classes.len() && classes[run_end].0 == class {
            run_end += 1;
        }
        let run = &classes[run_start..run_end];
        match class {
            VertexClass::Straight => num_straights += 1,
            VertexClass::Left | VertexClass::Right => {
                if class == VertexClass::Left {
                    num_l += 1;
                } else {
                    num_r += 1;
                }
                turn_angles.push(run.iter().map(|(_, a, _)| a.abs()).sum());
                let radii: Vec<f64> = run.iter().filter_map(|(_, _, r)| *r).collect();
                if !radii.is_empty() {
                    pivot_offs.push(radii.iter().sum::<f64>() / radii.len() as f64);
                }
            }
        }
        run_start = run_end;
    }
    // A road with no interior vertices is a single straight segment.
    if classes.is_empty() {
        num_straights = 1;
    }

    let angle_stats = five_stats(&turn_angles);
    let pivot_stats = five_stats(&pivot_offs);
    let total_angle: f64 = turn_angles.iter().sum();

    let values: Vec<Option<f64>> = vec![
        angle_stats[0],
        angle_stats[1],
        angle_stats[2],
        angle_stats[3],
        angle_stats[4],
        Some(total_angle),
        pivot_stats[0],
        pivot_stats[1],
        pivot_stats[2],
        pivot_stats[3],
        pivot_stats[4],
        Some(num_l as f64),
        Some(num_r as f64),
        Some(num_straights as f64),
        Some(road_distance),
    ];

    Ok(FeatureVector {
        names: road_feature_names(),
        values,
        outcome: road.outcome,
    })
}
