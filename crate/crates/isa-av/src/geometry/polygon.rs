//! Plain vertex-list polygons and their areas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple polygon as an ordered vertex list, counterclockwise for positive
/// regions, implicitly closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
}

fn segments_properly_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Polygon {
        Polygon { vertices }
    }

    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        let mut sum = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            sum += v[i][0] * v[j][1] - v[j][0] * v[i][1];
        }
        sum / 2.0
    }

    /// True when no two non-adjacent edges properly cross.
    pub fn is_simple(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // Skip adjacent edges (shared endpoint).
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_properly_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return false;
                }
            }
        }
        true
    }
}

/// |shoelace| / 2 of a simple polygon.
pub fn polygon_area(p: &Polygon) -> Result<f64> {
    if !p.is_simple() {
        return Err(Error::NotSimple);
    }
    Ok(p.signed_area().abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square() {
        let p = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(polygon_area(&p).unwrap(), 1.0);
        assert!(p.signed_area() > 0.0);
    }

    #[test]
    fn right_triangle() {
        let p = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(polygon_area(&p).unwrap(), 0.5);
    }

    #[test]
    fn regular_hexagon() {
        let p = Polygon::new(
            (0..6)
                .map(|i| {
                    let t = std::f64::consts::PI / 3.0 * i as f64;
                    [t.cos(), t.sin()]
                })
                .collect(),
        );
        let expected = 3.0 * 3f64.sqrt() / 2.0;
        assert!((polygon_area(&p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn bowtie_is_rejected() {
        let p = Polygon::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(!p.is_simple());
        assert!(matches!(polygon_area(&p), Err(Error::NotSimple)));
    }
}
