//! Alpha-shape footprints of point clusters.
//!
//! The alpha value is not user-chosen: per cluster it is the smallest
//! circumradius threshold (binary search over the sorted triangle
//! circumradii) at which the kept Delaunay triangles form one connected
//! region touching every point of the cluster.

use std::collections::HashMap;

use delaunator::{triangulate, Point};
use serde::{Deserialize, Serialize};

use crate::geometry::polygon::Polygon;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaShape {
    /// Boundary loops: outer loops counterclockwise, holes clockwise.
    pub polygons: Vec<Polygon>,
    pub area: f64,
    pub alpha: f64,
    /// True when no triangulation exists (fewer than 3 points, collinear).
    pub degenerate: bool,
    /// Kept triangles as point-index triples (counterclockwise).
    pub triangles: Vec<[usize; 3]>,
}

impl AlphaShape {
    fn empty() -> AlphaShape {
        AlphaShape {
            polygons: Vec::new(),
            area: 0.0,
            alpha: 0.0,
            degenerate: true,
            triangles: Vec::new(),
        }
    }
}

fn circumradius(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let la = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let lb = ((c[0] - b[0]).powi(2) + (c[1] - b[1]).powi(2)).sqrt();
    let lc = ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt();
    let area2 = ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
    if area2 < 1e-300 {
        f64::INFINITY
    } else {
        la * lb * lc / (2.0 * area2)
    }
}

fn triangle_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs() / 2.0
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// True when the triangle subset is one edge-connected region whose
/// vertices include every input point.
fn covers_and_connected(kept: &[usize], triangles: &[usize], n_points: usize) -> bool {
    if kept.is_empty() {
        return false;
    }
    let mut seen = vec![false; n_points];
    let mut uf = UnionFind::new(kept.len());
    let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (slot, &t) in kept.iter().enumerate() {
        let tri = [triangles[3 * t], triangles[3 * t + 1], triangles[3 * t + 2]];
        for k in 0..3 {
            seen[tri[k]] = true;
            let (a, b) = (tri[k].min(tri[(k + 1) % 3]), tri[k].max(tri[(k + 1) % 3]));
            match edge_owner.get(&(a, b)) {
                Some(&other) => uf.union(slot, other),
                None => {
                    edge_owner.insert((a, b), slot);
                }
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return false;
    }
    let root = uf.find(0);
    (1..kept.len()).all(|slot| uf.find(slot) == root)
}

/// Boundary loops of a triangle subset: directed edges used exactly once.
fn boundary_loops(kept: &[usize], triangles: &[usize], points: &[[f64; 2]]) -> Vec<Polygon> {
    let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
    for &t in kept {
        let tri = [triangles[3 * t], triangles[3 * t + 1], triangles[3 * t + 2]];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    // Directed boundary edges keep the triangle orientation, so outer loops
    // come out counterclockwise and holes clockwise.
    let mut next: HashMap<usize, Vec<usize>> = HashMap::new();
    for &t in kept {
        let tri = [triangles[3 * t], triangles[3 * t + 1], triangles[3 * t + 2]];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if undirected[&(a.min(b), a.max(b))] == 1 {
                next.entry(a).or_default().push(b);
            }
        }
    }
    for targets in next.values_mut() {
        targets.sort_unstable();
    }
    let mut loops = Vec::new();
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    for start in starts {
        while next.get(&start).is_some_and(|v| !v.is_empty()) {
            let mut cycle = vec![start];
            let mut current = next.get_mut(&start).unwrap().remove(0);
            while current != start {
                cycle.push(current);
                let outgoing = next.get_mut(&current).expect("open boundary chain");
                current = outgoing.remove(0);
            }
            loops.push(Polygon::new(
                cycle.into_iter().map(|i| points[i]).collect(),
            ));
        }
    }
    loops
}

/// Compute the alpha shape of one cluster. Degenerate inputs (fewer than
/// three points, or no valid triangulation) give an empty, zero-area shape.
pub fn alpha_shape(points: &[[f64; 2]]) -> AlphaShape {
    if points.len() < 3 {
        return AlphaShape::empty();
    }
    let sites: Vec<Point> = points.iter().map(|p| Point { x: p[0], y: p[1] }).collect();
    let tri = triangulate(&sites);
    let n_tri = tri.triangles.len() / 3;
    if n_tri == 0 {
        return AlphaShape::empty();
    }
    // Normalise every triangle to counterclockwise so boundary loops come
    // out with outer loops CCW and holes CW.
    let mut tri_indices = tri.triangles.clone();
    for t in 0..n_tri {
        let (a, b, c) = (
            points[tri_indices[3 * t]],
            points[tri_indices[3 * t + 1]],
            points[tri_indices[3 * t + 2]],
        );
        let signed = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if signed < 0.0 {
            tri_indices.swap(3 * t + 1, 3 * t + 2);
        }
    }

    let radii: Vec<f64> = (0..n_tri)
        .map(|t| {
            circumradius(
                points[tri_indices[3 * t]],
                points[tri_indices[3 * t + 1]],
                points[tri_indices[3 * t + 2]],
            )
        })
        .collect();
    let mut thresholds: Vec<f64> = radii.clone();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();

    let kept_at = |alpha: f64| -> Vec<usize> {
        (0..n_tri).filter(|&t| radii[t] <= alpha).collect()
    };

    // Smallest threshold whose kept set is one region covering all points;
    // the full triangulation (largest threshold) always qualifies.
    let mut lo = 0usize;
    let mut hi = thresholds.len() - 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if covers_and_connected(&kept_at(thresholds[mid]), &tri_indices, points.len()) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let alpha = thresholds[lo];
    let kept = kept_at(alpha);
    let area: f64 = kept
        .iter()
        .map(|&t| {
            triangle_area(
                points[tri_indices[3 * t]],
                points[tri_indices[3 * t + 1]],
                points[tri_indices[3 * t + 2]],
            )
        })
        .sum();
    let polygons = boundary_loops(&kept, &tri_indices, points);
    let triangles = kept
        .iter()
        .map(|&t| {
            [
                tri_indices[3 * t],
                tri_indices[3 * t + 1],
                tri_indices[3 * t + 2],
            ]
        })
        .collect();
    AlphaShape {
        polygons,
        area,
        alpha,
        degenerate: false,
        triangles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hull::convex_hull;
    use crate::geometry::polygon::polygon_area;
    use rand::Rng;

    #[test]
    fn square_corners_give_the_square() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let shape = alpha_shape(&pts);
        assert!(!shape.degenerate);
        assert!((shape.area - 1.0).abs() < 1e-12);
        assert_eq!(shape.polygons.len(), 1);
        assert_eq!(shape.polygons[0].vertices.len(), 4);
        assert!(shape.polygons[0].signed_area() > 0.0);
    }

    #[test]
    fn too_few_or_collinear_points_are_degenerate() {
        assert!(alpha_shape(&[[0.0, 0.0], [1.0, 1.0]]).degenerate);
        let collinear = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let shape = alpha_shape(&collinear);
        assert!(shape.degenerate);
        assert_eq!(shape.area, 0.0);
    }

    /// Monte-Carlo area of a triangle soup over a bounding box.
    fn monte_carlo_area(triangles: &[[[f64; 2]; 3]], samples: usize, seed: u64) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for t in triangles {
            for p in t {
                for d in 0..2 {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
        }
        let inside_tri = |p: [f64; 2], t: &[[f64; 2]; 3]| {
            let sign = |a: [f64; 2], b: [f64; 2]| {
                (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            };
            let (d1, d2, d3) = (sign(t[0], t[1]), sign(t[1], t[2]), sign(t[2], t[0]));
            let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
            let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
            !(has_neg && has_pos)
        };
        let mut rng_ = crate::rng::stream(seed, &[crate::rng::tag("mc-area")]);
        let mut hits = 0usize;
        for _ in 0..samples {
            let p = [
                rng_.gen_range(lo[0]..hi[0]),
                rng_.gen_range(lo[1]..hi[1]),
            ];
            if triangles.iter().any(|t| inside_tri(p, t)) {
                hits += 1;
            }
        }
        (hi[0] - lo[0]) * (hi[1] - lo[1]) * hits as f64 / samples as f64
    }

    #[test]
    fn c_shape_area_matches_monte_carlo_and_beats_hull() {
        // Dense samples of an annulus sector (a thick "C").
        let mut pts = Vec::new();
        for i in 0..40 {
            let theta = 0.25 + (2.0 * std::f64::consts::PI - 0.5) * i as f64 / 39.0;
            for j in 0..5 {
                let r = 2.0 + j as f64 * 0.25;
                pts.push([r * theta.cos(), r * theta.sin()]);
            }
        }
        let shape = alpha_shape(&pts);
        assert!(!shape.degenerate);
        let tris: Vec<[[f64; 2]; 3]> = shape
            .triangles
            .iter()
            .map(|t| [pts[t[0]], pts[t[1]], pts[t[2]]])
            .collect();
        let mc = monte_carlo_area(&tris, 1_000_000, 7);
        assert!(
            (shape.area - mc).abs() <= 0.02 * mc,
            "alpha {} vs monte carlo {}",
            shape.area,
            mc
        );
        let hull_area = polygon_area(&convex_hull(&pts).unwrap()).unwrap();
        assert!(shape.area < hull_area);
    }

    #[test]
    fn alpha_area_never_exceeds_hull_area() {
        let mut rng_ = crate::rng::stream(21, &[crate::rng::tag("alpha-hull")]);
        for _ in 0..20 {
            let pts: Vec<[f64; 2]> = (0..30)
                .map(|_| [rng_.gen_range(0.0..3.0), rng_.gen_range(0.0..3.0)])
                .collect();
            let shape = alpha_shape(&pts);
            if shape.degenerate {
                continue;
            }
            let hull_area = polygon_area(&convex_hull(&pts).unwrap()).unwrap();
            assert!(shape.area <= hull_area + 1e-9);
        }
    }
}
