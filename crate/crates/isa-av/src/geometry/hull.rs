//! Convex hull by Andrew's monotone chain.

use crate::error::{Error, Result};
use crate::geometry::polygon::Polygon;

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counterclockwise convex hull with collinear boundary points omitted.
/// Errors when all points are (numerically) collinear.
pub fn convex_hull(points: &[[f64; 2]]) -> Result<Polygon> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::DegenerateHull);
    }

    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    // A straight point set collapses to fewer than 3 distinct vertices.
    if lower.len() < 3 {
        return Err(Error::DegenerateHull);
    }
    Ok(Polygon::new(lower))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon::polygon_area;
    use rand::Rng;

    /// O(n³) hull: a point is a hull vertex iff some directed edge through
    /// it keeps all other points strictly to its left.
    pub fn brute_force_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let mut pts: Vec<[f64; 2]> = points.to_vec();
        pts.sort_by(|a, b| {
            a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap())
        });
        pts.dedup();
        let n = pts.len();
        let mut on_hull = Vec::new();
        for i in 0..n {
            let mut vertex = false;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut all_left = true;
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    if cross(pts[i], pts[j], pts[k]) <= 0.0 {
                        all_left = false;
                        break;
                    }
                }
                if all_left {
                    vertex = true;
                    break;
                }
            }
            if vertex {
                on_hull.push(pts[i]);
            }
        }
        on_hull
    }

    #[test]
    fn square_with_center() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.vertices.len(), 4);
        assert!(hull.signed_area() > 0.0);
        assert_eq!(polygon_area(&hull).unwrap(), 1.0);
    }

    #[test]
    fn triangle_is_its_own_hull() {
        let pts = [[0.0, 0.0], [2.0, 0.0], [1.0, 1.0]];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.vertices.len(), 3);
    }

    #[test]
    fn collinear_points_error() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        assert!(matches!(convex_hull(&pts), Err(Error::DegenerateHull)));
    }

    #[test]
    fn collinear_boundary_points_are_omitted() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.vertices.len(), 4);
        assert!(!hull.vertices.contains(&[1.0, 0.0]));
    }

    #[test]
    fn matches_brute_force_on_random_sets() {
        let mut rng_ = crate::rng::stream(12, &[crate::rng::tag("hull-test")]);
        for _ in 0..100 {
            let pts: Vec<[f64; 2]> = (0..50)
                .map(|_| [rng_.gen_range(-5.0..5.0), rng_.gen_range(-5.0..5.0)])
                .collect();
            let hull = convex_hull(&pts).unwrap();
            let mut fast: Vec<[f64; 2]> = hull.vertices.clone();
            fast.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut brute = brute_force_hull(&pts);
            brute.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(fast, brute);
        }
    }

    #[test]
    fn hull_area_grows_with_the_point_set() {
        let mut rng_ = crate::rng::stream(13, &[crate::rng::tag("hull-mono")]);
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|_| [rng_.gen_range(-1.0..1.0), rng_.gen_range(-1.0..1.0)])
            .collect();
        let sub_area = polygon_area(&convex_hull(&pts[..20]).unwrap()).unwrap();
        let full_area = polygon_area(&convex_hull(&pts).unwrap()).unwrap();
        assert!(full_area >= sub_area - 1e-12);
    }
}
