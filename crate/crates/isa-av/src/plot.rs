//! Deterministic SVG scatter plots of the instance space.
//!
//! Instances are circles; colour encodes either the outcome (safe red,
//! unsafe blue) or a feature value interpolated from red (low) to blue
//! (high). Boundary and footprint polygons can be overlaid as stroked
//! paths. Output bytes depend only on the inputs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{CoverageReport, Polygon};
use crate::metadata::Outcome;
use crate::pilot::InstanceSpace;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 60.0;

/// What drives the fill colour of the instance circles.
pub enum ColorSource<'a> {
    /// Safe red, unsafe blue.
    Outcome,
    /// Red (low) to blue (high) over the feature's observed range.
    Feature { name: &'a str, values: &'a [f64] },
}

fn lerp_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * (1.0 - t)).round() as u8;
    let b = (255.0 * t).round() as u8;
    format!("rgb({r},0,{b})")
}

struct Frame {
    min: [f64; 2],
    max: [f64; 2],
}

impl Frame {
    fn around(coords: impl Iterator<Item = [f64; 2]>) -> Frame {
        let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for c in coords {
            for d in 0..2 {
                min[d] = min[d].min(c[d]);
                max[d] = max[d].max(c[d]);
            }
        }
        for d in 0..2 {
            if max[d] - min[d] < 1e-12 {
                min[d] -= 1.0;
                max[d] += 1.0;
            }
        }
        Frame { min, max }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.min[0]) / (self.max[0] - self.min[0]) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        // SVG y grows downward.
        HEIGHT - MARGIN - (v - self.min[1]) / (self.max[1] - self.min[1]) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn path_of(frame: &Frame, polygon: &Polygon) -> String {
    let mut d = String::new();
    for (i, v) in polygon.vertices.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{:.2} {:.2} ", frame.x(v[0]), frame.y(v[1]));
    }
    d.push('Z');
    d
}

/// Render the space to an SVG file. `overlay` adds the boundary polygon
/// (dashed) and cluster footprints (solid outlines).
pub fn render_svg(
    space: &InstanceSpace,
    color: ColorSource,
    overlay: Option<&CoverageReport>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let svg = render_svg_string(space, color, overlay)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn render_svg_string(
    space: &InstanceSpace,
    color: ColorSource,
    overlay: Option<&CoverageReport>,
) -> Result<String> {
    if let ColorSource::Feature { name, values } = &color {
        if values.len() != space.coords.len() {
            return Err(Error::UnknownFeature(name.to_string()));
        }
    }

    let boundary_coords = overlay
        .iter()
        .flat_map(|r| r.boundary.vertices.iter().copied())
        .collect::<Vec<_>>();
    let frame = Frame::around(
        space
            .coords
            .iter()
            .copied()
            .chain(boundary_coords.iter().copied()),
    );

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Axes.
    let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
    let (x1, y1) = (WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="16" text-anchor="middle">z1</text>"#,
        WIDTH / 2.0,
        HEIGHT - MARGIN / 3.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="16" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">z2</text>"#,
        MARGIN / 3.0,
        HEIGHT / 2.0,
        MARGIN / 3.0,
        HEIGHT / 2.0
    );

    if let Some(report) = overlay {
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="black" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
            path_of(&frame, &report.boundary)
        );
        for footprint in &report.footprints {
            for polygon in &footprint.polygons {
                let _ = writeln!(
                    out,
                    r#"<path d="{}" fill="none" stroke="dimgray" stroke-width="1"/>"#,
                    path_of(&frame, polygon)
                );
            }
        }
    }

    let (lo, hi) = match &color {
        ColorSource::Outcome => (0.0, 1.0),
        ColorSource::Feature { values, .. } => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    };
    for (i, c) in space.coords.iter().enumerate() {
        let fill = match &color {
            ColorSource::Outcome => match space.outcomes[i] {
                Outcome::Safe => "rgb(255,0,0)".to_string(),
                Outcome::Unsafe => "rgb(0,0,255)".to_string(),
            },
            ColorSource::Feature { values, .. } => {
                // Degenerate range: everything mid-scale.
                let t = if hi - lo < 1e-12 {
                    0.5
                } else {
                    (values[i] - lo) / (hi - lo)
                };
                lerp_color(t)
            }
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}" fill-opacity="0.7"/>"#,
            frame.x(c[0]),
            frame.y(c[1])
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_space() -> InstanceSpace {
        InstanceSpace {
            instance_ids: vec!["a".into(), "b".into(), "c".into()],
            coords: vec![[0.0, 0.0], [1.0, 0.5], [-1.0, 2.0]],
            outcomes: vec![Outcome::Safe, Outcome::Unsafe, Outcome::Safe],
        }
    }

    #[test]
    fn one_circle_per_instance() {
        let svg = render_svg_string(&small_space(), ColorSource::Outcome, None).unwrap();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains(">z1<"));
        assert!(svg.contains(">z2<"));
        assert!(svg.contains("rgb(255,0,0)"));
        assert!(svg.contains("rgb(0,0,255)"));
    }

    #[test]
    fn constant_feature_is_mid_scale() {
        let svg = render_svg_string(
            &small_space(),
            ColorSource::Feature {
                name: "f",
                values: &[2.0, 2.0, 2.0],
            },
            None,
        )
        .unwrap();
        assert_eq!(svg.matches("rgb(128,0,128)").count(), 3);
    }

    #[test]
    fn output_bytes_are_deterministic() {
        let a = render_svg_string(&small_space(), ColorSource::Outcome, None).unwrap();
        let b = render_svg_string(&small_space(), ColorSource::Outcome, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn feature_gradient_endpoints() {
        let svg = render_svg_string(
            &small_space(),
            ColorSource::Feature {
                name: "f",
                values: &[0.0, 5.0, 2.5],
            },
            None,
        )
        .unwrap();
        assert!(svg.contains("rgb(255,0,0)"));
        assert!(svg.contains("rgb(0,0,255)"));
        assert!(svg.contains("rgb(128,0,128)"));
    }
}
