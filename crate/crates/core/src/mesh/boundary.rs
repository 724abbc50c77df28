//! Sizing-driven sampling of a closed boundary.

use super::SizingField;
use crate::curve::ClosedCurve;
use crate::Vec2;

/// Boundary sample with its piece and global arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryVertex {
    pub point: Vec2,
    pub piece: usize,
    pub s: f64,
}

/// Chord between consecutive samples; `s0 < s1` lie on the same piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub a: usize,
    pub b: usize,
    pub piece: usize,
    pub s0: f64,
    pub s1: f64,
}

/// Closed, marked polyline approximating a boundary.
#[derive(Debug, Clone)]
pub struct BoundaryPolyline {
    pub vertices: Vec<BoundaryVertex>,
    pub segments: Vec<BoundarySegment>,
}

impl BoundaryPolyline {
    pub fn length(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| (self.vertices[s.b].point - self.vertices[s.a].point).norm())
            .sum()
    }

    pub fn points(&self) -> Vec<Vec2> {
        self.vertices.iter().map(|v| v.point).collect()
    }
}

/// Sample every piece with `N = ceil(int ds / h)` intervals equidistributed in
/// `ds / h` (at least two on curved pieces). Piece endpoints are always kept.
pub fn discretize_boundary<C: ClosedCurve + ?Sized>(curve: &C, sizing: &SizingField) -> BoundaryPolyline {
    let mut vertices = Vec::new();
    for i in 0..curve.piece_count() {
        let (a, b) = curve.piece_range(i);
        let density = |s: f64| 1.0 / sizing.size(curve.point(s));
        let coarse = cumulative(&density, a, b, 64);
        let panels = (16.0 * coarse.last().unwrap().ceil()).max(64.0) as usize;
        let table = cumulative(&density, a, b, panels);
        let total = *table.last().unwrap();
        let curved = curve.curvature(0.5 * (a + b)) != 0.0 || curve.curvature(a + 0.25 * (b - a)) != 0.0;
        let count = (total.ceil() as usize).max(if curved { 2 } else { 1 });
        let h = (b - a) / panels as f64;
        let mut panel = 0;
        for k in 0..count {
            let target = total * k as f64 / count as f64;
            while panel + 1 < panels && table[panel + 1] < target {
                panel += 1;
            }
            let s = if k == 0 {
                a
            } else {
                let (f0, f1) = (table[panel], table[panel + 1]);
                let frac = if f1 > f0 { (target - f0) / (f1 - f0) } else { 0.0 };
                a + h * (panel as f64 + frac)
            };
            vertices.push(BoundaryVertex { point: if k == 0 { curve.piece_point(i, 0.0) } else { curve.point(s) }, piece: i, s });
        }
    }
    let m = vertices.len();
    let segments = (0..m)
        .map(|k| {
            let next = (k + 1) % m;
            let piece = vertices[k].piece;
            let s1 = if next != 0 && vertices[next].piece == piece { vertices[next].s } else { curve.piece_range(piece).1 };
            BoundarySegment { a: k, b: next, piece, s0: vertices[k].s, s1 }
        })
        .collect();
    BoundaryPolyline { vertices, segments }
}

/// Cumulative midpoint-rule integral of `f` on `panels` equal panels.
fn cumulative<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> Vec<f64> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels + 1);
    out.push(0.0);
    for k in 0..panels {
        let v = out[k] + h * f(a + h * (k as f64 + 0.5));
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{construct_rounded_domain, Polygon, RoundingParams};

    #[test]
    fn uniform_square_spacing() {
        let sq = Polygon::preset("square").unwrap();
        let d = construct_rounded_domain(&sq, &RoundingParams::new(0.4, 0.05, 1)).unwrap();
        let poly = discretize_boundary(&d, &SizingField::uniform(0.1).unwrap());
        for piece in (1..8).step_by(2) {
            let (a, b) = d.piece_range(piece);
            let count = poly.segments.iter().filter(|s| s.piece == piece).count();
            assert!(count >= ((b - a) / 0.1).ceil() as usize);
        }
        for seg in &poly.segments {
            let chord = (poly.vertices[seg.b].point - poly.vertices[seg.a].point).norm();
            assert!(chord <= 0.1 + 1e-9);
        }
    }

    #[test]
    fn arc_samples_on_curve_and_length_converges() {
        let sq = Polygon::preset("square").unwrap();
        let d = construct_rounded_domain(&sq, &RoundingParams::new(0.4, 0.05, 1)).unwrap();
        let len = d.length();
        let mut prev = 0.0;
        let mut errors = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let poly = discretize_boundary(&d, &SizingField::uniform(h).unwrap());
            for v in &poly.vertices {
                assert!((d.point(v.s) - v.point).norm() < 1e-10);
            }
            let l = poly.length();
            assert!(l > prev && l <= len + 1e-12);
            prev = l;
            errors.push(len - l);
        }
        assert!(errors[1] / errors[2] > 3.0, "{errors:?}");
    }
}
