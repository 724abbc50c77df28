//! Closed planar curves parametrized by Euclidean arc length.
//!
//! Domain boundaries, test circles and straight polygons all implement
//! [`ClosedCurve`] so the mesher and the diagnostics can treat them alike.
//! Orientation is counterclockwise (domain on the left).

use crate::Vec2;

pub trait ClosedCurve: Sync {
    /// Total Euclidean length.
    fn length(&self) -> f64;

    /// Number of smooth pieces.
    fn piece_count(&self) -> usize;

    /// Global arc-length interval `[start, end)` of piece `i`.
    fn piece_range(&self, i: usize) -> (f64, f64);

    /// Point at arc length `s` (taken modulo the length).
    fn point(&self, s: f64) -> Vec2;

    /// Unit tangent at arc length `s`.
    fn tangent(&self, s: f64) -> Vec2;

    /// Signed curvature `d theta / ds` (positive when turning left).
    fn curvature(&self, s: f64) -> f64;

    /// Index of the piece containing arc length `s`.
    fn piece_at(&self, s: f64) -> usize {
        let s = wrap(s, self.length());
        let n = self.piece_count();
        let mut lo = 0;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.piece_range(mid).0 <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Point on piece `i` at local parameter `t` in `[0, 1]`.
    fn piece_point(&self, i: usize, t: f64) -> Vec2 {
        let (a, b) = self.piece_range(i);
        if t >= 1.0 {
            // avoid wrapping onto the next piece's start through rounding
            return self.point_on_piece_end(i);
        }
        self.point(a + t * (b - a))
    }

    /// End point of piece `i`.
    fn point_on_piece_end(&self, i: usize) -> Vec2 {
        let (_, b) = self.piece_range(i);
        self.point(b)
    }

    /// Outward unit normal (right-hand normal of the CCW tangent).
    fn outward_normal(&self, s: f64) -> Vec2 {
        let t = self.tangent(s);
        Vec2::new(t.y, -t.x)
    }
}

/// Reduce `s` to `[0, len)`.
#[inline]
pub fn wrap(s: f64, len: f64) -> f64 {
    let r = s % len;
    if r < 0.0 {
        r + len
    } else {
        r
    }
}

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Rotate by +90 degrees.
#[inline]
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Closed polyline with straight pieces (a straight polygon boundary).
#[derive(Debug, Clone)]
pub struct PolylineCurve {
    vertices: Vec<Vec2>,
    cumulative: Vec<f64>,
}

impl PolylineCurve {
    pub fn new(vertices: Vec<Vec2>) -> Self {
        let n = vertices.len();
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        for i in 0..n {
            let d = (vertices[(i + 1) % n] - vertices[i]).norm();
            cumulative.push(cumulative[i] + d);
        }
        Self { vertices, cumulative }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }
}

impl ClosedCurve for PolylineCurve {
    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn piece_count(&self) -> usize {
        self.vertices.len()
    }

    fn piece_range(&self, i: usize) -> (f64, f64) {
        (self.cumulative[i], self.cumulative[i + 1])
    }

    fn point(&self, s: f64) -> Vec2 {
        let s = wrap(s, self.length());
        let i = self.piece_at(s);
        let (a, b) = self.piece_range(i);
        let t = (s - a) / (b - a);
        let p = self.vertices[i];
        let q = self.vertices[(i + 1) % self.vertices.len()];
        p + (q - p) * t
    }

    fn point_on_piece_end(&self, i: usize) -> Vec2 {
        self.vertices[(i + 1) % self.vertices.len()]
    }

    fn tangent(&self, s: f64) -> Vec2 {
        let i = self.piece_at(s);
        let p = self.vertices[i];
        let q = self.vertices[(i + 1) % self.vertices.len()];
        (q - p).normalize()
    }

    fn curvature(&self, _s: f64) -> f64 {
        0.0
    }
}

/// Counterclockwise circle.
#[derive(Debug, Clone, Copy)]
pub struct CircleCurve {
    pub center: Vec2,
    pub radius: f64,
}

impl CircleCurve {
    pub fn new(center: Vec2, radius: f64) -> Self {
        Self { center, radius }
    }
}

impl ClosedCurve for CircleCurve {
    fn length(&self) -> f64 {
        std::f64::consts::TAU * self.radius
    }

    fn piece_count(&self) -> usize {
        1
    }

    fn piece_range(&self, _i: usize) -> (f64, f64) {
        (0.0, self.length())
    }

    fn point(&self, s: f64) -> Vec2 {
        let phi = s / self.radius;
        self.center + Vec2::new(phi.cos(), phi.sin()) * self.radius
    }

    fn point_on_piece_end(&self, _i: usize) -> Vec2 {
        self.point(0.0)
    }

    fn tangent(&self, s: f64) -> Vec2 {
        let phi = s / self.radius;
        Vec2::new(-phi.sin(), phi.cos())
    }

    fn curvature(&self, _s: f64) -> f64 {
        1.0 / self.radius
    }
}

/// Sample a curve uniformly in arc length (`count` points, closed implicitly).
pub fn sample_uniform<C: ClosedCurve + ?Sized>(curve: &C, count: usize) -> Vec<Vec2> {
    let len = curve.length();
    (0..count).map(|k| curve.point(len * k as f64 / count as f64)).collect()
}

/// Sample each piece with `per_piece` intervals; piece endpoints included once.
pub fn sample_pieces<C: ClosedCurve + ?Sized>(curve: &C, per_piece: usize) -> Vec<(Vec2, usize)> {
    let mut out = Vec::new();
    for i in 0..curve.piece_count() {
        for k in 0..per_piece {
            out.push((curve.piece_point(i, k as f64 / per_piece as f64), i));
        }
    }
    out
}

/// Winding number of a closed polyline around `x`.
pub fn winding_number(poly: &[Vec2], x: Vec2) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a.y <= x.y {
            if b.y > x.y && cross(b - a, x - a) > 0.0 {
                wn += 1;
            }
        } else if b.y <= x.y && cross(b - a, x - a) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Signed area of a closed polyline (positive for CCW).
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>()
}

/// Euclidean distance from `x` to the closed segment `[a, b]`, with the
/// clamped projection parameter.
pub fn point_segment_distance(x: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let d = b - a;
    let len2 = d.norm_squared();
    let t = if len2 > 0.0 { ((x - a).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    ((a + d * t - x).norm(), t)
}

/// Whether closed segments `[a, b]` and `[c, d]` intersect (robust orientation).
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = crate::predicates::orient(a, b, c);
    let o2 = crate::predicates::orient(a, b, d);
    let o3 = crate::predicates::orient(c, d, a);
    let o4 = crate::predicates::orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (o1 == 0.0 && on(a, b, c))
        || (o2 == 0.0 && on(a, b, d))
        || (o3 == 0.0 && on(c, d, a))
        || (o4 == 0.0 && on(c, d, b))
}

/// Distance between closed segments `[a, b]` and `[c, d]`.
pub fn segment_segment_distance(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .0
        .min(point_segment_distance(b, c, d).0)
        .min(point_segment_distance(c, a, b).0)
        .min(point_segment_distance(d, a, b).0)
}
