//! Straight polygons and their explicit rounded families.
//!
//! Vertex `j` is rounded by a smooth arc `c_j` running from `q_j` (next to
//! edge `j - 1`) to `q'_j` (next to edge `j`). The arc lives inside the ball of
//! radius `rho / (2n)` around the puncture `p_{jn}`, which sits on the
//! exterior bisectrix at distance `rho / (2n)` from `p_j`. The boundary of
//! `Omega_n` is `c_0, l_0, c_1, l_1, ...` with `l_j = [q'_j, q_{j+1}]` parallel
//! to edge `j`. Every object at index `n` is the image of the `n = 1` object
//! under the homothety centered at the vertex with ratio `1/n`.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use thiserror::Error;

use crate::bump::{smoothstep, smoothstep_derivative};
use crate::curve::{cross, point_segment_distance, segment_segment_distance, segments_intersect, winding_number, ClosedCurve, PolylineCurve};
use crate::quadrature::gl16;
use crate::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex coordinates must be finite")]
    NonFinite,
    #[error("vertex {0} duplicates an earlier vertex")]
    DuplicateVertex(usize),
    #[error("polygon boundary is not simple: edges {0} and {1} meet")]
    NonSimple(usize, usize),
    #[error("degenerate interior angle {angle} at vertex {vertex}")]
    DegenerateAngle { vertex: usize, angle: f64 },
    #[error("vertex index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("invalid rounding parameters: {0}")]
    InvalidParams(String),
    #[error("punctures {i} and {j} are {distance} apart, less than {required}")]
    SeparationViolated { i: usize, j: usize, distance: f64, required: f64 },
    #[error("junction points infeasible at vertex {vertex}: {reason}")]
    Infeasible { vertex: usize, reason: String },
    #[error("shooting for the junction curve at vertex {0} did not converge")]
    ShootingDiverged(usize),
    #[error("junction curve at vertex {0} leaves its ball")]
    ContainmentViolated(usize),
    #[error("junction curve at vertex {0} does not separate the vertex from its puncture")]
    ArcSeparation(usize),
    #[error("rounded boundary self-intersects near pieces {0} and {1}")]
    SelfIntersection(usize, usize),
    #[error("rounded domain does not contain the closed polygon")]
    NotContaining,
    #[error("puncture {0} lies in the closed rounded domain")]
    PunctureInside(usize),
    #[error("no feasible offset distance after {0} halvings")]
    NoFeasibleRhoPrime(usize),
    #[error("unknown polygon preset '{0}'")]
    UnknownPreset(String),
    #[error("invalid polygon json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// `h_{c, ratio}(x) = c + ratio (x - c)`.
#[inline]
pub fn homothety(center: Vec2, ratio: f64, x: Vec2) -> Vec2 {
    center + (x - center) * ratio
}

#[inline]
fn rotate(v: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

#[inline]
fn unit(angle: f64) -> Vec2 {
    Vec2::new(angle.cos(), angle.sin())
}

/// Simple counterclockwise polygon with precomputed angles and separation.
#[derive(Debug, Clone)]
pub struct Polygon {
    vertices: Vec<Vec2>,
    angles: Vec<f64>,
    r0: f64,
}

impl Polygon {
    /// Validate a vertex list; clockwise input is reversed.
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self> {
        let count = vertices.len();
        if count < 3 {
            return Err(GeometryError::TooFewVertices(count));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        for j in 1..count {
            if vertices[..j].iter().any(|v| *v == vertices[j]) {
                return Err(GeometryError::DuplicateVertex(j));
            }
        }
        for i in 0..count {
            for k in (i + 2)..count {
                if i == 0 && k == count - 1 {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % count]);
                let (c, d) = (vertices[k], vertices[(k + 1) % count]);
                if segments_intersect(a, b, c, d) {
                    return Err(GeometryError::NonSimple(i, k));
                }
            }
        }
        let area = crate::curve::signed_area(&vertices);
        if area == 0.0 {
            return Err(GeometryError::NonSimple(0, 1));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let angles: Vec<f64> = (0..count)
            .map(|j| {
                let p = vertices[j];
                let next = vertices[(j + 1) % count] - p;
                let prev = vertices[(j + count - 1) % count] - p;
                cross(next, prev).atan2(next.dot(&prev)).rem_euclid(TAU)
            })
            .collect();
        for (j, &angle) in angles.iter().enumerate() {
            if angle <= 1e-12 || angle >= TAU - 1e-12 {
                return Err(GeometryError::DegenerateAngle { vertex: j, angle });
            }
        }
        let mut r0 = f64::INFINITY;
        if count == 3 {
            for j in 0..3 {
                let (d, _) = point_segment_distance(vertices[j], vertices[(j + 1) % 3], vertices[(j + 2) % 3]);
                r0 = r0.min(d);
            }
        } else {
            for i in 0..count {
                for k in (i + 2)..count {
                    if i == 0 && k == count - 1 {
                        continue;
                    }
                    let d = segment_segment_distance(
                        vertices[i],
                        vertices[(i + 1) % count],
                        vertices[k],
                        vertices[(k + 1) % count],
                    );
                    r0 = r0.min(d);
                }
            }
        }
        Ok(Self { vertices, angles, r0 })
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| Vec2::new(p[0], p[1])).collect())
    }

    /// Parse a JSON array of `[x, y]` pairs.
    pub fn from_json(text: &str) -> Result<Self> {
        let pairs: Vec<[f64; 2]> = serde_json::from_str(text).map_err(|e| GeometryError::Json(e.to_string()))?;
        Self::from_pairs(&pairs)
    }

    /// Named presets: `square`, `lshape`, `star5`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "square" => Self::from_pairs(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
            "lshape" => Self::from_pairs(&[[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]),
            "star5" => {
                let pts = (0..10)
                    .map(|k| {
                        let radius = if k % 2 == 0 { 1.0 } else { 0.5 };
                        let phi = PI / 2.0 + k as f64 * PI / 5.0;
                        Vec2::new(radius * phi.cos(), radius * phi.sin())
                    })
                    .collect();
                Self::new(pts)
            }
            other => Err(GeometryError::UnknownPreset(other.to_string())),
        }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertex with cyclic indexing.
    pub fn vertex(&self, j: isize) -> Vec2 {
        self.vertices[j.rem_euclid(self.len() as isize) as usize]
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angle(&self, j: usize) -> f64 {
        self.angles[j]
    }

    pub fn alpha_max(&self) -> f64 {
        self.angles.iter().cloned().fold(0.0, f64::max)
    }

    pub fn alpha_min(&self) -> f64 {
        self.angles.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Minimal distance between non-adjacent edges.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Separation radius `R = R0 / 2`.
    pub fn separation_radius(&self) -> f64 {
        self.r0 / 2.0
    }

    /// Expected regularity threshold `pi / alpha_max`.
    pub fn delta(&self) -> f64 {
        PI / self.alpha_max()
    }

    /// Edge `j` runs from vertex `j` to vertex `j + 1`.
    pub fn edge(&self, j: usize) -> (Vec2, Vec2) {
        (self.vertices[j], self.vertices[(j + 1) % self.len()])
    }

    pub fn area(&self) -> f64 {
        crate::curve::signed_area(&self.vertices)
    }

    pub fn contains(&self, x: Vec2) -> bool {
        winding_number(&self.vertices, x) != 0
    }

    /// Nearest edge to `x`: `(distance, edge index, projection parameter)`.
    pub fn nearest_edge(&self, x: Vec2) -> (f64, usize, f64) {
        let mut best = (f64::INFINITY, 0, 0.0);
        for j in 0..self.len() {
            let (a, b) = self.edge(j);
            let (d, t) = point_segment_distance(x, a, b);
            if d < best.0 {
                best = (d, j, t);
            }
        }
        best
    }

    /// Euclidean distance to the closed polygon (zero inside).
    pub fn distance(&self, x: Vec2) -> f64 {
        if self.contains(x) {
            return 0.0;
        }
        self.nearest_edge(x).0
    }

    /// Unit direction bisecting the exterior angle at vertex `j`.
    pub fn exterior_bisectrix(&self, j: usize) -> Result<Vec2> {
        if j >= self.len() {
            return Err(GeometryError::IndexOutOfRange(j));
        }
        let next = (self.vertex(j as isize + 1) - self.vertices[j]).normalize();
        Ok(-rotate(next, self.angles[j] / 2.0))
    }

    pub fn boundary_curve(&self) -> PolylineCurve {
        PolylineCurve::new(self.vertices.clone())
    }
}

/// Rounding radius, offset distance and family index.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RoundingParams {
    pub rho: f64,
    pub rho_prime: f64,
    pub n: u32,
}

impl RoundingParams {
    pub fn new(rho: f64, rho_prime: f64, n: u32) -> Self {
        Self { rho, rho_prime, n }
    }

    /// Same radii at another family index.
    pub fn at(&self, n: u32) -> Self {
        Self { n, ..*self }
    }

    /// Radius `rho / (2n)` of the ball holding the arc.
    pub fn ball_radius(&self) -> f64 {
        self.rho / (2.0 * self.n as f64)
    }

    /// Offset `rho' / n` of the junction points from the polygon.
    pub fn offset(&self) -> f64 {
        self.rho_prime / self.n as f64
    }

    pub fn validate(&self, polygon: &Polygon) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < polygon.r0() / 2.0) {
            return Err(GeometryError::InvalidParams(format!("rho = {} outside (0, {})", self.rho, polygon.r0() / 2.0)));
        }
        if !(self.rho_prime > 0.0 && self.rho_prime <= self.rho / 4.0) {
            return Err(GeometryError::InvalidParams(format!(
                "rho' = {} outside (0, rho/4 = {}]",
                self.rho_prime,
                self.rho / 4.0
            )));
        }
        if self.n == 0 {
            return Err(GeometryError::InvalidParams("n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Puncture set `V_n`: `p_j + rho/(2n) b_j`.
pub fn rounding_centers(polygon: &Polygon, params: &RoundingParams) -> Result<Vec<Vec2>> {
    let centers: Vec<Vec2> = (0..polygon.len())
        .map(|j| Ok(polygon.vertices[j] + polygon.exterior_bisectrix(j)? * params.ball_radius()))
        .collect::<Result<_>>()?;
    let required = polygon.separation_radius();
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            let distance = (centers[i] - centers[j]).norm();
            if distance < required {
                return Err(GeometryError::SeparationViolated { i, j, distance, required });
            }
        }
    }
    Ok(centers)
}

const ROOT_SAMPLES: usize = 1024;

/// Junction points `(q_j, q'_j)` at index `n`: the `n = 1` pair found by
/// bracketed root finding on the ball boundary, mapped by the homothety.
pub fn junction_points(polygon: &Polygon, params: &RoundingParams, j: usize) -> Result<(Vec2, Vec2)> {
    params.validate(polygon)?;
    let (q, qp) = template_junction_points(polygon, &params.at(1), j)?;
    let p = polygon.vertices[j];
    let ratio = 1.0 / params.n as f64;
    Ok((homothety(p, ratio, q), homothety(p, ratio, qp)))
}

fn template_junction_points(polygon: &Polygon, params: &RoundingParams, j: usize) -> Result<(Vec2, Vec2)> {
    let infeasible = |reason: &str| GeometryError::Infeasible { vertex: j, reason: reason.to_string() };
    let b = polygon.exterior_bisectrix(j)?;
    let radius = params.ball_radius();
    let p = polygon.vertices[j];
    let center = p + b * radius;
    let offset = params.offset();
    // phi = 0 at the antipode of p_j, phi = +-pi at p_j
    let at = |phi: f64| center + rotate(b, phi) * radius;
    let g = |phi: f64| polygon.distance(at(phi)) - offset;
    let mut roots = Vec::with_capacity(2);
    for side in [1.0, -1.0] {
        let mut found = Vec::new();
        let mut prev_phi = 0.0;
        let mut prev = g(0.0);
        if prev <= 0.0 {
            return Err(infeasible("the far side of the ball is too close to the polygon"));
        }
        for k in 1..=ROOT_SAMPLES {
            let phi = side * PI * k as f64 / ROOT_SAMPLES as f64;
            let val = g(phi);
            if (prev > 0.0) != (val > 0.0) {
                found.push((prev_phi, phi));
            }
            prev_phi = phi;
            prev = val;
        }
        // the last sample is p_j itself where g = -offset, so there is at least one change
        if found.len() != 1 {
            return Err(infeasible(&format!("{} offset crossings on one side of the bisectrix", found.len())));
        }
        let (mut lo, mut hi) = found[0];
        let positive_lo = g(lo) > 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if (g(mid) > 0.0) == positive_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(at(0.5 * (lo + hi)));
    }
    let prev_vertex = polygon.vertex(j as isize - 1);
    let side_prev = cross(b, prev_vertex - p).signum();
    let (q, qp) = if cross(b, roots[0] - center).signum() == side_prev {
        (roots[0], roots[1])
    } else {
        (roots[1], roots[0])
    };
    let prev_edge = (j + polygon.len() - 1) % polygon.len();
    for (point, edge) in [(q, prev_edge), (qp, j)] {
        let (_, nearest, t) = polygon.nearest_edge(point);
        if nearest != edge || t <= 0.0 || t >= 1.0 {
            return Err(infeasible("nearest polygon point is not a perpendicular foot on an adjacent edge"));
        }
    }
    Ok((q, qp))
}

/// Intervals in the cumulative position table of an arc.
const TABLE: usize = 64;
const MAX_SHOOTING_STEPS: usize = 100;

/// Smooth arc whose tangent angle ramps from `theta_in` to `theta_in + turn`:
/// `theta(s) = theta_in + turn * S((s/L)^gamma)` with `gamma = ln(1/2) / ln(m)`,
/// so half the turn is done at `s = m L`.
#[derive(Debug, Clone)]
pub struct SmoothArc {
    start: Vec2,
    theta_in: f64,
    turn: f64,
    length: f64,
    skew: f64,
    gamma: f64,
    nodes: Vec<Vec2>,
}

#[inline]
fn gamma_of(skew: f64) -> f64 {
    0.5f64.ln() / skew.ln()
}

#[inline]
fn ramp(t: f64, gamma: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    smoothstep(t.min(1.0).powf(gamma))
}

#[inline]
fn ramp_derivative(t: f64, gamma: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    smoothstep_derivative(t.powf(gamma)) * gamma * t.powf(gamma - 1.0)
}

/// Positions of the unit-length arc at `k / TABLE`, relative to its start.
fn unit_table(theta_in: f64, turn: f64, gamma: f64) -> Vec<Vec2> {
    let rule = gl16();
    let mut nodes = Vec::with_capacity(TABLE + 1);
    let mut acc = Vec2::zeros();
    nodes.push(acc);
    let h = 1.0 / TABLE as f64;
    for k in 0..TABLE {
        let a = k as f64 * h;
        let x = rule.integrate(a, a + h, |t| (theta_in + turn * ramp(t, gamma)).cos());
        let y = rule.integrate(a, a + h, |t| (theta_in + turn * ramp(t, gamma)).sin());
        acc += Vec2::new(x, y);
        nodes.push(acc);
    }
    nodes
}

impl SmoothArc {
    fn build(start: Vec2, theta_in: f64, turn: f64, length: f64, skew: f64) -> Self {
        let gamma = gamma_of(skew);
        let nodes = unit_table(theta_in, turn, gamma).into_iter().map(|v| start + v * length).collect();
        Self { start, theta_in, turn, length, skew, gamma, nodes }
    }

    /// Solve for length and skew so the arc starting at `start` with heading
    /// `theta_in` and total turn `turn` ends at `end`.
    pub fn shoot(start: Vec2, end: Vec2, theta_in: f64, turn: f64) -> Option<Self> {
        let chord = end - start;
        let scale = chord.norm();
        if scale == 0.0 {
            return None;
        }
        if turn.abs() < 1e-12 {
            let arc = Self::build(start, theta_in, 0.0, scale, 0.5);
            return ((arc.end() - end).norm() <= 1e-12 * scale).then_some(arc);
        }
        let direction = |m: f64| unit_table(theta_in, turn, gamma_of(m))[TABLE];
        let mut m = 0.5;
        let mut length = scale / direction(m).norm();
        for _ in 0..MAX_SHOOTING_STEPS {
            let d = direction(m);
            let residual = start + d * length - end;
            if residual.norm() <= 1e-14 * scale {
                return Some(Self::build(start, theta_in, turn, length, m));
            }
            let h = 1e-6 * m.min(1.0 - m);
            let dm = (direction(m + h) - direction(m - h)) / (2.0 * h) * length;
            let det = cross(d, dm);
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let step_length = cross(residual, dm) / det;
            let step_m = cross(d, residual) / det;
            length -= step_length;
            m = (m - step_m).clamp(0.02, 0.98);
            if length <= 0.0 || !length.is_finite() {
                return None;
            }
        }
        let arc = Self::build(start, theta_in, turn, length, m);
        ((arc.end() - end).norm() <= 1e-12 * scale).then_some(arc)
    }

    /// Image under `h_{center, ratio}`; parametrization rescaled exactly.
    pub fn scaled(&self, center: Vec2, ratio: f64) -> Self {
        Self {
            start: homothety(center, ratio, self.start),
            theta_in: self.theta_in,
            turn: self.turn,
            length: self.length * ratio,
            skew: self.skew,
            gamma: self.gamma,
            nodes: self.nodes.iter().map(|&v| homothety(center, ratio, v)).collect(),
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn start(&self) -> Vec2 {
        self.start
    }

    pub fn end(&self) -> Vec2 {
        self.nodes[TABLE]
    }

    /// Location `m` of the half-turn point in normalized arc length.
    pub fn skew(&self) -> f64 {
        self.skew
    }

    pub fn turn(&self) -> f64 {
        self.turn
    }

    pub fn theta(&self, s: f64) -> f64 {
        self.theta_in + self.turn * ramp(s / self.length, self.gamma)
    }

    pub fn tangent(&self, s: f64) -> Vec2 {
        unit(self.theta(s))
    }

    /// Signed curvature `d theta / ds`.
    pub fn curvature(&self, s: f64) -> f64 {
        self.turn * ramp_derivative(s / self.length, self.gamma) / self.length
    }

    pub fn point(&self, s: f64) -> Vec2 {
        let t = (s / self.length).clamp(0.0, 1.0);
        let h = 1.0 / TABLE as f64;
        let k = ((t / h) as usize).min(TABLE - 1);
        let a = k as f64 * h;
        if t == a {
            return self.nodes[k];
        }
        let rule = gl16();
        let x = rule.integrate(a, t, |u| (self.theta_in + self.turn * ramp(u, self.gamma)).cos());
        let y = rule.integrate(a, t, |u| (self.theta_in + self.turn * ramp(u, self.gamma)).sin());
        self.nodes[k] + Vec2::new(x, y) * self.length
    }

    /// `count + 1` points at equal arc-length spacing, endpoints included.
    pub fn sample(&self, count: usize) -> Vec<Vec2> {
        (0..=count).map(|k| self.point(self.length * k as f64 / count as f64)).collect()
    }
}

/// Arc at vertex `j` for `params.n`, built as the homothetic image of the
/// `n = 1` arc and checked for containment and separation.
pub fn junction_curve(polygon: &Polygon, params: &RoundingParams, j: usize) -> Result<SmoothArc> {
    params.validate(polygon)?;
    let template = template_arc(polygon, &params.at(1), j)?;
    let arc = template.scaled(polygon.vertices[j], 1.0 / params.n as f64);
    check_arc(polygon, params, j, &arc)?;
    Ok(arc)
}

fn template_arc(polygon: &Polygon, params: &RoundingParams, j: usize) -> Result<SmoothArc> {
    let (q, qp) = template_junction_points(polygon, params, j)?;
    let p = polygon.vertices[j];
    let incoming = p - polygon.vertex(j as isize - 1);
    let theta_in = incoming.y.atan2(incoming.x);
    let turn = PI - polygon.angle(j);
    SmoothArc::shoot(q, qp, theta_in, turn).ok_or(GeometryError::ShootingDiverged(j))
}

const CHECK_SAMPLES: usize = 256;

fn check_arc(polygon: &Polygon, params: &RoundingParams, j: usize, arc: &SmoothArc) -> Result<()> {
    let p = polygon.vertices[j];
    let center = p + polygon.exterior_bisectrix(j)? * params.ball_radius();
    let radius = params.ball_radius();
    let samples = arc.sample(CHECK_SAMPLES);
    for (k, x) in samples.iter().enumerate() {
        let d = (x - center).norm();
        let interior = k > 0 && k < CHECK_SAMPLES;
        if d > radius * (1.0 + 1e-12) || (interior && d >= radius) {
            return Err(GeometryError::ContainmentViolated(j));
        }
    }
    let axis = center - p;
    let side = |x: &Vec2| cross(axis, x - p) >= 0.0;
    let crossings = samples
        .windows(2)
        .filter(|w| {
            if side(&w[0]) == side(&w[1]) {
                return false;
            }
            let (a, b) = (cross(axis, w[0] - p), cross(axis, w[1] - p));
            let x = w[0] + (w[1] - w[0]) * (a / (a - b));
            let t = (x - p).dot(&axis) / axis.norm_squared();
            (0.0..=1.0).contains(&t)
        })
        .count();
    if crossings != 1 {
        return Err(GeometryError::ArcSeparation(j));
    }
    Ok(())
}

/// One smooth piece of a rounded boundary.
#[derive(Debug, Clone)]
pub enum BoundaryPiece {
    Arc { vertex: usize, arc: SmoothArc },
    Segment { edge: usize, a: Vec2, b: Vec2 },
}

impl BoundaryPiece {
    pub fn length(&self) -> f64 {
        match self {
            Self::Arc { arc, .. } => arc.length(),
            Self::Segment { a, b, .. } => (b - a).norm(),
        }
    }

    pub fn point(&self, s: f64) -> Vec2 {
        match self {
            Self::Arc { arc, .. } => arc.point(s),
            Self::Segment { a, b, .. } => {
                let len = (b - a).norm();
                a + (b - a) * (s / len).clamp(0.0, 1.0)
            }
        }
    }

    pub fn tangent(&self, s: f64) -> Vec2 {
        match self {
            Self::Arc { arc, .. } => arc.tangent(s),
            Self::Segment { a, b, .. } => (b - a).normalize(),
        }
    }

    pub fn curvature(&self, s: f64) -> f64 {
        match self {
            Self::Arc { arc, .. } => arc.curvature(s),
            Self::Segment { .. } => 0.0,
        }
    }

    pub fn is_arc(&self) -> bool {
        matches!(self, Self::Arc { .. })
    }

    pub fn end(&self) -> Vec2 {
        match self {
            Self::Arc { arc, .. } => arc.end(),
            Self::Segment { b, .. } => *b,
        }
    }
}

/// One member `Omega_n` of the rounded family.
#[derive(Debug, Clone)]
pub struct RoundedDomain {
    params: RoundingParams,
    parent: Polygon,
    pieces: Vec<BoundaryPiece>,
    cumulative: Vec<f64>,
    punctures: Vec<Vec2>,
}

/// Intervals per arc for the self-intersection and containment sweeps.
const SWEEP_SAMPLES: usize = 64;

/// Assemble `Omega_n` and verify its invariants.
pub fn construct_rounded_domain(polygon: &Polygon, params: &RoundingParams) -> Result<RoundedDomain> {
    params.validate(polygon)?;
    let count = polygon.len();
    let ratio = 1.0 / params.n as f64;
    let mut arcs = Vec::with_capacity(count);
    for j in 0..count {
        let template = template_arc(polygon, &params.at(1), j)?;
        let arc = template.scaled(polygon.vertices[j], ratio);
        check_arc(polygon, params, j, &arc)?;
        arcs.push(arc);
    }
    let mut pieces = Vec::with_capacity(2 * count);
    for j in 0..count {
        let a = arcs[j].end();
        let b = arcs[(j + 1) % count].start();
        let (p, q) = polygon.edge(j);
        let edge_dir = (q - p).normalize();
        let seg = b - a;
        if seg.dot(&edge_dir) <= 0.0 {
            return Err(GeometryError::Infeasible { vertex: j, reason: "connecting segment has nonpositive length".into() });
        }
        if cross(seg.normalize(), edge_dir).abs() > 1e-9 {
            return Err(GeometryError::Infeasible { vertex: j, reason: "connecting segment is not parallel to its edge".into() });
        }
        pieces.push(BoundaryPiece::Arc { vertex: j, arc: arcs[j].clone() });
        pieces.push(BoundaryPiece::Segment { edge: j, a, b });
    }
    let mut cumulative = Vec::with_capacity(pieces.len() + 1);
    cumulative.push(0.0);
    for piece in &pieces {
        cumulative.push(cumulative.last().unwrap() + piece.length());
    }
    let punctures = rounding_centers(polygon, params)?;
    let domain = RoundedDomain { params: *params, parent: polygon.clone(), pieces, cumulative, punctures };
    domain.check_invariants()?;
    Ok(domain)
}

impl RoundedDomain {
    fn check_invariants(&self) -> Result<()> {
        let (poly, owner) = self.sweep_polyline();
        let m = poly.len();
        let boxes: Vec<(Vec2, Vec2)> = (0..m)
            .map(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % m]);
                (a.inf(&b), a.sup(&b))
            })
            .collect();
        for i in 0..m {
            for k in (i + 2)..m {
                if i == 0 && k == m - 1 {
                    continue;
                }
                let (lo1, hi1) = boxes[i];
                let (lo2, hi2) = boxes[k];
                if lo1.x > hi2.x || lo2.x > hi1.x || lo1.y > hi2.y || lo2.y > hi1.y {
                    continue;
                }
                if segments_intersect(poly[i], poly[(i + 1) % m], poly[k], poly[(k + 1) % m]) {
                    return Err(GeometryError::SelfIntersection(owner[i], owner[k]));
                }
            }
        }
        let polygon = &self.parent;
        if polygon.vertices.iter().any(|&v| winding_number(&poly, v) != 1) {
            return Err(GeometryError::NotContaining);
        }
        for i in 0..m {
            for e in 0..polygon.len() {
                let (a, b) = polygon.edge(e);
                if segment_segment_distance(poly[i], poly[(i + 1) % m], a, b) <= 0.0 {
                    return Err(GeometryError::NotContaining);
                }
            }
        }
        for (j, &p) in self.punctures.iter().enumerate() {
            if winding_number(&poly, p) != 0 {
                return Err(GeometryError::PunctureInside(j));
            }
            let gap = (0..m).map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % m]).0).fold(f64::INFINITY, f64::min);
            if gap <= 0.0 {
                return Err(GeometryError::PunctureInside(j));
            }
        }
        Ok(())
    }

    /// Closed polyline through sampled arcs and segment endpoints, with the
    /// owning piece of each polyline segment.
    fn sweep_polyline(&self) -> (Vec<Vec2>, Vec<usize>) {
        let mut poly = Vec::new();
        let mut owner = Vec::new();
        for (i, piece) in self.pieces.iter().enumerate() {
            match piece {
                BoundaryPiece::Arc { arc, .. } => {
                    let pts = arc.sample(SWEEP_SAMPLES);
                    for p in &pts[..SWEEP_SAMPLES] {
                        poly.push(*p);
                        owner.push(i);
                    }
                }
                BoundaryPiece::Segment { a, .. } => {
                    poly.push(*a);
                    owner.push(i);
                }
            }
        }
        (poly, owner)
    }

    pub fn n(&self) -> u32 {
        self.params.n
    }

    pub fn params(&self) -> &RoundingParams {
        &self.params
    }

    pub fn polygon(&self) -> &Polygon {
        &self.parent
    }

    pub fn pieces(&self) -> &[BoundaryPiece] {
        &self.pieces
    }

    pub fn piece(&self, i: usize) -> &BoundaryPiece {
        &self.pieces[i]
    }

    /// Puncture set `V_n`.
    pub fn punctures(&self) -> &[Vec2] {
        &self.punctures
    }

    /// Arc at vertex `j` (piece `2j`).
    pub fn arc(&self, j: usize) -> &SmoothArc {
        match &self.pieces[2 * j] {
            BoundaryPiece::Arc { arc, .. } => arc,
            BoundaryPiece::Segment { .. } => unreachable!("even pieces are arcs"),
        }
    }

    /// Piece index and local arc length for global arc length `s`.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let s = crate::curve::wrap(s, self.length());
        let i = self.piece_at(s);
        (i, (s - self.cumulative[i]).max(0.0))
    }

    /// Enclosed area by boundary quadrature of `x dy - y dx`.
    pub fn area(&self) -> f64 {
        let rule = gl16();
        let mut total = 0.0;
        for piece in &self.pieces {
            match piece {
                BoundaryPiece::Segment { a, b, .. } => total += 0.5 * cross(*a, *b),
                BoundaryPiece::Arc { arc, .. } => {
                    let panels = 16;
                    let h = arc.length() / panels as f64;
                    for k in 0..panels {
                        let lo = k as f64 * h;
                        total += 0.5 * rule.integrate(lo, lo + h, |s| cross(arc.point(s), arc.tangent(s)));
                    }
                }
            }
        }
        total
    }

    /// SVG path data; arcs as cubic Hermite pieces through 64 samples.
    pub fn svg_path(&self) -> String {
        let mut out = String::new();
        let first = self.pieces[0].point(0.0);
        let _ = write!(out, "M {} {}", first.x, first.y);
        for piece in &self.pieces {
            match piece {
                BoundaryPiece::Segment { b, .. } => {
                    let _ = write!(out, " L {} {}", b.x, b.y);
                }
                BoundaryPiece::Arc { arc, .. } => {
                    let h = arc.length() / SWEEP_SAMPLES as f64;
                    for k in 0..SWEEP_SAMPLES {
                        let s0 = k as f64 * h;
                        let s1 = s0 + h;
                        let c0 = arc.point(s0) + arc.tangent(s0) * (h / 3.0);
                        let p1 = arc.point(s1);
                        let c1 = p1 - arc.tangent(s1) * (h / 3.0);
                        let _ = write!(out, " C {} {} {} {} {} {}", c0.x, c0.y, c1.x, c1.y, p1.x, p1.y);
                    }
                }
            }
        }
        out.push_str(" Z");
        out
    }

    /// Sampled polyline, one `x y piece_id` line per point.
    pub fn polyline_text(&self, per_arc: usize) -> String {
        let mut out = String::new();
        for (i, piece) in self.pieces.iter().enumerate() {
            let count = if piece.is_arc() { per_arc } else { 1 };
            for k in 0..count {
                let p = piece.point(piece.length() * k as f64 / count as f64);
                let _ = writeln!(out, "{} {} {}", p.x, p.y, i);
            }
        }
        out
    }
}

impl ClosedCurve for RoundedDomain {
    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    fn piece_range(&self, i: usize) -> (f64, f64) {
        (self.cumulative[i], self.cumulative[i + 1])
    }

    fn point(&self, s: f64) -> Vec2 {
        let (i, local) = self.locate(s);
        self.pieces[i].point(local)
    }

    fn piece_point(&self, i: usize, t: f64) -> Vec2 {
        let piece = &self.pieces[i];
        if t >= 1.0 {
            return piece.end();
        }
        piece.point(t * piece.length())
    }

    fn point_on_piece_end(&self, i: usize) -> Vec2 {
        self.pieces[i].end()
    }

    fn tangent(&self, s: f64) -> Vec2 {
        let (i, local) = self.locate(s);
        self.pieces[i].tangent(local)
    }

    fn curvature(&self, s: f64) -> f64 {
        let (i, local) = self.locate(s);
        self.pieces[i].curvature(local)
    }
}

const MAX_HALVINGS: usize = 40;

/// Template parameters with `rho = R0 / 4`.
pub fn select_default_params(polygon: &Polygon) -> Result<RoundingParams> {
    select_params_with_rho(polygon, polygon.r0() / 4.0)
}

/// Halve `rho'` from `rho / 4` until the `n = 1` domain is constructible.
pub fn select_params_with_rho(polygon: &Polygon, rho: f64) -> Result<RoundingParams> {
    let mut rho_prime = rho / 4.0;
    for _ in 0..=MAX_HALVINGS {
        let params = RoundingParams::new(rho, rho_prime, 1);
        params.validate(polygon)?;
        if construct_rounded_domain(polygon, &params).is_ok() {
            return Ok(params);
        }
        rho_prime /= 2.0;
    }
    Err(GeometryError::NoFeasibleRhoPrime(MAX_HALVINGS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn square() -> Polygon {
        Polygon::preset("square").unwrap()
    }

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn square_angles_and_separation() {
        let sq = square();
        for &a in sq.angles() {
            assert!((a - PI / 2.0).abs() < 1e-15);
        }
        assert_eq!(sq.r0(), 1.0);
        assert_eq!(sq.separation_radius(), 0.5);
    }

    #[test]
    fn lshape_reentrant_angle() {
        let l = Polygon::preset("lshape").unwrap();
        assert!((l.alpha_max() - 1.5 * PI).abs() < 1e-14);
        assert!((l.angle(3) - 1.5 * PI).abs() < 1e-14);
        let b = l.exterior_bisectrix(3).unwrap();
        assert!(close(b, Vec2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2), 1e-15));
    }

    #[test]
    fn invalid_polygons() {
        let bowtie = Polygon::from_pairs(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(bowtie, Err(GeometryError::NonSimple(..))));
        let dup = Polygon::from_pairs(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(dup, Err(GeometryError::DuplicateVertex(2))));
        assert!(matches!(Polygon::from_pairs(&[[0.0, 0.0], [1.0, 0.0]]), Err(GeometryError::TooFewVertices(2))));
        assert!(matches!(Polygon::preset("hexagon"), Err(GeometryError::UnknownPreset(_))));
    }

    #[test]
    fn clockwise_input_is_reversed() {
        let cw = Polygon::from_pairs(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(cw.area() > 0.0);
    }

    #[test]
    fn bisectrix_of_square_corner() {
        let b = square().exterior_bisectrix(0).unwrap();
        assert!(close(b, Vec2::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2), 1e-15));
        assert!(matches!(square().exterior_bisectrix(4), Err(GeometryError::IndexOutOfRange(4))));
    }

    #[test]
    fn square_rounding_centers() {
        let params = RoundingParams::new(0.4, 0.05, 1);
        let c = rounding_centers(&square(), &params).unwrap();
        assert!(close(c[0], Vec2::new(-0.141421, -0.141421), 1e-6));
        let c2 = rounding_centers(&square(), &params.at(2)).unwrap();
        assert!(close(c2[0], Vec2::new(-0.070711, -0.070711), 1e-6));
    }

    #[test]
    fn square_junction_points() {
        let sq = square();
        let params = RoundingParams::new(0.4, 0.05, 1);
        let (q, qp) = junction_points(&sq, &params, 0).unwrap();
        assert!(close(qp, Vec2::new(0.036462, -0.05), 1e-6));
        assert!(close(q, Vec2::new(-0.05, 0.036462), 1e-6));
        let center = rounding_centers(&sq, &params).unwrap()[0];
        assert!(((q - center).norm() - 0.2).abs() < 1e-12);
        assert!(((qp - center).norm() - 0.2).abs() < 1e-12);
        assert!((sq.distance(q) - 0.05).abs() < 1e-12);
        let (q3, _) = junction_points(&sq, &params.at(3), 0).unwrap();
        assert!((sq.distance(q3) - 0.05 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn arc_meets_targets_and_is_symmetric() {
        let sq = square();
        let params = RoundingParams::new(0.4, 0.05, 1);
        let arc = junction_curve(&sq, &params, 0).unwrap();
        let (q, qp) = junction_points(&sq, &params, 0).unwrap();
        assert!(close(arc.start(), q, 1e-15));
        assert!(close(arc.end(), qp, 1e-12 * arc.length()));
        assert!((arc.theta(0.0) + PI / 2.0).abs() < 1e-12);
        assert!(arc.theta(arc.length()).abs() < 1e-12);
        assert!((arc.skew() - 0.5).abs() < 1e-10);
        // reflection across the bisectrix y = x swaps s and L - s
        for k in 0..=20 {
            let s = arc.length() * k as f64 / 20.0;
            let p = arc.point(s);
            let r = arc.point(arc.length() - s);
            assert!(close(Vec2::new(p.y, p.x), r, 1e-10));
        }
    }

    #[test]
    fn arcs_are_homothetic() {
        let sq = square();
        let params = RoundingParams::new(0.4, 0.05, 1);
        let a1 = junction_curve(&sq, &params, 2).unwrap();
        let a2 = junction_curve(&sq, &params.at(2), 2).unwrap();
        let p = sq.vertices()[2];
        for k in 0..=32 {
            let s = a1.length() * k as f64 / 32.0;
            assert!(close(a2.point(s / 2.0), homothety(p, 0.5, a1.point(s)), 1e-12));
        }
    }

    #[test]
    fn square_domain_pieces_and_area() {
        let sq = square();
        let params = RoundingParams::new(0.4, 0.05, 1);
        let mut prev = f64::INFINITY;
        for n in [1, 2, 4, 8] {
            let d = construct_rounded_domain(&sq, &params.at(n)).unwrap();
            assert_eq!(d.piece_count(), 8);
            let area = d.area();
            assert!(area > 1.0 && area < prev);
            prev = area;
            for &p in d.punctures() {
                assert!(sq.distance(p) >= 0.05 / n as f64);
            }
        }
    }

    #[test]
    fn tangent_continuity_at_junctions() {
        let l = Polygon::preset("lshape").unwrap();
        let params = select_default_params(&l).unwrap();
        let d = construct_rounded_domain(&l, &params.at(3)).unwrap();
        for i in 0..d.piece_count() {
            let (_, b) = d.piece_range(i);
            let before = d.pieces()[i].tangent(d.pieces()[i].length());
            let after = d.tangent(b + 1e-12);
            assert!((before - after).norm() < 1e-9);
            assert!(close(d.pieces()[i].end(), d.point(b + 1e-14), 1e-10));
        }
    }

    #[test]
    fn hausdorff_distance_shrinks() {
        let sq = square();
        let params = select_default_params(&sq).unwrap();
        for n in [1, 2, 4] {
            let d = construct_rounded_domain(&sq, &params.at(n)).unwrap();
            let bound = (params.rho / 2.0 + params.rho_prime) / n as f64;
            let pts = crate::curve::sample_uniform(&d, 2000);
            for p in pts {
                assert!(sq.nearest_edge(p).0 <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn default_params() {
        let sq = select_default_params(&square()).unwrap();
        assert_eq!(sq.rho, 0.25);
        let l = select_default_params(&Polygon::preset("lshape").unwrap()).unwrap();
        assert!(l.rho_prime / l.rho <= sq.rho_prime / sq.rho);
        let star = Polygon::preset("star5").unwrap();
        let params = select_default_params(&star).unwrap();
        construct_rounded_domain(&star, &params.at(4)).unwrap();
    }

    #[test]
    fn homothety_group_law() {
        let p = Vec2::new(0.3, -1.2);
        let x = Vec2::new(2.5, 0.7);
        assert_eq!(homothety(Vec2::zeros(), 2.0, Vec2::new(1.0, 1.0)), Vec2::new(2.0, 2.0));
        assert_eq!(homothety(p, 1.0, x), x);
        assert!(close(homothety(p, 3.0, homothety(p, 1.0 / 3.0, x)), x, 1e-15));
    }

    #[test]
    fn exports() {
        let sq = square();
        let d = construct_rounded_domain(&sq, &select_default_params(&sq).unwrap()).unwrap();
        let path = d.svg_path();
        assert!(path.starts_with('M') && path.ends_with('Z'));
        assert_eq!(path.matches(" C ").count(), 4 * 64);
        let text = d.polyline_text(16);
        assert_eq!(text.lines().count(), 4 * 16 + 4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn members_are_homothetic_images(n in 1u32..40, j in 0usize..4, frac in 0.0f64..1.0) {
                let sq = square();
                let params = select_default_params(&sq).unwrap();
                let d1 = construct_rounded_domain(&sq, &params).unwrap();
                let dn = construct_rounded_domain(&sq, &params.at(n)).unwrap();
                let ratio = 1.0 / n as f64;
                let vertex = sq.vertex(j as isize);
                let s = frac * d1.arc(j).length();
                let image = homothety(vertex, ratio, d1.arc(j).point(s));
                prop_assert!(close(image, dn.arc(j).point(s * ratio), 1e-9));
                let expected = vertex + sq.exterior_bisectrix(j).unwrap() * (params.rho / (2.0 * n as f64));
                prop_assert!(close(dn.punctures()[j], expected, 1e-12));
            }
        }
    }
}
