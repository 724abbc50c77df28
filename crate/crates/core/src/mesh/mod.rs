//! Conforming triangulations of curved domains, graded by a sizing field.

mod boundary;
mod cdt;
mod sizing;

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

pub use boundary::{discretize_boundary, BoundaryPolyline, BoundarySegment, BoundaryVertex};
pub use cdt::{triangulate, RADIUS_EDGE_BOUND};
pub use sizing::{SizingField, SizingRule};

use crate::curve::{cross, ClosedCurve};
use crate::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("refinement stalled: {0}")]
    RefinementStalled(String),
    #[error("boundary recovery did not terminate")]
    EncroachmentLoop,
    #[error("point outside the enclosing triangle")]
    OutsideHull,
    #[error("point already present")]
    DuplicatePoint,
    #[error("invalid sizing: {0}")]
    InvalidSizing(String),
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("mesh parse error: {0}")]
    Parse(String),
}

/// Where a node sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Interior,
    /// On boundary piece `piece` at global arc length `s` (NaN when unknown).
    Boundary { piece: usize, s: f64 },
}

impl NodeKind {
    pub fn is_boundary(&self) -> bool {
        matches!(self, Self::Boundary { .. })
    }
}

/// Boundary chord with the true-curve point at its parameter midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub piece: usize,
    pub s: [f64; 2],
    pub midpoint: Vec2,
}

/// Triangle mesh. Vertices of triangle `t` are `triangles[t]` (counterclockwise);
/// for `order == 2`, `midnodes[t]` holds the nodes on edges `(0,1)`, `(1,2)`,
/// `(2,0)`, with boundary midnodes placed on the true curve.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Vec2>,
    pub kinds: Vec<NodeKind>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub order: u8,
    pub midnodes: Vec<[usize; 3]>,
}

/// Sample the boundary and triangulate it.
pub fn mesh_domain<C: ClosedCurve + ?Sized>(curve: &C, sizing: &SizingField) -> Result<Mesh, MeshError> {
    let poly = discretize_boundary(curve, sizing);
    triangulate(curve, &poly, sizing)
}

/// Summary statistics of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    /// Largest circumradius over twice the inradius (1 for equilateral).
    pub max_aspect: f64,
    pub nodes: usize,
    pub elements: usize,
    /// `(lower, upper, count)` bins of longest edge lengths on a log scale.
    pub h_histogram: Vec<(f64, f64, usize)>,
}

/// Interior angles of the triangle `a, b, c` in radians.
pub fn triangle_angles(a: Vec2, b: Vec2, c: Vec2) -> [f64; 3] {
    let angle = |p: Vec2, q: Vec2, r: Vec2| {
        let (u, v) = (q - p, r - p);
        cross(u, v).abs().atan2(u.dot(&v))
    };
    [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
}

impl Mesh {
    pub fn vertex_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.triangles.len()
    }

    /// Corner positions of triangle `t`.
    pub fn corners(&self, t: usize) -> [Vec2; 3] {
        self.triangles[t].map(|v| self.nodes[v])
    }

    /// Element nodes in local order: 3 for P1, 6 for P2.
    pub fn element_nodes(&self, t: usize) -> Vec<usize> {
        let mut out = self.triangles[t].to_vec();
        if self.order == 2 {
            out.extend_from_slice(&self.midnodes[t]);
        }
        out
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                0.5 * cross(b - a, c - a)
            })
            .sum()
    }

    /// Longest edge over all triangles.
    pub fn max_edge(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                (a - b).norm().max((b - c).norm()).max((c - a).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Mask of nodes carrying Dirichlet data.
    pub fn boundary_mask(&self) -> Vec<bool> {
        self.kinds.iter().map(|k| k.is_boundary()).collect()
    }

    /// Add edge midpoint nodes; boundary midpoints go on the true curve.
    pub fn elevate(&self) -> Mesh {
        if self.order == 2 {
            return self.clone();
        }
        let mut nodes = self.nodes.clone();
        let mut kinds = self.kinds.clone();
        let boundary: HashMap<(usize, usize), &BoundaryEdge> = self
            .boundary_edges
            .iter()
            .map(|e| (edge_key(e.nodes[0], e.nodes[1]), e))
            .collect();
        let mut made: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midnodes = Vec::with_capacity(self.triangles.len());
        for tri in &self.triangles {
            let mut mids = [0; 3];
            for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                let key = edge_key(tri[i], tri[j]);
                mids[k] = *made.entry(key).or_insert_with(|| {
                    let id = nodes.len();
                    match boundary.get(&key) {
                        Some(e) => {
                            nodes.push(e.midpoint);
                            kinds.push(NodeKind::Boundary { piece: e.piece, s: 0.5 * (e.s[0] + e.s[1]) });
                        }
                        None => {
                            nodes.push((self.nodes[tri[i]] + self.nodes[tri[j]]) * 0.5);
                            kinds.push(NodeKind::Interior);
                        }
                    }
                    id
                });
            }
            midnodes.push(mids);
        }
        Mesh {
            nodes,
            kinds,
            triangles: self.triangles.clone(),
            boundary_edges: self.boundary_edges.clone(),
            order: 2,
            midnodes,
        }
    }

    /// Check orientation, conformity and boundary bookkeeping.
    pub fn validate(&self) -> Result<(), MeshError> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = self.corners(t);
            if cross(b - a, c - a) <= 0.0 {
                return Err(MeshError::Invalid(format!("triangle {t} is not positively oriented")));
            }
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                *count.entry(edge_key(tri[i], tri[j])).or_insert(0) += 1;
            }
        }
        if let Some((e, c)) = count.iter().find(|(_, &c)| c > 2) {
            return Err(MeshError::Invalid(format!("edge {e:?} shared by {c} triangles")));
        }
        let mut boundary: Vec<(usize, usize)> = count.iter().filter(|(_, &c)| c == 1).map(|(e, _)| *e).collect();
        let mut declared: Vec<(usize, usize)> = self.boundary_edges.iter().map(|e| edge_key(e.nodes[0], e.nodes[1])).collect();
        boundary.sort_unstable();
        declared.sort_unstable();
        if boundary != declared {
            return Err(MeshError::Invalid("boundary edges do not match the triangle edges used once".into()));
        }
        Ok(())
    }

    /// Largest distance of a boundary node from the curve point at its parameter.
    pub fn boundary_deviation<C: ClosedCurve + ?Sized>(&self, curve: &C) -> f64 {
        self.nodes
            .iter()
            .zip(&self.kinds)
            .filter_map(|(p, k)| match k {
                NodeKind::Boundary { s, .. } if s.is_finite() => Some((curve.point(*s) - p).norm()),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    pub fn quality(&self) -> MeshQuality {
        let mut min_angle = f64::INFINITY;
        let mut max_aspect: f64 = 0.0;
        let mut sizes = Vec::with_capacity(self.triangles.len());
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            let angles = triangle_angles(a, b, c);
            min_angle = angles.iter().cloned().fold(min_angle, f64::min);
            let (la, lb, lc) = ((b - c).norm(), (c - a).norm(), (a - b).norm());
            let area = 0.5 * cross(b - a, c - a).abs();
            let circum = la * lb * lc / (4.0 * area);
            let inradius = 2.0 * area / (la + lb + lc);
            max_aspect = max_aspect.max(circum / (2.0 * inradius));
            sizes.push(la.max(lb).max(lc));
        }
        MeshQuality {
            min_angle_deg: min_angle.to_degrees(),
            max_aspect,
            nodes: self.nodes.len(),
            elements: self.triangles.len(),
            h_histogram: histogram(&sizes, 10),
        }
    }

    /// Text form: header `N_nodes N_tris order`, nodes `x y marker` (0 inside,
    /// piece + 1 on the boundary), then elements `i j k [l m n]`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.nodes.len(), self.triangles.len(), self.order);
        for (p, k) in self.nodes.iter().zip(&self.kinds) {
            let marker = match k {
                NodeKind::Interior => 0,
                NodeKind::Boundary { piece, .. } => piece + 1,
            };
            let _ = writeln!(out, "{} {} {}", p.x, p.y, marker);
        }
        for t in 0..self.triangles.len() {
            let nodes = self.element_nodes(t);
            let line: Vec<String> = nodes.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parse the text form. Curve parameters are not stored, so boundary
    /// kinds carry `s = NaN` and boundary midpoints come from the P2 nodes.
    pub fn from_text(text: &str) -> Result<Self, MeshError> {
        let bad = |msg: &str| MeshError::Parse(msg.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| bad("bad header")))
            .collect::<Result<_, _>>()?;
        let [n_nodes, n_tris, order] = header[..] else { return Err(bad("header needs three fields")) };
        if order != 1 && order != 2 {
            return Err(bad("order must be 1 or 2"));
        }
        let mut nodes = Vec::with_capacity(n_nodes);
        let mut kinds = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let f: Vec<&str> = lines.next().ok_or_else(|| bad("missing node line"))?.split_whitespace().collect();
            if f.len() != 3 {
                return Err(bad("node line needs x y marker"));
            }
            let x: f64 = f[0].parse().map_err(|_| bad("bad x"))?;
            let y: f64 = f[1].parse().map_err(|_| bad("bad y"))?;
            let marker: usize = f[2].parse().map_err(|_| bad("bad marker"))?;
            nodes.push(Vec2::new(x, y));
            kinds.push(if marker == 0 { NodeKind::Interior } else { NodeKind::Boundary { piece: marker - 1, s: f64::NAN } });
        }
        let per = if order == 2 { 6 } else { 3 };
        let mut triangles = Vec::with_capacity(n_tris);
        let mut midnodes = Vec::new();
        for _ in 0..n_tris {
            let ids: Vec<usize> = lines
                .next()
                .ok_or_else(|| bad("missing element line"))?
                .split_whitespace()
                .map(|v| v.parse().map_err(|_| bad("bad element index")))
                .collect::<Result<_, _>>()?;
            if ids.len() != per || ids.iter().any(|&i| i >= n_nodes) {
                return Err(bad("element line has wrong arity or index"));
            }
            triangles.push([ids[0], ids[1], ids[2]]);
            if order == 2 {
                midnodes.push([ids[3], ids[4], ids[5]]);
            }
        }
        let mut mesh = Mesh { nodes, kinds, triangles, boundary_edges: Vec::new(), order: order as u8, midnodes };
        mesh.boundary_edges = mesh.derive_boundary_edges();
        Ok(mesh)
    }

    fn derive_boundary_edges(&self) -> Vec<BoundaryEdge> {
        let mut count: HashMap<(usize, usize), (usize, usize, usize)> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                let e = count.entry(edge_key(tri[i], tri[j])).or_insert((0, t, k));
                e.0 += 1;
            }
        }
        let mut out: Vec<BoundaryEdge> = count
            .into_iter()
            .filter(|(_, v)| v.0 == 1)
            .map(|(_, (_, t, k))| {
                let tri = self.triangles[t];
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let midpoint = if self.order == 2 {
                    self.nodes[self.midnodes[t][k]]
                } else {
                    (self.nodes[a] + self.nodes[b]) * 0.5
                };
                let piece = match self.kinds[a] {
                    NodeKind::Boundary { piece, .. } => piece,
                    NodeKind::Interior => 0,
                };
                BoundaryEdge { nodes: [a, b], piece, s: [f64::NAN; 2], midpoint }
            })
            .collect();
        out.sort_by_key(|e| e.nodes);
        out
    }
}

#[inline]
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(0.0, f64::max);
    if hi <= lo * (1.0 + 1e-12) {
        return vec![(lo, hi, values.len())];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let width = (lhi - llo) / bins as f64;
    let mut counts = vec![0; bins];
    for v in values {
        let k = (((v.ln() - llo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    (0..bins)
        .map(|k| ((llo + width * k as f64).exp(), (llo + width * (k + 1) as f64).exp(), counts[k]))
        .collect()
}

/// Structured mesh of the unit square with `divisions` cells per side, each
/// cell cut along its main diagonal. Boundary pieces follow the square's
/// counterclockwise edges starting at the origin.
pub fn unit_square(divisions: usize) -> Mesh {
    let m = divisions;
    let h = 1.0 / m as f64;
    let id = |i: usize, j: usize| j * (m + 1) + i;
    let mut nodes = Vec::with_capacity((m + 1) * (m + 1));
    let mut kinds = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            let (x, y) = (i as f64 * h, j as f64 * h);
            nodes.push(Vec2::new(x, y));
            let kind = if j == 0 {
                NodeKind::Boundary { piece: 0, s: x }
            } else if i == m {
                NodeKind::Boundary { piece: 1, s: 1.0 + y }
            } else if j == m {
                NodeKind::Boundary { piece: 2, s: 3.0 - x }
            } else if i == 0 {
                NodeKind::Boundary { piece: 3, s: 4.0 - y }
            } else {
                NodeKind::Interior
            };
            kinds.push(kind);
        }
    }
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(4 * m);
    let mut push = |a: usize, b: usize, piece: usize, s0: f64, s1: f64, nodes: &[Vec2]| {
        boundary_edges.push(BoundaryEdge { nodes: [a, b], piece, s: [s0, s1], midpoint: (nodes[a] + nodes[b]) * 0.5 });
    };
    for k in 0..m {
        let (s0, s1) = (k as f64 * h, (k + 1) as f64 * h);
        push(id(k, 0), id(k + 1, 0), 0, s0, s1, &nodes);
        push(id(m, k), id(m, k + 1), 1, 1.0 + s0, 1.0 + s1, &nodes);
        push(id(m - k, m), id(m - k - 1, m), 2, 2.0 + s0, 2.0 + s1, &nodes);
        push(id(0, m - k), id(0, m - k - 1), 3, 3.0 + s0, 3.0 + s1, &nodes);
    }
    Mesh { nodes, kinds, triangles, boundary_edges, order: 1, midnodes: Vec::new() }
}
