//! Constrained Delaunay triangulation with Ruppert refinement against a
//! curved boundary.
//!
//! Everything is triangulated inside a large enclosing triangle. Boundary
//! chords are first recovered by splitting (inserting true-curve midpoints)
//! until each is a Delaunay edge; then they become constraints that insertion
//! cavities never cross. Triangles are flagged inside/outside once by flood
//! fill and new triangles inherit the flag across their outer cavity edge.

use std::collections::{HashMap, VecDeque};

use super::boundary::BoundaryPolyline;
use super::{BoundaryEdge, Mesh, MeshError, NodeKind, SizingField};
use crate::curve::ClosedCurve;
use crate::predicates::{incircle, orient};
use crate::Vec2;

const NONE: usize = usize::MAX;

/// `1 / (2 sin 20deg)`: circumradius to shortest edge bound for a 20 degree
/// minimum angle.
pub const RADIUS_EDGE_BOUND: f64 = 1.461_902_200_081_543;

/// Hard cap on the number of vertices.
const MAX_VERTICES: usize = 4_000_000;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    /// `n[i]` is the neighbour across the edge opposite `v[i]`.
    n: [usize; 3],
    alive: bool,
    inside: bool,
}

/// Boundary chord with its curve parameters at `a` and `b`.
#[derive(Debug, Clone, Copy)]
struct Seg {
    a: usize,
    b: usize,
    piece: usize,
    s0: f64,
    s1: f64,
}

#[inline]
fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

struct Triangulator<'a, C: ClosedCurve + ?Sized> {
    curve: &'a C,
    sizing: &'a SizingField,
    pts: Vec<Vec2>,
    kinds: Vec<NodeKind>,
    tris: Vec<Tri>,
    free: Vec<usize>,
    vertex_tri: Vec<usize>,
    constraints: HashMap<(usize, usize), Seg>,
    stamp: Vec<u32>,
    generation: u32,
    last: usize,
    created: Vec<usize>,
}

enum Walk {
    Found(usize),
    Crossed((usize, usize)),
}

impl<'a, C: ClosedCurve + ?Sized> Triangulator<'a, C> {
    fn new(curve: &'a C, sizing: &'a SizingField, bbox: (Vec2, Vec2)) -> Self {
        let center = (bbox.0 + bbox.1) * 0.5;
        let span = (bbox.1 - bbox.0).norm().max(1e-12);
        let pts = vec![
            center + Vec2::new(-40.0 * span, -30.0 * span),
            center + Vec2::new(40.0 * span, -30.0 * span),
            center + Vec2::new(0.0, 40.0 * span),
        ];
        let tris = vec![Tri { v: [0, 1, 2], n: [NONE; 3], alive: true, inside: false }];
        Self {
            curve,
            sizing,
            pts,
            kinds: vec![NodeKind::Interior; 3],
            tris,
            free: Vec::new(),
            vertex_tri: vec![0; 3],
            constraints: HashMap::new(),
            stamp: vec![0],
            generation: 0,
            last: 0,
            created: Vec::new(),
        }
    }

    #[inline]
    fn edge(&self, t: usize, i: usize) -> (usize, usize) {
        let v = self.tris[t].v;
        (v[(i + 1) % 3], v[(i + 2) % 3])
    }

    fn is_constraint(&self, a: usize, b: usize) -> bool {
        self.constraints.contains_key(&key(a, b))
    }

    fn any_alive(&self) -> usize {
        if self.tris[self.last].alive {
            return self.last;
        }
        (0..self.tris.len()).rev().find(|&t| self.tris[t].alive).expect("triangulation is never empty")
    }

    /// Triangle containing `p` (visibility walk).
    fn locate(&self, p: Vec2) -> Result<usize, MeshError> {
        let mut t = self.any_alive();
        let limit = 4 * self.tris.len() + 100;
        for step in 0..limit {
            let mut moved = false;
            for k in 0..3 {
                let i = (k + step) % 3;
                let (a, b) = self.edge(t, i);
                if orient(self.pts[a], self.pts[b], p) < 0.0 {
                    let nb = self.tris[t].n[i];
                    if nb == NONE {
                        return Err(MeshError::OutsideHull);
                    }
                    t = nb;
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Ok(t);
            }
        }
        Err(MeshError::RefinementStalled("point location did not terminate".into()))
    }

    /// Straight walk from the centroid of `t` to `p`, stopping at the first
    /// constraint crossed.
    fn walk_to(&self, t: usize, p: Vec2) -> Result<Walk, MeshError> {
        let v = self.tris[t].v;
        let origin = (self.pts[v[0]] + self.pts[v[1]] + self.pts[v[2]]) / 3.0;
        let mut t = t;
        let mut came_from = NONE;
        for _ in 0..(4 * self.tris.len() + 100) {
            let mut exit = None;
            for i in 0..3 {
                let nb = self.tris[t].n[i];
                if nb == came_from && nb != NONE {
                    continue;
                }
                let (a, b) = self.edge(t, i);
                let (pa, pb) = (self.pts[a], self.pts[b]);
                if orient(pa, pb, p) < 0.0 {
                    let oa = orient(origin, p, pa);
                    let ob = orient(origin, p, pb);
                    if (oa >= 0.0 && ob <= 0.0) || (oa <= 0.0 && ob >= 0.0) {
                        exit = Some(i);
                        break;
                    }
                    if exit.is_none() {
                        exit = Some(i);
                    }
                }
            }
            let Some(i) = exit else {
                return Ok(Walk::Found(t));
            };
            let (a, b) = self.edge(t, i);
            if self.is_constraint(a, b) {
                return Ok(Walk::Crossed(key(a, b)));
            }
            let nb = self.tris[t].n[i];
            if nb == NONE {
                return Err(MeshError::OutsideHull);
            }
            came_from = t;
            t = nb;
        }
        Err(MeshError::RefinementStalled("segment walk did not terminate".into()))
    }

    fn in_circumcircle(&self, t: usize, p: Vec2) -> bool {
        let v = self.tris[t].v;
        incircle(self.pts[v[0]], self.pts[v[1]], self.pts[v[2]], p) > 0.0
    }

    fn next_generation(&mut self) -> u32 {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.generation
    }

    /// Cavity of `p` starting at the containing triangle `t0`, and its outer
    /// edges `(a, b, outer neighbour)`.
    fn cavity(&mut self, t0: usize, p: Vec2) -> Result<(Vec<usize>, Vec<(usize, usize, usize)>), MeshError> {
        let gen = self.next_generation();
        let mut cavity = Vec::new();
        let mut stack = vec![t0];
        self.stamp[t0] = gen;
        while let Some(t) = stack.pop() {
            cavity.push(t);
            for i in 0..3 {
                let nb = self.tris[t].n[i];
                if nb == NONE || self.stamp[nb] == gen {
                    continue;
                }
                let (a, b) = self.edge(t, i);
                if self.is_constraint(a, b) {
                    continue;
                }
                if self.in_circumcircle(nb, p) {
                    self.stamp[nb] = gen;
                    stack.push(nb);
                }
            }
        }
        let mut rim = Vec::new();
        for &t in &cavity {
            for i in 0..3 {
                let nb = self.tris[t].n[i];
                let (a, b) = self.edge(t, i);
                if nb != NONE && self.stamp[nb] == gen {
                    if self.is_constraint(a, b) {
                        return Err(MeshError::RefinementStalled("cavity swallowed a constraint".into()));
                    }
                    continue;
                }
                rim.push((a, b, nb));
            }
        }
        Ok((cavity, rim))
    }

    fn alloc(&mut self, tri: Tri) -> usize {
        if let Some(t) = self.free.pop() {
            self.tris[t] = tri;
            t
        } else {
            self.tris.push(tri);
            self.stamp.push(0);
            self.tris.len() - 1
        }
    }

    /// Insert `p`; new triangles are left in `self.created`.
    fn insert(&mut self, p: Vec2, kind: NodeKind) -> Result<usize, MeshError> {
        if self.pts.len() >= MAX_VERTICES {
            return Err(MeshError::RefinementStalled(format!("vertex cap {MAX_VERTICES} reached")));
        }
        let t0 = self.locate(p)?;
        for &v in &self.tris[t0].v {
            if self.pts[v] == p {
                return Err(MeshError::DuplicatePoint);
            }
        }
        let (cavity, rim) = self.cavity(t0, p)?;
        for &(a, b, _) in &rim {
            if orient(self.pts[a], self.pts[b], p) <= 0.0 {
                return Err(MeshError::RefinementStalled("cavity is not star-shaped".into()));
            }
        }
        let vid = self.pts.len();
        self.pts.push(p);
        self.kinds.push(kind);
        self.vertex_tri.push(NONE);
        for &t in &cavity {
            self.tris[t].alive = false;
        }
        self.free.extend(cavity.iter().copied());
        self.created.clear();
        let mut starts: Vec<(usize, usize)> = Vec::with_capacity(rim.len());
        for &(a, b, nb) in &rim {
            let inside = nb != NONE && (self.tris[nb].inside ^ self.is_constraint(a, b));
            let t = self.alloc(Tri { v: [a, b, vid], n: [NONE, NONE, nb], alive: true, inside });
            if nb != NONE {
                for j in 0..3 {
                    let (x, y) = self.edge(nb, j);
                    if (x == b && y == a) || (x == a && y == b) {
                        self.tris[nb].n[j] = t;
                    }
                }
            }
            starts.push((a, t));
            self.created.push(t);
            self.vertex_tri[a] = t;
            self.vertex_tri[b] = t;
        }
        for idx in 0..self.created.len() {
            let t = self.created[idx];
            let [a, b, _] = self.tris[t].v;
            let across_bp = starts.iter().find(|s| s.0 == b).map(|s| s.1).unwrap_or(NONE);
            let across_pa = self
                .created
                .iter()
                .copied()
                .find(|&u| self.tris[u].v[1] == a)
                .unwrap_or(NONE);
            self.tris[t].n[0] = across_bp;
            self.tris[t].n[1] = across_pa;
        }
        self.vertex_tri[vid] = self.created[0];
        self.last = self.created[0];
        Ok(vid)
    }

    /// Triangles around vertex `a`.
    fn incident(&self, a: usize) -> Vec<usize> {
        let start = self.vertex_tri[a];
        let mut out = Vec::new();
        if start == NONE || !self.tris[start].alive {
            return self.incident_scan(a);
        }
        let local = |t: usize| self.tris[t].v.iter().position(|&v| v == a);
        let mut t = start;
        loop {
            out.push(t);
            let k = match local(t) {
                Some(k) => k,
                None => return self.incident_scan(a),
            };
            let nb = self.tris[t].n[(k + 1) % 3];
            if nb == NONE {
                break;
            }
            if nb == start {
                return out;
            }
            t = nb;
            if out.len() > 10_000 {
                return self.incident_scan(a);
            }
        }
        let mut t = start;
        loop {
            let k = match local(t) {
                Some(k) => k,
                None => return self.incident_scan(a),
            };
            let nb = self.tris[t].n[(k + 2) % 3];
            if nb == NONE || nb == start {
                break;
            }
            out.push(nb);
            t = nb;
        }
        out
    }

    fn incident_scan(&self, a: usize) -> Vec<usize> {
        (0..self.tris.len()).filter(|&t| self.tris[t].alive && self.tris[t].v.contains(&a)).collect()
    }

    /// Triangles having edge `{a, b}` with the local index of the opposite vertex.
    fn edge_triangles(&self, a: usize, b: usize) -> Vec<(usize, usize)> {
        self.incident(a)
            .into_iter()
            .filter_map(|t| {
                let v = self.tris[t].v;
                if !v.contains(&b) {
                    return None;
                }
                let k = v.iter().position(|&x| x != a && x != b).unwrap();
                Some((t, k))
            })
            .collect()
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        !self.edge_triangles(a, b).is_empty()
    }

    /// Split a boundary chord at the true-curve midpoint.
    fn split(&mut self, seg: Seg) -> Result<(Seg, Seg, usize), MeshError> {
        let s = 0.5 * (seg.s0 + seg.s1);
        let p = self.curve.point(s);
        let k = key(seg.a, seg.b);
        let removed = self.constraints.remove(&k);
        let vid = match self.insert(p, NodeKind::Boundary { piece: seg.piece, s }) {
            Ok(v) => v,
            Err(e) => {
                if let Some(r) = removed {
                    self.constraints.insert(k, r);
                }
                return Err(e);
            }
        };
        let left = Seg { a: seg.a, b: vid, piece: seg.piece, s0: seg.s0, s1: s };
        let right = Seg { a: vid, b: seg.b, piece: seg.piece, s0: s, s1: seg.s1 };
        if removed.is_some() {
            if !self.has_edge(seg.a, vid) || !self.has_edge(vid, seg.b) {
                return Err(MeshError::RefinementStalled("boundary split lost a subsegment".into()));
            }
            self.constraints.insert(key(left.a, left.b), left);
            self.constraints.insert(key(right.a, right.b), right);
        }
        Ok((left, right, vid))
    }

    fn classify(&mut self) {
        let gen = self.next_generation();
        let seed = self.incident(0)[0];
        let mut stack = vec![seed];
        self.stamp[seed] = gen;
        while let Some(t) = stack.pop() {
            for i in 0..3 {
                let nb = self.tris[t].n[i];
                if nb == NONE || self.stamp[nb] == gen {
                    continue;
                }
                let (a, b) = self.edge(t, i);
                if self.is_constraint(a, b) {
                    continue;
                }
                self.stamp[nb] = gen;
                stack.push(nb);
            }
        }
        for t in 0..self.tris.len() {
            if self.tris[t].alive {
                self.tris[t].inside = self.stamp[t] != gen;
            }
        }
    }

    /// Whether the inside apex of chord `{a, b}` lies in its diametral circle.
    fn encroached(&self, a: usize, b: usize) -> bool {
        let (pa, pb) = (self.pts[a], self.pts[b]);
        self.edge_triangles(a, b).into_iter().any(|(t, k)| {
            if !self.tris[t].inside {
                return false;
            }
            let c = self.pts[self.tris[t].v[k]];
            (pa - c).dot(&(pb - c)) < 0.0
        })
    }

    fn is_bad(&self, t: usize) -> bool {
        let tri = &self.tris[t];
        if !tri.alive || !tri.inside {
            return false;
        }
        let [a, b, c] = tri.v.map(|v| self.pts[v]);
        let (la, lb, lc) = ((b - c).norm(), (c - a).norm(), (a - b).norm());
        let shortest = la.min(lb).min(lc);
        let longest = la.max(lb).max(lc);
        let area2 = crate::curve::cross(b - a, c - a);
        let circumradius = la * lb * lc / (2.0 * area2);
        if circumradius > RADIUS_EDGE_BOUND * shortest {
            return true;
        }
        longest > self.sizing.size((a + b + c) / 3.0)
    }

    fn circumcenter(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.tris[t].v.map(|v| self.pts[v]);
        let (ba, ca) = (b - a, c - a);
        let d = 2.0 * crate::curve::cross(ba, ca);
        let (b2, c2) = (ba.norm_squared(), ca.norm_squared());
        a + Vec2::new(ca.y * b2 - ba.y * c2, ba.x * c2 - ca.x * b2) / d
    }

    /// Constraints on the rim of `p`'s cavity whose diametral circle holds `p`.
    fn encroached_by(&mut self, t0: usize, p: Vec2) -> Result<Vec<(usize, usize)>, MeshError> {
        let (_, rim) = self.cavity(t0, p)?;
        Ok(rim
            .into_iter()
            .filter(|&(a, b, _)| {
                self.is_constraint(a, b) && (self.pts[a] - p).dot(&(self.pts[b] - p)) < 0.0
            })
            .map(|(a, b, _)| key(a, b))
            .collect())
    }

    fn queue_created(&self, tri_queue: &mut VecDeque<(usize, [usize; 3])>, seg_queue: &mut VecDeque<(usize, usize)>) {
        for &t in &self.created {
            let tri = self.tris[t];
            if !tri.inside {
                continue;
            }
            if self.is_bad(t) {
                tri_queue.push_back((t, tri.v));
            }
            for i in 0..3 {
                let (a, b) = self.edge(t, i);
                if self.is_constraint(a, b) {
                    seg_queue.push_back(key(a, b));
                }
            }
        }
    }

    fn refine(&mut self) -> Result<(), MeshError> {
        let mut seg_queue: VecDeque<(usize, usize)> = self.constraints.keys().copied().collect();
        let mut tri_queue: VecDeque<(usize, [usize; 3])> = (0..self.tris.len())
            .filter(|&t| self.is_bad(t))
            .map(|t| (t, self.tris[t].v))
            .collect();
        let mut sorted: Vec<(usize, usize)> = seg_queue.drain(..).collect();
        sorted.sort_unstable();
        seg_queue.extend(sorted);
        loop {
            if let Some(k) = seg_queue.pop_front() {
                let Some(&seg) = self.constraints.get(&k) else { continue };
                if !self.encroached(seg.a, seg.b) {
                    continue;
                }
                self.split(seg)?;
                self.queue_created(&mut tri_queue, &mut seg_queue);
                seg_queue.push_back(key(seg.a, self.pts.len() - 1));
                seg_queue.push_back(key(self.pts.len() - 1, seg.b));
                continue;
            }
            let Some((t, v)) = tri_queue.pop_front() else { break };
            if !self.tris[t].alive || self.tris[t].v != v || !self.is_bad(t) {
                continue;
            }
            let c = self.circumcenter(t);
            match self.walk_to(t, c)? {
                Walk::Crossed(k) => {
                    seg_queue.push_back(k);
                    self.force_split(k, &mut seg_queue, &mut tri_queue)?;
                    tri_queue.push_back((t, v));
                }
                Walk::Found(tc) => {
                    let enc = self.encroached_by(tc, c)?;
                    if enc.is_empty() {
                        match self.insert(c, NodeKind::Interior) {
                            Ok(_) => self.queue_created(&mut tri_queue, &mut seg_queue),
                            Err(MeshError::DuplicatePoint) => {}
                            Err(e) => return Err(e),
                        }
                    } else {
                        for k in enc {
                            self.force_split(k, &mut seg_queue, &mut tri_queue)?;
                        }
                        tri_queue.push_back((t, v));
                    }
                }
            }
        }
        Ok(())
    }

    fn force_split(
        &mut self,
        k: (usize, usize),
        seg_queue: &mut VecDeque<(usize, usize)>,
        tri_queue: &mut VecDeque<(usize, [usize; 3])>,
    ) -> Result<(), MeshError> {
        let Some(&seg) = self.constraints.get(&k) else { return Ok(()) };
        let (left, right, _) = self.split(seg)?;
        self.queue_created(tri_queue, seg_queue);
        seg_queue.push_back(key(left.a, left.b));
        seg_queue.push_back(key(right.a, right.b));
        Ok(())
    }

    fn into_mesh(self) -> Mesh {
        let mut map = vec![NONE; self.pts.len()];
        let mut nodes = Vec::new();
        let mut kinds = Vec::new();
        let mut triangles = Vec::new();
        for tri in self.tris.iter().filter(|t| t.alive && t.inside) {
            let mut out = [0; 3];
            for (k, &v) in tri.v.iter().enumerate() {
                if map[v] == NONE {
                    map[v] = nodes.len();
                    nodes.push(self.pts[v]);
                    kinds.push(self.kinds[v]);
                }
                out[k] = map[v];
            }
            triangles.push(out);
        }
        let mut segs: Vec<&Seg> = self.constraints.values().collect();
        segs.sort_by(|x, y| x.piece.cmp(&y.piece).then(x.s0.total_cmp(&y.s0)));
        let boundary_edges = segs
            .into_iter()
            .map(|s| BoundaryEdge {
                nodes: [map[s.a], map[s.b]],
                piece: s.piece,
                s: [s.s0, s.s1],
                midpoint: self.curve.point(0.5 * (s.s0 + s.s1)),
            })
            .collect();
        Mesh { nodes, kinds, triangles, boundary_edges, order: 1, midnodes: Vec::new() }
    }
}

/// Triangulate the region bounded by `polyline` (sampled from `curve`) and
/// refine until every triangle has minimum angle at least 20 degrees and
/// longest edge at most the local target size.
pub fn triangulate<C: ClosedCurve + ?Sized>(curve: &C, polyline: &BoundaryPolyline, sizing: &SizingField) -> Result<Mesh, MeshError> {
    let pts = polyline.points();
    if pts.len() < 3 {
        return Err(MeshError::RefinementStalled("boundary needs at least three vertices".into()));
    }
    let lo = pts.iter().fold(Vec2::repeat(f64::INFINITY), |acc, p| acc.inf(p));
    let hi = pts.iter().fold(Vec2::repeat(f64::NEG_INFINITY), |acc, p| acc.sup(p));
    let mut tr = Triangulator::new(curve, sizing, (lo, hi));
    let mut ids = Vec::with_capacity(pts.len());
    for v in &polyline.vertices {
        ids.push(tr.insert(v.point, NodeKind::Boundary { piece: v.piece, s: v.s })?);
    }
    let mut segs: Vec<Seg> = polyline
        .segments
        .iter()
        .map(|s| Seg { a: ids[s.a], b: ids[s.b], piece: s.piece, s0: s.s0, s1: s.s1 })
        .collect();
    let mut recovered = false;
    for _ in 0..60 {
        let mut next = Vec::with_capacity(segs.len());
        let mut missing = false;
        for seg in segs {
            if tr.has_edge(seg.a, seg.b) {
                next.push(seg);
            } else {
                missing = true;
                let (l, r, _) = tr.split(seg)?;
                next.push(l);
                next.push(r);
            }
        }
        segs = next;
        if !missing {
            recovered = true;
            break;
        }
    }
    if !recovered {
        return Err(MeshError::EncroachmentLoop);
    }
    for seg in segs {
        tr.constraints.insert(key(seg.a, seg.b), seg);
    }
    tr.classify();
    tr.refine()?;
    Ok(tr.into_mesh())
}
