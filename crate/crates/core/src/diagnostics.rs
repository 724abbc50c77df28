//! Numerical checks of the bounded-geometry hypotheses in the metric
//! `ĝ = r^{-2} dx²`: distance to the boundary (finite width), normal reach of
//! boundary geodesics, and curvature suprema, per family member.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{perp, segments_intersect, ClosedCurve};
use crate::fem::Locator;
use crate::geometry::{construct_rounded_domain, GeometryError, Polygon, RoundedDomain, RoundingParams};
use crate::mesh::{edge_key, mesh_domain, Mesh, MeshError, SizingField};
use crate::weights::{curvature_profile, WeightError, WeightFunction};
use crate::Vec2;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("mesh has no elements")]
    MeshMissing,
    #[error("geodesic integration left the admissible region at ({0}, {1})")]
    OdeStep(f64, f64),
    #[error("point ({0}, {1}) is outside the mesh")]
    OutsideMesh(f64, f64),
    #[error("at least 64 boundary samples are required, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DiagnosticsError>;

/// `∫ ds / r` along the straight segment `[a, b]` by 5-point Gauss.
pub fn segment_metric_length(w: &WeightFunction, a: Vec2, b: Vec2) -> f64 {
    const NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let len = (b - a).norm();
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let sum: f64 = NODES.iter().zip(WEIGHTS).map(|(&t, wt)| wt / w.value(mid + half * t)).sum();
    0.5 * len * sum
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Graph on mesh vertices plus Steiner points on edges, with `ĝ` lengths of
/// straight links inside each triangle.
pub struct MetricGraph {
    pub points: Vec<Vec2>,
    adjacency: Vec<Vec<(usize, f64)>>,
    boundary: Vec<usize>,
    /// Graph points of each triangle.
    cells: Vec<Vec<usize>>,
    vertex_count: usize,
    locator: Locator,
    mesh: Mesh,
}

impl MetricGraph {
    /// `steiner` extra points per mesh edge.
    pub fn new(mesh: &Mesh, w: &WeightFunction, steiner: usize) -> Result<Self> {
        if mesh.triangles.is_empty() {
            return Err(DiagnosticsError::MeshMissing);
        }
        let mut points = mesh.nodes.clone();
        let vertex_count = points.len();
        let boundary_edges: HashSet<(usize, usize)> = mesh.boundary_edges.iter().map(|e| edge_key(e.nodes[0], e.nodes[1])).collect();
        let mut edge_points: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut edges_in_order = Vec::new();
        for tri in &mesh.triangles {
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                edge_points.entry(key).or_insert_with(|| {
                    edges_in_order.push(key);
                    let (a, b) = (mesh.nodes[key.0], mesh.nodes[key.1]);
                    (1..=steiner)
                        .map(|j| {
                            points.push(a + (b - a) * (j as f64 / (steiner + 1) as f64));
                            points.len() - 1
                        })
                        .collect()
                });
            }
        }
        let mut links: Vec<(usize, usize)> = Vec::new();
        for key in &edges_in_order {
            let chain: Vec<usize> = std::iter::once(key.0).chain(edge_points[key].iter().cloned()).chain(std::iter::once(key.1)).collect();
            links.extend(chain.windows(2).map(|p| (p[0], p[1])));
        }
        let mut cells = Vec::with_capacity(mesh.triangles.len());
        for tri in &mesh.triangles {
            let sides: Vec<Vec<usize>> = (0..3)
                .map(|k| {
                    let key = edge_key(tri[k], tri[(k + 1) % 3]);
                    std::iter::once(key.0).chain(edge_points[&key].iter().cloned()).chain(std::iter::once(key.1)).collect()
                })
                .collect();
            let mut all: Vec<usize> = sides.iter().flatten().cloned().collect();
            all.sort_unstable();
            all.dedup();
            for (i, &p) in all.iter().enumerate() {
                for &q in &all[i + 1..] {
                    if !sides.iter().any(|s| s.contains(&p) && s.contains(&q)) {
                        links.push((p, q));
                    }
                }
            }
            cells.push(all);
        }
        let weights: Vec<f64> = links.par_iter().map(|&(p, q)| segment_metric_length(w, points[p], points[q])).collect();
        let mut adjacency = vec![Vec::new(); points.len()];
        for (&(p, q), &len) in links.iter().zip(&weights) {
            adjacency[p].push((q, len));
            adjacency[q].push((p, len));
        }
        let mut boundary: Vec<usize> = (0..vertex_count).filter(|&v| mesh.kinds[v].is_boundary()).collect();
        for key in &edges_in_order {
            if boundary_edges.contains(key) {
                boundary.extend(edge_points[key].iter().cloned());
            }
        }
        let p1 = Mesh {
            nodes: mesh.nodes.clone(),
            kinds: mesh.kinds.clone(),
            triangles: mesh.triangles.clone(),
            boundary_edges: mesh.boundary_edges.clone(),
            order: 1,
            midnodes: Vec::new(),
        };
        let locator = Locator::new(&p1);
        Ok(Self { points, adjacency, boundary, cells, vertex_count, locator, mesh: p1 })
    }

    fn dijkstra(&self, seeds: &[(usize, f64)], stop: impl Fn(f64) -> bool) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.points.len()];
        let mut heap = BinaryHeap::new();
        for &(s, d) in seeds {
            if d < dist[s] {
                dist[s] = d;
                heap.push(Entry(d, s));
            }
        }
        while let Some(Entry(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            if stop(d) {
                break;
            }
            for &(u, len) in &self.adjacency[v] {
                let nd = d + len;
                if nd < dist[u] {
                    dist[u] = nd;
                    heap.push(Entry(nd, u));
                }
            }
        }
        dist
    }

    /// Graph distance from every mesh vertex to the boundary.
    pub fn boundary_distances(&self) -> Vec<f64> {
        let seeds: Vec<(usize, f64)> = self.boundary.iter().map(|&b| (b, 0.0)).collect();
        let mut d = self.dijkstra(&seeds, |_| false);
        d.truncate(self.vertex_count);
        d
    }

    /// Graph distance between two points of the mesh, each joined to the
    /// graph points of its containing triangle.
    pub fn distance_between(&self, w: &WeightFunction, x: Vec2, y: Vec2) -> Result<f64> {
        let tx = self.locate(x)?;
        let ty = self.locate(y)?;
        let seeds: Vec<(usize, f64)> = self.cells[tx].iter().map(|&p| (p, segment_metric_length(w, x, self.points[p]))).collect();
        let exits: Vec<(usize, f64)> = self.cells[ty].iter().map(|&p| (p, segment_metric_length(w, self.points[p], y))).collect();
        let mut best = if tx == ty { segment_metric_length(w, x, y) } else { f64::INFINITY };
        let bound = best;
        let dist = self.dijkstra(&seeds, |d| d >= bound);
        for &(p, tail) in &exits {
            best = best.min(dist[p] + tail);
        }
        Ok(best)
    }

    fn locate(&self, x: Vec2) -> Result<usize> {
        self.locator.locate(&self.mesh, x, 1e-12).map(|(t, _, _)| t).ok_or(DiagnosticsError::OutsideMesh(x.x, x.y))
    }
}

/// Graph-based estimate of `sup_x dist_ĝ(x, ∂Ω)` and the per-vertex distances.
#[derive(Debug, Clone)]
pub struct WidthEstimate {
    pub sup: f64,
    pub distances: Vec<f64>,
}

/// Width from a mesh of the domain: maximum over vertices of the Dijkstra
/// distance to the boundary (biased upward by the graph discretization).
pub fn finite_width_estimate(mesh: &Mesh, w: &WeightFunction, steiner: usize) -> Result<WidthEstimate> {
    let graph = MetricGraph::new(mesh, w, steiner)?;
    let distances = graph.boundary_distances();
    let sup = distances.iter().cloned().fold(0.0, f64::max);
    Ok(WidthEstimate { sup, distances })
}

/// Largest boundary distance among vertices within `radius` of a puncture.
pub fn corner_ball_width(mesh: &Mesh, w: &WeightFunction, distances: &[f64], radius: f64) -> f64 {
    mesh.nodes
        .iter()
        .zip(distances)
        .filter(|(x, _)| w.distance(**x) < radius)
        .map(|(_, &d)| d)
        .fold(0.0, f64::max)
}

/// Uniform bucket grid of boundary chords for crossing queries.
struct SegmentGrid {
    points: Vec<Vec2>,
    lo: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl SegmentGrid {
    fn new(points: Vec<Vec2>) -> Self {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for p in &points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = (hi - lo).max();
        let cell = extent / 256.0;
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut grid = Self { points, lo, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for k in 0..grid.points.len() {
            let (a, b) = grid.segment(k);
            if let Some((i0, j0, i1, j1)) = grid.range(a.inf(&b), a.sup(&b)) {
                for j in j0..=j1 {
                    for i in i0..=i1 {
                        grid.buckets[j * nx + i].push(k);
                    }
                }
            }
        }
        grid
    }

    fn segment(&self, k: usize) -> (Vec2, Vec2) {
        (self.points[k], self.points[(k + 1) % self.points.len()])
    }

    fn range(&self, lo: Vec2, hi: Vec2) -> Option<(usize, usize, usize, usize)> {
        let f = |v: f64, o: f64, n: usize| ((v - o) / self.cell).floor().clamp(-1.0, n as f64) as isize;
        let (i0, j0) = (f(lo.x, self.lo.x, self.nx), f(lo.y, self.lo.y, self.ny));
        let (i1, j1) = (f(hi.x, self.lo.x, self.nx), f(hi.y, self.lo.y, self.ny));
        if i1 < 0 || j1 < 0 || i0 >= self.nx as isize || j0 >= self.ny as isize {
            return None;
        }
        let c = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
        Some((c(i0, self.nx), c(j0, self.ny), c(i1, self.nx), c(j1, self.ny)))
    }

    fn crosses(&self, a: Vec2, b: Vec2) -> bool {
        let Some((i0, j0, i1, j1)) = self.range(a.inf(&b), a.sup(&b)) else { return false };
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &k in &self.buckets[j * self.nx + i] {
                    let (p, q) = self.segment(k);
                    if segments_intersect(a, b, p, q) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Dense boundary polygon: straight pieces by their endpoints, curved pieces
/// by `per_curved` chords.
fn boundary_polygon<C: ClosedCurve + ?Sized>(curve: &C, per_curved: usize) -> Vec<Vec2> {
    let mut out = Vec::new();
    for i in 0..curve.piece_count() {
        let (a, b) = curve.piece_range(i);
        let straight = curve.curvature(0.5 * (a + b)) == 0.0 && curve.curvature(a + 0.3 * (b - a)) == 0.0;
        let m = if straight { 1 } else { per_curved };
        for k in 0..m {
            out.push(curve.piece_point(i, k as f64 / m as f64));
        }
    }
    out
}

/// Geodesic shooting parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachOptions {
    /// RK4 step in `ĝ` arc length.
    pub step: f64,
    /// Largest parameter followed.
    pub cap: f64,
    /// Crossings during the first `ignore` units are attributed to the start point.
    pub ignore: f64,
}

impl Default for ReachOptions {
    fn default() -> Self {
        Self { step: 1e-3, cap: 10.0, ignore: 1e-2 }
    }
}

/// Per-sample first-return parameters of inward and outward normal geodesics.
#[derive(Debug, Clone)]
pub struct ReachEstimate {
    pub min: f64,
    /// `(s, inward, outward)` per boundary sample.
    pub values: Vec<(f64, f64, f64)>,
}

/// Right-hand side of the geodesic equation of `e^{2φ} dx²`, `φ = −log r`:
/// `ẍ = −2(∇φ·ẋ)ẋ + |ẋ|²∇φ`.
fn geodesic_rhs(w: &WeightFunction, x: Vec2, v: Vec2) -> Result<(Vec2, Vec2)> {
    let (r, grad) = w.value_and_gradient(x);
    if !(r > 0.0) || !r.is_finite() {
        return Err(DiagnosticsError::OdeStep(x.x, x.y));
    }
    let dphi = -grad / r;
    Ok((v, -2.0 * dphi.dot(&v) * v + dphi * v.norm_squared()))
}

/// First parameter at which the unit-speed geodesic from `x0` with initial
/// Euclidean direction `dir` crosses the boundary again (capped).
fn first_return(w: &WeightFunction, grid: &SegmentGrid, x0: Vec2, dir: Vec2, opts: &ReachOptions) -> Result<f64> {
    let mut x = x0;
    let mut v = dir * w.value(x0);
    let h = opts.step;
    let steps = (opts.cap / h).round() as usize;
    for k in 0..steps {
        let (k1x, k1v) = geodesic_rhs(w, x, v)?;
        let (k2x, k2v) = geodesic_rhs(w, x + k1x * (0.5 * h), v + k1v * (0.5 * h))?;
        let (k3x, k3v) = geodesic_rhs(w, x + k2x * (0.5 * h), v + k2v * (0.5 * h))?;
        let (k4x, k4v) = geodesic_rhs(w, x + k3x * h, v + k3v * h)?;
        let nx = x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        let nv = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        let t = (k + 1) as f64 * h;
        if t > opts.ignore && grid.crosses(x, nx) {
            return Ok(t);
        }
        x = nx;
        v = nv;
    }
    Ok(opts.cap)
}

/// Shoot `ĝ` geodesics along both unit normals from `samples` equally spaced
/// boundary points; the minimum first-return parameter is the reach proxy.
pub fn normal_reach_estimate<C: ClosedCurve + ?Sized>(curve: &C, w: &WeightFunction, samples: usize, opts: &ReachOptions) -> Result<ReachEstimate> {
    if samples < 64 {
        return Err(DiagnosticsError::TooFewSamples(samples));
    }
    let grid = SegmentGrid::new(boundary_polygon(curve, 512));
    let len = curve.length();
    let values: Vec<(f64, f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let s = len * k as f64 / samples as f64;
            let x = curve.point(s);
            let inward = perp(curve.tangent(s));
            Ok((s, first_return(w, &grid, x, inward, opts)?, first_return(w, &grid, x, -inward, opts)?))
        })
        .collect::<Result<_>>()?;
    let min = values.iter().map(|v| v.1.min(v.2)).fold(f64::INFINITY, f64::min);
    Ok(ReachEstimate { min, values })
}

/// Settings for [`bg_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgOptions {
    pub max_k: usize,
    pub curvature_samples_per_piece: usize,
    pub reach_samples: usize,
    pub reach: ReachOptions,
    pub beta: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub steiner: usize,
}

impl Default for BgOptions {
    fn default() -> Self {
        Self {
            max_k: 4,
            curvature_samples_per_piece: 24,
            reach_samples: 128,
            reach: ReachOptions::default(),
            beta: 0.4,
            h_min: 1e-5,
            h_max: 0.1,
            steiner: 2,
        }
    }
}

/// Diagnostics of one family member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgRow {
    pub n: u32,
    pub sup_kappa: Vec<f64>,
    pub width_sup: f64,
    pub corner_width_max: f64,
    pub reach_min: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgReport {
    pub rows: Vec<BgRow>,
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi / lo
}

impl BgReport {
    /// `max / min` of `sup |d^k κ|` across rows.
    pub fn kappa_ratio(&self, k: usize) -> f64 {
        spread(self.rows.iter().map(|r| r.sup_kappa[k]))
    }

    pub fn width_ratio(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.width_sup))
    }

    pub fn reach_ratio(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.reach_min))
    }

    /// Long-format CSV: one line per `(n, k)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["n", "k", "sup_kappa_k", "width_sup", "reach_min", "corner_width_max", "flags"])?;
        for row in &self.rows {
            for (k, v) in row.sup_kappa.iter().enumerate() {
                wtr.write_record([
                    row.n.to_string(),
                    k.to_string(),
                    format!("{v:e}"),
                    format!("{:e}", row.width_sup),
                    format!("{:e}", row.reach_min),
                    format!("{:e}", row.corner_width_max),
                    row.flags.join(";"),
                ])?;
            }
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut rows: Vec<BgRow> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| rec[i].parse::<f64>().unwrap_or(f64::NAN);
            let n: u32 = rec[0].parse().unwrap_or(0);
            if rows.last().is_none_or(|r| r.n != n) {
                rows.push(BgRow {
                    n,
                    sup_kappa: Vec::new(),
                    width_sup: parse(3),
                    reach_min: parse(4),
                    corner_width_max: parse(5),
                    flags: if rec[6].is_empty() { Vec::new() } else { rec[6].split(';').map(String::from).collect() },
                });
            }
            rows.last_mut().expect("row pushed").sup_kappa.push(parse(2));
        }
        Ok(Self { rows })
    }
}

/// Diagnostics of one family member.
pub fn bg_row(domain: &RoundedDomain, opts: &BgOptions) -> Result<BgRow> {
    let w = WeightFunction::for_domain(domain);
    let mut flags = Vec::new();
    let sup_kappa = (0..=opts.max_k)
        .map(|k| Ok(curvature_profile(domain, &w, k, opts.curvature_samples_per_piece, None)?.sup))
        .collect::<Result<Vec<f64>>>()?;
    if sup_kappa.iter().any(|v| !v.is_finite()) {
        flags.push("curvature_not_finite".to_string());
    }
    let sizing = SizingField::conformal(w.clone(), opts.beta, opts.h_min, opts.h_max)?;
    let mesh = mesh_domain(domain, &sizing)?;
    let width = finite_width_estimate(&mesh, &w, opts.steiner)?;
    let corner = corner_ball_width(&mesh, &w, &width.distances, w.eta().exact_radius());
    if !width.sup.is_finite() {
        flags.push("width_not_finite".to_string());
    }
    if corner > std::f64::consts::TAU + 0.1 {
        flags.push("corner_width_above_bound".to_string());
    }
    let reach = normal_reach_estimate(domain, &w, opts.reach_samples, &opts.reach)?;
    if !(reach.min > 0.0) {
        flags.push("reach_not_positive".to_string());
    }
    Ok(BgRow { n: domain.n(), sup_kappa, width_sup: width.sup, corner_width_max: corner, reach_min: reach.min, flags })
}

/// Diagnostics for every `n` in `n_list`, computed independently per row.
pub fn bg_report(polygon: &Polygon, template: &RoundingParams, n_list: &[u32], opts: &BgOptions) -> Result<BgReport> {
    let rows = n_list
        .par_iter()
        .map(|&n| bg_row(&construct_rounded_domain(polygon, &template.at(n))?, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(BgReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CircleCurve;
    use crate::geometry::select_default_params;
    use approx::assert_relative_eq;

    #[test]
    fn disk_width_scales_with_constant_factor() {
        let radius = 0.4;
        let disk = CircleCurve::new(Vec2::zeros(), radius);
        let w = WeightFunction::constant(1.0 / 6.0);
        let mesh = mesh_domain(&disk, &SizingField::uniform(0.03).unwrap()).unwrap();
        let est = finite_width_estimate(&mesh, &w, 3).unwrap();
        assert_relative_eq!(est.sup, 6.0 * radius, max_relative = 0.02);
    }

    #[test]
    fn width_converges_under_refinement() {
        let sq = Polygon::preset("square").unwrap();
        let d = construct_rounded_domain(&sq, &select_default_params(&sq).unwrap().at(2)).unwrap();
        let w = WeightFunction::for_domain(&d);
        let coarse = mesh_domain(&d, &SizingField::conformal(w.clone(), 0.6, 1e-5, 0.1).unwrap()).unwrap();
        let fine = mesh_domain(&d, &SizingField::conformal(w.clone(), 0.3, 1e-5, 0.05).unwrap()).unwrap();
        let a = finite_width_estimate(&coarse, &w, 2).unwrap().sup;
        let b = finite_width_estimate(&fine, &w, 2).unwrap().sup;
        assert!((a - b).abs() / b < 0.05, "{a} {b}");
    }

    #[test]
    fn graph_distance_matches_radial_log() {
        let w = WeightFunction::new(crate::weights::EtaProfile::new(1.0), vec![Vec2::new(0.0, -0.05)]);
        let disk = CircleCurve::new(Vec2::new(0.0, 0.03), 0.06);
        let mesh = mesh_domain(&disk, &SizingField::conformal(w.clone(), 0.25, 1e-4, 0.01).unwrap()).unwrap();
        let graph = MetricGraph::new(&mesh, &w, 3).unwrap();
        let d = graph.distance_between(&w, Vec2::new(0.0, -0.02), Vec2::new(0.0, 0.07)).unwrap();
        let exact = (0.12f64 / 0.03).ln();
        assert_relative_eq!(d, exact, max_relative = 0.01);
    }

    #[test]
    fn circle_reach_is_capped() {
        let circle = CircleCurve::new(Vec2::zeros(), 1.0);
        let w = WeightFunction::constant(1.0 / 6.0);
        let opts = ReachOptions { step: 1e-2, ..ReachOptions::default() };
        let est = normal_reach_estimate(&circle, &w, 64, &opts).unwrap();
        assert_eq!(est.min, 10.0);
        assert!(normal_reach_estimate(&circle, &w, 16, &opts).is_err());
    }

    #[test]
    fn square_reach_is_symmetric_and_positive() {
        let sq = Polygon::preset("square").unwrap();
        let d = construct_rounded_domain(&sq, &select_default_params(&sq).unwrap().at(2)).unwrap();
        let w = WeightFunction::for_domain(&d);
        let est = normal_reach_estimate(&d, &w, 64, &ReachOptions::default()).unwrap();
        assert!(est.min >= 0.05);
        for k in 0..16 {
            let (a, b) = (est.values[k], est.values[k + 16]);
            assert!((a.1 - b.1).abs() < 1e-6 && (a.2 - b.2).abs() < 1e-6, "{a:?} {b:?}");
        }
    }

    #[test]
    fn report_round_trips_through_csv() {
        let sq = Polygon::preset("square").unwrap();
        let opts = BgOptions { max_k: 1, reach_samples: 64, h_max: 0.2, beta: 0.8, ..BgOptions::default() };
        let report = bg_report(&sq, &select_default_params(&sq).unwrap(), &[1, 2, 4], &opts).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.rows.iter().all(|r| r.flags.is_empty()));
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let back = BgReport::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, report);
    }
}
