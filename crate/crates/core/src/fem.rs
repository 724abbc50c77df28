//! Lagrange P1 and isoparametric P2 finite elements for the Dirichlet Poisson
//! problem `Δu = f`, `u = 0` on the boundary, and the weighted eigenproblem
//! `K u = λ M_w u` with mass density `r^{-2}`.

use std::sync::Arc;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::mesh::Mesh;
use crate::quadrature::{triangle_degree4, triangle_degree6, TriangleRule};
use crate::sparse::{default_max_iterations, dot, pcg, CsrMatrix, SolveError, TripletBuilder};
use crate::weights::WeightFunction;
use crate::Vec2;

/// Relative residual for all linear solves.
pub const CG_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("element {0} has a nonpositive Jacobian")]
    SingularElement(usize),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("inverse iteration stalled after {0} steps")]
    IterationStalled(usize),
    #[error("point ({0}, {1}) is outside the mesh")]
    OutsideDomain(f64, f64),
    #[error("no free degrees of freedom")]
    NoUnknowns,
}

pub type Result<T> = std::result::Result<T, FemError>;

/// Shape function values, reference gradients and reference Hessians
/// `(d_xi xi, d_xi eta, d_eta eta)` at `(xi, eta)`.
pub fn shape_functions(order: u8, xi: f64, eta: f64) -> (Vec<f64>, Vec<[f64; 2]>, Vec<[f64; 3]>) {
    let l0 = 1.0 - xi - eta;
    if order == 1 {
        return (
            vec![l0, xi, eta],
            vec![[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0.0; 3]; 3],
        );
    }
    let values = vec![
        l0 * (2.0 * l0 - 1.0),
        xi * (2.0 * xi - 1.0),
        eta * (2.0 * eta - 1.0),
        4.0 * l0 * xi,
        4.0 * xi * eta,
        4.0 * eta * l0,
    ];
    let grads = vec![
        [1.0 - 4.0 * l0, 1.0 - 4.0 * l0],
        [4.0 * xi - 1.0, 0.0],
        [0.0, 4.0 * eta - 1.0],
        [4.0 * (l0 - xi), -4.0 * xi],
        [4.0 * eta, 4.0 * xi],
        [-4.0 * eta, 4.0 * (l0 - eta)],
    ];
    let hess = vec![
        [4.0, 4.0, 4.0],
        [4.0, 0.0, 0.0],
        [0.0, 0.0, 4.0],
        [-8.0, -4.0, 0.0],
        [0.0, 4.0, 0.0],
        [0.0, -4.0, -8.0],
    ];
    (values, grads, hess)
}

/// Basis data at one quadrature or evaluation point of an element.
#[derive(Debug, Clone)]
pub struct PointBasis {
    pub x: Vec2,
    /// Quadrature weight including the Jacobian (zero for evaluation points).
    pub weight: f64,
    pub values: Vec<f64>,
    pub grads: Vec<Vec2>,
    /// Physical Hessians `(u_xx, u_xy, u_yy)`.
    pub hessians: Vec<[f64; 3]>,
}

/// Physical basis at reference point `(xi, eta)` of element `t`.
pub fn basis_at(mesh: &Mesh, t: usize, xi: f64, eta: f64) -> Result<PointBasis> {
    let nodes = mesh.element_nodes(t);
    let (values, rgrads, rhess) = shape_functions(mesh.order, xi, eta);
    let mut x = Vec2::zeros();
    let mut jac = Matrix2::zeros();
    let mut x2 = [[0.0; 3]; 2];
    for (k, &v) in nodes.iter().enumerate() {
        let p = mesh.nodes[v];
        x += p * values[k];
        for a in 0..2 {
            jac[(a, 0)] += p[a] * rgrads[k][0];
            jac[(a, 1)] += p[a] * rgrads[k][1];
            for c in 0..3 {
                x2[a][c] += p[a] * rhess[k][c];
            }
        }
    }
    let det = jac.determinant();
    if det <= 0.0 {
        return Err(FemError::SingularElement(t));
    }
    let inv = jac.try_inverse().ok_or(FemError::SingularElement(t))?;
    let inv_t = inv.transpose();
    let grads: Vec<Vec2> = rgrads.iter().map(|g| inv_t * Vec2::new(g[0], g[1])).collect();
    let hessians = rhess
        .iter()
        .zip(&grads)
        .map(|(h, g)| {
            let c = |k: usize| h[k] - g.x * x2[0][k] - g.y * x2[1][k];
            let hr = Matrix2::new(c(0), c(1), c(1), c(2));
            let hp = inv_t * hr * inv;
            [hp[(0, 0)], hp[(0, 1)], hp[(1, 1)]]
        })
        .collect();
    Ok(PointBasis { x, weight: 0.5 * det, values, grads, hessians })
}

/// Quadrature rule for element `t`: degree 6 when it comes within the
/// support radius of a puncture, degree 4 otherwise.
pub fn element_rule(mesh: &Mesh, t: usize, w: Option<&WeightFunction>) -> &'static TriangleRule {
    if let Some(w) = w {
        if !w.punctures().is_empty() {
            let [a, b, c] = mesh.corners(t);
            let centroid = (a + b + c) / 3.0;
            let reach = (a - centroid).norm().max((b - centroid).norm()).max((c - centroid).norm());
            if w.distance(centroid) - reach < w.eta().support_radius() {
                return triangle_degree6();
            }
        }
    }
    triangle_degree4()
}

/// Quadrature points of element `t` with full basis data.
pub fn element_quadrature(mesh: &Mesh, t: usize, rule: &TriangleRule) -> Result<Vec<PointBasis>> {
    (0..rule.len())
        .map(|q| {
            let (xi, eta) = rule.reference(q);
            let mut pb = basis_at(mesh, t, xi, eta)?;
            pb.weight *= rule.weights[q];
            Ok(pb)
        })
        .collect()
}

/// Global matrices over all mesh nodes.
#[derive(Debug, Clone)]
pub struct Operators {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// Mass with density `r^{-2}`; present when a weight was supplied.
    pub weighted_mass: Option<CsrMatrix>,
}

/// Assemble stiffness, mass and (optionally) the `r^{-2}`-weighted mass.
pub fn assemble_poisson(mesh: &Mesh, w: Option<&WeightFunction>) -> Result<Operators> {
    let n = mesh.nodes.len();
    let per = if mesh.order == 2 { 6 } else { 3 };
    let cap = mesh.triangles.len() * per * per;
    let mut k = TripletBuilder::with_capacity(n, cap);
    let mut m = TripletBuilder::with_capacity(n, cap);
    let mut mw = w.map(|_| TripletBuilder::with_capacity(n, cap));
    for t in 0..mesh.triangles.len() {
        let nodes = mesh.element_nodes(t);
        let pts = element_quadrature(mesh, t, element_rule(mesh, t, w))?;
        let mut ke = vec![0.0; per * per];
        let mut me = vec![0.0; per * per];
        let mut mwe = vec![0.0; per * per];
        for p in &pts {
            let density = w.map(|w| w.value(p.x).powi(-2)).unwrap_or(0.0);
            for i in 0..per {
                for j in 0..per {
                    ke[i * per + j] += p.weight * p.grads[i].dot(&p.grads[j]);
                    let vv = p.weight * p.values[i] * p.values[j];
                    me[i * per + j] += vv;
                    mwe[i * per + j] += vv * density;
                }
            }
        }
        for i in 0..per {
            for j in 0..per {
                k.push(nodes[i], nodes[j], ke[i * per + j]);
                m.push(nodes[i], nodes[j], me[i * per + j]);
                if let Some(mw) = mw.as_mut() {
                    mw.push(nodes[i], nodes[j], mwe[i * per + j]);
                }
            }
        }
    }
    Ok(Operators { stiffness: k.build(), mass: m.build(), weighted_mass: mw.map(|b| b.build()) })
}

/// `∫ f φ_i` for every node `i`.
pub fn load_vector(mesh: &Mesh, f: &dyn Fn(Vec2) -> f64, w: Option<&WeightFunction>) -> Result<Vec<f64>> {
    let mut b = vec![0.0; mesh.nodes.len()];
    for t in 0..mesh.triangles.len() {
        let nodes = mesh.element_nodes(t);
        for p in element_quadrature(mesh, t, element_rule(mesh, t, w))? {
            let fx = f(p.x);
            for (i, &v) in nodes.iter().enumerate() {
                b[v] += p.weight * fx * p.values[i];
            }
        }
    }
    Ok(b)
}

/// Indices of nodes not on the boundary.
pub fn free_nodes(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.nodes.len()).filter(|&i| !mesh.kinds[i].is_boundary()).collect()
}

/// Finite element field on a mesh: one coefficient per node.
#[derive(Debug, Clone)]
pub struct FemSolution {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
    pub dirichlet: Vec<bool>,
    locator: Arc<Locator>,
}

/// Value, gradient and Hessian `(u_xx, u_xy, u_yy)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub value: f64,
    pub gradient: Vec2,
    pub hessian: [f64; 3],
}

impl FemSolution {
    pub fn from_values(mesh: Arc<Mesh>, values: Vec<f64>) -> Self {
        let dirichlet = mesh.boundary_mask();
        let locator = Arc::new(Locator::new(&mesh));
        Self { mesh, values, dirichlet, locator }
    }

    /// Nodal interpolant of `g`.
    pub fn interpolate(mesh: Arc<Mesh>, g: &dyn Fn(Vec2) -> f64) -> Self {
        let values = mesh.nodes.iter().map(|&x| g(x)).collect();
        Self::from_values(mesh, values)
    }

    pub fn order(&self) -> u8 {
        self.mesh.order
    }

    /// Field data at quadrature point `p` of element `t`.
    pub fn at_basis(&self, t: usize, p: &PointBasis) -> PointValue {
        let nodes = self.mesh.element_nodes(t);
        let mut out = PointValue { value: 0.0, gradient: Vec2::zeros(), hessian: [0.0; 3] };
        for (i, &v) in nodes.iter().enumerate() {
            let c = self.values[v];
            out.value += c * p.values[i];
            out.gradient += p.grads[i] * c;
            for k in 0..3 {
                out.hessian[k] += c * p.hessians[i][k];
            }
        }
        out
    }

    pub fn evaluate(&self, x: Vec2) -> Result<PointValue> {
        let (t, xi, eta) = self.locator.locate(&self.mesh, x, 1e-10).ok_or(FemError::OutsideDomain(x.x, x.y))?;
        Ok(self.at_basis(t, &basis_at(&self.mesh, t, xi, eta)?))
    }

    /// Evaluate, accepting points up to `tolerance` (reference units) outside
    /// the nearest element.
    pub fn evaluate_near(&self, x: Vec2, tolerance: f64) -> Result<PointValue> {
        let (t, xi, eta) = self.locator.locate(&self.mesh, x, tolerance).ok_or(FemError::OutsideDomain(x.x, x.y))?;
        Ok(self.at_basis(t, &basis_at(&self.mesh, t, xi, eta)?))
    }

    pub fn value(&self, x: Vec2) -> Result<f64> {
        Ok(self.evaluate(x)?.value)
    }

    pub fn gradient(&self, x: Vec2) -> Result<Vec2> {
        Ok(self.evaluate(x)?.gradient)
    }

    pub fn hessian(&self, x: Vec2) -> Result<[f64; 3]> {
        Ok(self.evaluate(x)?.hessian)
    }

    /// `∫ (u − g)²` by element quadrature, square-rooted.
    pub fn l2_error(&self, g: &dyn Fn(Vec2) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        for t in 0..self.mesh.triangles.len() {
            for p in element_quadrature(&self.mesh, t, triangle_degree6())? {
                let d = self.at_basis(t, &p).value - g(p.x);
                sum += p.weight * d * d;
            }
        }
        Ok(sum.sqrt())
    }

    /// Lines `x y u`, one per node.
    pub fn to_text(&self) -> String {
        self.mesh
            .nodes
            .iter()
            .zip(&self.values)
            .map(|(p, u)| format!("{} {} {}\n", p.x, p.y, u))
            .collect()
    }
}

/// Outcome of a Dirichlet solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub dofs: usize,
}

/// Solve `Δu = f` with `u = 0` on the boundary. The SPD system for `−Δ` is
/// solved with Jacobi-preconditioned CG.
pub fn solve_dirichlet(mesh: Arc<Mesh>, f: &dyn Fn(Vec2) -> f64, w: Option<&WeightFunction>) -> Result<(FemSolution, SolveReport)> {
    let ops = assemble_poisson(&mesh, None)?;
    solve_with(mesh, &ops.stiffness, f, w)
}

/// Solve with a pre-assembled stiffness matrix.
pub fn solve_with(
    mesh: Arc<Mesh>,
    stiffness: &CsrMatrix,
    f: &dyn Fn(Vec2) -> f64,
    w: Option<&WeightFunction>,
) -> Result<(FemSolution, SolveReport)> {
    let free = free_nodes(&mesh);
    let load = load_vector(&mesh, f, w)?;
    let rhs: Vec<f64> = free.iter().map(|&i| -load[i]).collect();
    let kff = stiffness.restrict(&free);
    let mut x = vec![0.0; free.len()];
    let rep = pcg(&kff, &rhs, &mut x, CG_TOLERANCE, default_max_iterations(free.len()))?;
    let mut values = vec![0.0; mesh.nodes.len()];
    for (k, &i) in free.iter().enumerate() {
        values[i] = x[k];
    }
    let report = SolveReport { iterations: rep.iterations, relative_residual: rep.relative_residual, dofs: free.len() };
    Ok((FemSolution::from_values(mesh, values), report))
}

/// Smallest eigenpair of `K u = λ M_w u` on the free nodes.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda: f64,
    pub iterations: usize,
    /// Eigenvector over all nodes, zero on the boundary, `M_w`-normalized.
    pub vector: Vec<f64>,
}

impl EigenResult {
    /// Poincaré constant estimate `λ^{-1/2}`.
    pub fn poincare_constant(&self) -> f64 {
        self.lambda.powf(-0.5)
    }
}

/// Inverse power iteration with CG inner solves; stops when consecutive
/// Rayleigh quotients agree to `rel_tol`.
pub fn weighted_eigen_min(mesh: &Mesh, w: &WeightFunction, rel_tol: f64) -> Result<EigenResult> {
    let ops = assemble_poisson(mesh, Some(w))?;
    let mw = ops.weighted_mass.expect("weight supplied");
    eigen_min_with(mesh, &ops.stiffness, &mw, rel_tol)
}

pub fn eigen_min_with(mesh: &Mesh, stiffness: &CsrMatrix, weighted_mass: &CsrMatrix, rel_tol: f64) -> Result<EigenResult> {
    const MAX_STEPS: usize = 2000;
    let free = free_nodes(mesh);
    if free.is_empty() {
        return Err(FemError::NoUnknowns);
    }
    let k = stiffness.restrict(&free);
    let m = weighted_mass.restrict(&free);
    let cap = default_max_iterations(free.len()).max(4 * free.len().min(4000));
    let mut x = vec![1.0; free.len()];
    let nrm = m.bilinear(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= nrm);
    let mut y = vec![0.0; free.len()];
    let mut lambda_old = f64::INFINITY;
    for it in 1..=MAX_STEPS {
        let rhs = m.mul_vec(&x);
        // Warm start from the previous iterate scaled by the current estimate.
        if lambda_old.is_finite() {
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi = xi / lambda_old;
            }
        }
        pcg(&k, &rhs, &mut y, CG_TOLERANCE, cap)?;
        let ky = k.mul_vec(&y);
        let my = m.mul_vec(&y);
        let lambda = dot(&y, &ky) / dot(&y, &my);
        let nrm = dot(&y, &my).sqrt();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / nrm;
        }
        if (lambda - lambda_old).abs() <= rel_tol * lambda {
            let mut vector = vec![0.0; mesh.nodes.len()];
            for (j, &i) in free.iter().enumerate() {
                vector[i] = x[j];
            }
            return Ok(EigenResult { lambda, iterations: it, vector });
        }
        lambda_old = lambda;
    }
    Err(FemError::IterationStalled(MAX_STEPS))
}

/// Uniform bucket grid over element bounding boxes.
#[derive(Debug, Clone)]
pub struct Locator {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    pub fn new(mesh: &Mesh) -> Self {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for p in &mesh.nodes {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let ne = mesh.triangles.len().max(1);
        let extent = (hi - lo).max().max(1e-300);
        let cells_per_side = ((ne as f64).sqrt().ceil() as usize).clamp(1, 2048);
        let cell = extent / cells_per_side as f64 * 1.000001;
        let nx = (((hi.x - lo.x) / cell).floor() as usize + 1).max(1);
        let ny = (((hi.y - lo.y) / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.triangles.len() {
            let mut blo = Vec2::repeat(f64::INFINITY);
            let mut bhi = Vec2::repeat(f64::NEG_INFINITY);
            for v in mesh.element_nodes(t) {
                blo = blo.inf(&mesh.nodes[v]);
                bhi = bhi.sup(&mesh.nodes[v]);
            }
            let pad = 0.1 * (bhi - blo).max();
            let (i0, j0) = Self::cell_of(lo, cell, nx, ny, blo - Vec2::repeat(pad));
            let (i1, j1) = Self::cell_of(lo, cell, nx, ny, bhi + Vec2::repeat(pad));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self { origin: lo, cell, nx, ny, buckets }
    }

    fn cell_of(origin: Vec2, cell: f64, nx: usize, ny: usize, x: Vec2) -> (usize, usize) {
        let i = ((x.x - origin.x) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let j = ((x.y - origin.y) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (i, j)
    }

    /// Element and reference coordinates of `x`, allowing barycentric
    /// coordinates down to `-tolerance`. The least-violating candidate wins.
    pub fn locate(&self, mesh: &Mesh, x: Vec2, tolerance: f64) -> Option<(usize, f64, f64)> {
        let (i, j) = Self::cell_of(self.origin, self.cell, self.nx, self.ny, x);
        let mut best: Option<(f64, usize, f64, f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let Some((xi, eta)) = inverse_map(mesh, t, x) else { continue };
            let violation = (-xi).max(-eta).max(xi + eta - 1.0);
            if violation <= tolerance && best.is_none_or(|b| violation < b.0) {
                best = Some((violation, t, xi, eta));
                if violation <= 0.0 {
                    break;
                }
            }
        }
        best.map(|(_, t, xi, eta)| (t, xi, eta))
    }
}

/// Reference coordinates of `x` in element `t`, by Newton iteration on the
/// isoparametric map started from the affine guess.
pub fn inverse_map(mesh: &Mesh, t: usize, x: Vec2) -> Option<(f64, f64)> {
    let [a, b, c] = mesh.corners(t);
    let affine = Matrix2::new(b.x - a.x, c.x - a.x, b.y - a.y, c.y - a.y);
    let inv = affine.try_inverse()?;
    let guess = inv * (x - a);
    let (mut xi, mut eta) = (guess.x, guess.y);
    if mesh.order == 1 || is_straight(mesh, t) {
        return Some((xi, eta));
    }
    let nodes = mesh.element_nodes(t);
    for _ in 0..30 {
        let (values, grads, _) = shape_functions(2, xi, eta);
        let mut fx = -x;
        let mut jac = Matrix2::zeros();
        for (k, &v) in nodes.iter().enumerate() {
            let p = mesh.nodes[v];
            fx += p * values[k];
            for r in 0..2 {
                jac[(r, 0)] += p[r] * grads[k][0];
                jac[(r, 1)] += p[r] * grads[k][1];
            }
        }
        let step = jac.try_inverse()? * fx;
        xi -= step.x;
        eta -= step.y;
        if step.norm() < 1e-14 {
            break;
        }
    }
    Some((xi, eta))
}

fn is_straight(mesh: &Mesh, t: usize) -> bool {
    let tri = mesh.triangles[t];
    let mids = mesh.midnodes[t];
    (0..3).all(|k| {
        let m = (mesh.nodes[tri[k]] + mesh.nodes[tri[(k + 1) % 3]]) * 0.5;
        let scale = (mesh.nodes[tri[k]] - mesh.nodes[tri[(k + 1) % 3]]).norm();
        (mesh.nodes[mids[k]] - m).norm() <= 1e-14 * scale
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{construct_rounded_domain, select_default_params, Polygon};
    use crate::mesh::{mesh_domain, unit_square, BoundaryEdge, NodeKind, SizingField};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sine(x: Vec2) -> f64 {
        (PI * x.x).sin() * (PI * x.y).sin()
    }

    fn sine_source(x: Vec2) -> f64 {
        -2.0 * PI * PI * sine(x)
    }

    fn reference_triangle() -> Mesh {
        Mesh {
            nodes: vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            kinds: vec![NodeKind::Interior; 3],
            triangles: vec![[0, 1, 2]],
            boundary_edges: Vec::<BoundaryEdge>::new(),
            order: 1,
            midnodes: Vec::new(),
        }
    }

    #[test]
    fn reference_stiffness() {
        let ops = assemble_poisson(&reference_triangle(), None).unwrap();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(ops.stiffness.get(i, j), expect[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn operator_invariants() {
        let sq = Polygon::preset("lshape").unwrap();
        let d = construct_rounded_domain(&sq, &select_default_params(&sq).unwrap()).unwrap();
        let w = WeightFunction::for_domain(&d);
        let mesh = mesh_domain(&d, &SizingField::conformal(w.clone(), 0.5, 1e-3, 0.15).unwrap()).unwrap();
        for m in [mesh.clone(), mesh.elevate()] {
            let ops = assemble_poisson(&m, Some(&w)).unwrap();
            assert!(ops.stiffness.asymmetry() < 1e-13);
            let ones = vec![1.0; m.nodes.len()];
            for v in ops.stiffness.mul_vec(&ones) {
                assert!(v.abs() < 1e-11);
            }
            if m.order == 1 {
                assert_relative_eq!(ops.mass.total(), m.area(), max_relative = 1e-10);
            }
        }
        let unit = unit_square(6).elevate();
        let ops = assemble_poisson(&unit, None).unwrap();
        assert_relative_eq!(ops.mass.total(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_source_gives_zero() {
        let mesh = Arc::new(unit_square(8));
        let (u, _) = solve_dirichlet(mesh, &|_| 0.0, None).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linearity_and_energy() {
        let mesh = Arc::new(unit_square(12).elevate());
        let f1 = |x: Vec2| sine_source(x);
        let f2 = |x: Vec2| (x.x - 0.3).exp() * x.y;
        let (u1, _) = solve_dirichlet(mesh.clone(), &f1, None).unwrap();
        let (u2, _) = solve_dirichlet(mesh.clone(), &f2, None).unwrap();
        let (u3, rep) = solve_dirichlet(mesh.clone(), &|x| f1(x) + 2.0 * f2(x), None).unwrap();
        assert!(rep.relative_residual <= CG_TOLERANCE);
        let scale = u3.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..mesh.nodes.len() {
            assert!((u3.values[i] - u1.values[i] - 2.0 * u2.values[i]).abs() < 1e-8 * scale);
        }
        let ops = assemble_poisson(&mesh, None).unwrap();
        let energy = ops.stiffness.bilinear(&u1.values, &u1.values);
        let load = load_vector(&mesh, &f1, None).unwrap();
        let work = -dot(&load, &u1.values);
        assert_relative_eq!(energy, work, max_relative = 1e-8);
    }

    #[test]
    fn manufactured_convergence_p1() {
        let mut errors = Vec::new();
        for m in [8, 16, 32] {
            let (u, _) = solve_dirichlet(Arc::new(unit_square(m)), &sine_source, None).unwrap();
            errors.push(u.l2_error(&sine).unwrap());
        }
        for k in 0..2 {
            let rate = (errors[k] / errors[k + 1]).log2();
            assert!((rate - 2.0).abs() < 0.2, "{rate}");
        }
    }

    #[test]
    fn maximum_principle() {
        let sq = Polygon::preset("square").unwrap();
        let d = construct_rounded_domain(&sq, &select_default_params(&sq).unwrap()).unwrap();
        let mesh = Arc::new(mesh_domain(&d, &SizingField::uniform(0.08).unwrap()).unwrap());
        let (u, _) = solve_dirichlet(mesh, &|x| -1.0 - x.x * x.x, None).unwrap();
        assert!(u.values.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn reproduction() {
        let mesh = Arc::new(unit_square(5));
        let u = FemSolution::interpolate(mesh, &|x| x.x);
        for &(x, y) in &[(0.13, 0.77), (0.5, 0.5), (0.99, 0.01)] {
            assert_relative_eq!(u.value(Vec2::new(x, y)).unwrap(), x, epsilon = 1e-14);
            let h = u.hessian(Vec2::new(x, y)).unwrap();
            assert_eq!(h, [0.0; 3]);
        }
        let p2 = Arc::new(unit_square(5).elevate());
        let q = FemSolution::interpolate(p2, &|x| x.x * x.x);
        let h = q.hessian(Vec2::new(0.31, 0.62)).unwrap();
        assert_relative_eq!(h[0], 2.0, epsilon = 1e-11);
        assert!(h[1].abs() < 1e-11 && h[2].abs() < 1e-11);
        assert!(q.value(Vec2::new(1.5, 0.5)).is_err());
    }

    #[test]
    fn curved_elements_reproduce_linears() {
        let sq = Polygon::preset("star5").unwrap();
        let d = construct_rounded_domain(&sq, &select_default_params(&sq).unwrap()).unwrap();
        let mesh = Arc::new(mesh_domain(&d, &SizingField::uniform(0.1).unwrap()).unwrap().elevate());
        let lin = FemSolution::interpolate(mesh.clone(), &|x| 2.0 * x.x - x.y);
        let quad = FemSolution::interpolate(mesh.clone(), &|x| x.x * x.x - 3.0 * x.x * x.y + x.y);
        let mut curved = 0;
        for t in 0..mesh.triangles.len() {
            if !is_straight(&mesh, t) {
                curved += 1;
            }
            for p in element_quadrature(&mesh, t, triangle_degree4()).unwrap() {
                let v = lin.at_basis(t, &p);
                assert!((v.gradient - Vec2::new(2.0, -1.0)).norm() < 1e-10);
                assert!(v.hessian.iter().all(|h| h.abs() < 1e-8));
                let q = quad.at_basis(t, &p);
                let h = 1e-5;
                let grad_at = |x: Vec2| {
                    let (xi, eta) = inverse_map(&mesh, t, x).unwrap();
                    quad.at_basis(t, &basis_at(&mesh, t, xi, eta).unwrap()).gradient
                };
                let dx = (grad_at(p.x + Vec2::new(h, 0.0)) - grad_at(p.x - Vec2::new(h, 0.0))) / (2.0 * h);
                let dy = (grad_at(p.x + Vec2::new(0.0, h)) - grad_at(p.x - Vec2::new(0.0, h))) / (2.0 * h);
                let scale = 1.0 + q.hessian.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!((dx.x - q.hessian[0]).abs() < 1e-5 * scale);
                assert!((dx.y - q.hessian[1]).abs() < 1e-5 * scale);
                assert!((dy.y - q.hessian[2]).abs() < 1e-5 * scale);
            }
        }
        assert!(curved > 0);
    }

    #[test]
    fn gradient_of_sine_solution() {
        let mut worst = Vec::new();
        for m in [8, 16] {
            let (u, _) = solve_dirichlet(Arc::new(unit_square(m)), &sine_source, None).unwrap();
            let mut e: f64 = 0.0;
            for k in 1..20 {
                let x = Vec2::new(k as f64 / 20.0 + 0.001, 0.37 + 0.02 * (k % 5) as f64);
                let g = u.gradient(x).unwrap();
                let exact = Vec2::new(PI * (PI * x.x).cos() * (PI * x.y).sin(), PI * (PI * x.x).sin() * (PI * x.y).cos());
                e = e.max((g - exact).norm());
            }
            worst.push(e);
        }
        assert!(worst[1] < 0.7 * worst[0]);
    }

    #[test]
    fn classical_eigenvalue_and_scaling() {
        let mesh = unit_square(12).elevate();
        let one = weighted_eigen_min(&mesh, &WeightFunction::constant(1.0), 1e-9).unwrap();
        assert_relative_eq!(one.lambda, 2.0 * PI * PI, max_relative = 1e-3);
        let c = 0.3;
        let scaled = weighted_eigen_min(&mesh, &WeightFunction::constant(c), 1e-9).unwrap();
        assert_relative_eq!(scaled.lambda, one.lambda * c * c, max_relative = 1e-7);
    }
}
