//! Weighted (Babuška–Kondratiev) and plain Sobolev norms of finite element
//! fields, the shift bound for multiplication by `r^b`, and a Gagliardo
//! seminorm of gradient fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::cross;
use crate::fem::{basis_at, element_quadrature, element_rule, inverse_map, FemError, FemSolution};
use crate::mesh::Mesh;
use crate::quadrature::{gl16, triangle_degree4, triangle_degree6, TriangleRule};
use crate::weights::{admissibility_scan, WeightError, WeightFunction};
use crate::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("order {m} derivatives are not available from a P{order} field")]
    OrderUnavailable { m: usize, order: u8 },
    #[error("norm order {0} is not supported (0, 1 or 2)")]
    InvalidOrder(usize),
    #[error("{0} elements exceed the pairwise limit of {1}")]
    TooManyElements(usize, usize),
    #[error("fractional order {0} outside (0.05, 0.95)")]
    InvalidFraction(f64),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

pub type Result<T> = std::result::Result<T, NormError>;

/// Element count above which the pairwise seminorm refuses to run.
pub const GAGLIARDO_MAX_ELEMENTS: usize = 2000;

/// Field data at one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: Vec2,
    pub weight: f64,
    pub value: f64,
    pub gradient: Vec2,
    /// `(u_xx, u_xy, u_yy)`.
    pub hessian: [f64; 3],
}

/// A field sampled at the quadrature points of a mesh.
#[derive(Debug, Clone)]
pub struct SampledField {
    /// Highest derivative order the samples carry faithfully.
    pub order: usize,
    pub samples: Vec<FieldSample>,
}

impl SampledField {
    /// Samples of a finite element field; rules are refined near punctures of `w`.
    pub fn from_fem(u: &FemSolution, w: Option<&WeightFunction>) -> Result<Self> {
        let mesh = &u.mesh;
        let mut samples = Vec::new();
        for t in 0..mesh.triangles.len() {
            for p in element_quadrature(mesh, t, element_rule(mesh, t, w))? {
                let v = u.at_basis(t, &p);
                samples.push(FieldSample { x: p.x, weight: p.weight, value: v.value, gradient: v.gradient, hessian: v.hessian });
            }
        }
        Ok(Self { order: mesh.order as usize, samples })
    }

    /// Samples of a closed-form field `x -> (u, grad u, hess u)` on the quadrature of `mesh`.
    pub fn from_fn(mesh: &Mesh, w: Option<&WeightFunction>, f: &dyn Fn(Vec2) -> (f64, Vec2, [f64; 3])) -> Result<Self> {
        let mut samples = Vec::new();
        for t in 0..mesh.triangles.len() {
            for p in element_quadrature(mesh, t, element_rule(mesh, t, w))? {
                let (value, gradient, hessian) = f(p.x);
                samples.push(FieldSample { x: p.x, weight: p.weight, value, gradient, hessian });
            }
        }
        Ok(Self { order: 2, samples })
    }

    fn require(&self, m: usize) -> Result<()> {
        if m > 2 {
            return Err(NormError::InvalidOrder(m));
        }
        if m > self.order {
            return Err(NormError::OrderUnavailable { m, order: self.order as u8 });
        }
        Ok(())
    }

    /// `r^b u` with derivatives by the Leibniz rule.
    pub fn shifted(&self, w: &WeightFunction, b: f64) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let rb = w.jet(s.x, 2)?.powf(b);
                let (p, px, py) = (rb.partial(0, 0), rb.partial(1, 0), rb.partial(0, 1));
                let (pxx, pxy, pyy) = (rb.partial(2, 0), rb.partial(1, 1), rb.partial(0, 2));
                let (u, g, h) = (s.value, s.gradient, s.hessian);
                Ok(FieldSample {
                    x: s.x,
                    weight: s.weight,
                    value: p * u,
                    gradient: Vec2::new(px * u + p * g.x, py * u + p * g.y),
                    hessian: [
                        pxx * u + 2.0 * px * g.x + p * h[0],
                        pxy * u + px * g.y + py * g.x + p * h[1],
                        pyy * u + 2.0 * py * g.y + p * h[2],
                    ],
                })
            })
            .collect::<std::result::Result<Vec<_>, WeightError>>()?;
        Ok(Self { order: self.order, samples })
    }
}

/// Squared derivative magnitudes by order: `|u|²`, `|∇u|²`, and the sum of
/// squares over the multi-indices `(2,0)`, `(1,1)`, `(0,2)`.
#[inline]
fn order_terms(s: &FieldSample) -> [f64; 3] {
    let h = s.hessian;
    [s.value * s.value, s.gradient.norm_squared(), h[0] * h[0] + h[1] * h[1] + h[2] * h[2]]
}

/// `(Σ_{|α|≤m} ∫ r^{2(|α|−a)} |∂^α u|²)^{1/2}`.
pub fn kondratiev_norm(field: &SampledField, w: &WeightFunction, m: usize, a: f64) -> Result<f64> {
    field.require(m)?;
    let sum: f64 = field
        .samples
        .iter()
        .map(|s| {
            let r = w.value(s.x);
            let terms = order_terms(s);
            s.weight * (0..=m).map(|k| r.powf(2.0 * (k as f64 - a)) * terms[k]).sum::<f64>()
        })
        .sum();
    Ok(sum.sqrt())
}

/// `(Σ_{|α|≤m} ∫ |∂^α u|²)^{1/2}`.
pub fn sobolev_norm(field: &SampledField, m: usize) -> Result<f64> {
    field.require(m)?;
    let sum: f64 = field
        .samples
        .iter()
        .map(|s| {
            let terms = order_terms(s);
            s.weight * terms[..=m].iter().sum::<f64>()
        })
        .sum();
    Ok(sum.sqrt())
}

/// `‖u‖²_{L²(ĝ)} + ‖du‖²_{L²(ĝ)}` with volume `r^{-2} dx` and `|du|²_ĝ = r²|∇u|²`.
pub fn conformal_h1_squared(field: &SampledField, w: &WeightFunction) -> Result<f64> {
    field.require(1)?;
    Ok(field
        .samples
        .iter()
        .map(|s| {
            let r = w.value(s.x);
            let volume = s.weight / (r * r);
            volume * (s.value * s.value + r * r * s.gradient.norm_squared())
        })
        .sum())
}

/// `‖u‖_{L²}` of a closed-form function over the mesh.
pub fn l2_norm_fn(mesh: &Mesh, w: Option<&WeightFunction>, f: &dyn Fn(Vec2) -> f64) -> Result<f64> {
    let mut sum = 0.0;
    for t in 0..mesh.triangles.len() {
        for p in element_quadrature(mesh, t, element_rule(mesh, t, w))? {
            let v = f(p.x);
            sum += p.weight * v * v;
        }
    }
    Ok(sum.sqrt())
}

/// Multi-indices with `|α| ≤ m`.
pub fn multi_indices(m: usize) -> Vec<(usize, usize)> {
    (0..=m).flat_map(|k| (0..=k).map(move |j| (k - j, j))).collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Upper bound `C*` with `‖r^b u‖_{K^m_{a+b}} ≤ C* ‖u‖_{K^m_a}` for every `a`:
/// `C*² = Σ_{α} Σ_{β≤α} (C(α,β) A_{α−β})²` with `A_γ` the sup over `grid` of
/// `|r^{|γ|−b} ∂^γ r^b|`.
pub fn shift_bound(w: &WeightFunction, b: f64, m: usize, grid: &[Vec2]) -> Result<f64> {
    let mut sup = std::collections::HashMap::new();
    for gamma in multi_indices(m) {
        let a = if gamma == (0, 0) { 1.0 } else { admissibility_scan(w, b, gamma, grid)? };
        sup.insert(gamma, a);
    }
    let mut total = 0.0;
    for alpha in multi_indices(m) {
        for beta in multi_indices(m) {
            if beta.0 <= alpha.0 && beta.1 <= alpha.1 {
                let c = binomial(alpha.0, beta.0) * binomial(alpha.1, beta.1);
                let a = sup[&(alpha.0 - beta.0, alpha.1 - beta.1)];
                total += (c * a).powi(2);
            }
        }
    }
    Ok(total.sqrt())
}

/// Interval `[1/C*(−b), C*(b)]` containing `‖r^b u‖_{K^m_{a+b}} / ‖u‖_{K^m_a}`.
pub fn shift_interval(w: &WeightFunction, b: f64, m: usize, grid: &[Vec2]) -> Result<(f64, f64)> {
    Ok((1.0 / shift_bound(w, -b, m, grid)?, shift_bound(w, b, m, grid)?))
}

/// Norms reported for one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub n: u32,
    pub a: f64,
    pub m: usize,
    pub h: f64,
    pub dofs: usize,
    pub l2_f: f64,
    pub k21a: f64,
    pub h1: f64,
    pub h2: f64,
    /// `‖u‖_{K²_{1+a}} / ‖f‖_{L²}`; `None` when `f` vanishes.
    pub ratio: Option<f64>,
    pub gagliardo: Option<f64>,
}

/// Fill a [`NormReport`] for the solution `u` of `Δu = f`.
pub fn ratio_report(n: u32, u: &FemSolution, f: &dyn Fn(Vec2) -> f64, w: &WeightFunction, a: f64, dofs: usize) -> Result<NormReport> {
    let field = SampledField::from_fem(u, Some(w))?;
    let l2_f = l2_norm_fn(&u.mesh, Some(w), f)?;
    let k21a = kondratiev_norm(&field, w, 2, 1.0 + a)?;
    let h1 = sobolev_norm(&field, 1)?;
    let h2 = sobolev_norm(&field, 2)?;
    let ratio = if l2_f > 0.0 { Some(k21a / l2_f) } else { None };
    Ok(NormReport { n, a, m: 2, h: u.mesh.max_edge(), dofs, l2_f, k21a, h1, h2, ratio, gagliardo: None })
}

/// Gradient of a finite element field restricted to one element.
enum ElementGradient {
    /// `g(y) = g0 + G (y − c)`, exact on straight elements.
    Affine { c: Vec2, g0: Vec2, jac: [f64; 3] },
    Curved,
}

fn element_gradients(u: &FemSolution) -> Result<Vec<ElementGradient>> {
    let mesh = &u.mesh;
    (0..mesh.triangles.len())
        .map(|t| {
            let straight = mesh.order == 1
                || (0..3).all(|k| {
                    let tri = mesh.triangles[t];
                    let (a, b) = (mesh.nodes[tri[k]], mesh.nodes[tri[(k + 1) % 3]]);
                    (mesh.nodes[mesh.midnodes[t][k]] - (a + b) * 0.5).norm() <= 1e-14 * (a - b).norm()
                });
            if !straight {
                return Ok(ElementGradient::Curved);
            }
            let p = basis_at(mesh, t, 1.0 / 3.0, 1.0 / 3.0)?;
            let v = u.at_basis(t, &p);
            Ok(ElementGradient::Affine { c: p.x, g0: v.gradient, jac: v.hessian })
        })
        .collect()
}

fn gradient_in(u: &FemSolution, grads: &[ElementGradient], t: usize, y: Vec2) -> Vec2 {
    match grads[t] {
        ElementGradient::Affine { c, g0, jac } => {
            let d = y - c;
            g0 + Vec2::new(jac[0] * d.x + jac[1] * d.y, jac[1] * d.x + jac[2] * d.y)
        }
        ElementGradient::Curved => {
            let (xi, eta) = inverse_map(&u.mesh, t, y).unwrap_or((1.0 / 3.0, 1.0 / 3.0));
            basis_at(&u.mesh, t, xi, eta).map(|p| u.at_basis(t, &p).gradient).unwrap_or_else(|_| Vec2::zeros())
        }
    }
}

/// Parameter interval of the ray `x + ρ e` inside the triangle `tri`.
fn ray_clip(x: Vec2, e: Vec2, tri: &[Vec2; 3]) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for k in 0..3 {
        let (a, b) = (tri[k], tri[(k + 1) % 3]);
        let n0 = cross(b - a, x - a);
        let c = cross(b - a, e);
        if c.abs() < 1e-300 {
            if n0 < 0.0 {
                return None;
            }
        } else if c > 0.0 {
            lo = lo.max(-n0 / c);
        } else {
            hi = hi.min(-n0 / c);
        }
    }
    (hi > lo).then_some((lo, hi))
}

/// Angular intervals covering the triangle as seen from `x`.
fn angular_intervals(x: Vec2, tri: &[Vec2; 3], contains: bool) -> Vec<(f64, f64)> {
    let mut ang: Vec<f64> = tri.iter().map(|p| (p.y - x.y).atan2(p.x - x.x)).collect();
    if contains {
        ang.sort_by(f64::total_cmp);
        return vec![(ang[0], ang[1]), (ang[1], ang[2]), (ang[2], ang[0] + std::f64::consts::TAU)];
    }
    let base = ang[0];
    for a in ang.iter_mut() {
        let mut d = *a - base;
        while d > std::f64::consts::PI {
            d -= std::f64::consts::TAU;
        }
        while d <= -std::f64::consts::PI {
            d += std::f64::consts::TAU;
        }
        *a = base + d;
    }
    ang.sort_by(f64::total_cmp);
    vec![(ang[0], ang[1]), (ang[1], ang[2])]
}

/// Gagliardo seminorm `(∫∫ |g(x) − g(y)|² / |x − y|^{2+2s})^{1/2}` of `g = ∇u`.
/// Far element pairs use tensor Gauss rules; the element itself and nearby
/// elements are integrated in polar coordinates around each outer point, with
/// a radial substitution that removes the kernel singularity.
pub fn gagliardo_seminorm(u: &FemSolution, s: f64) -> Result<f64> {
    if !(0.05..=0.95).contains(&s) {
        return Err(NormError::InvalidFraction(s));
    }
    let mesh = &u.mesh;
    let ne = mesh.triangles.len();
    if ne > GAGLIARDO_MAX_ELEMENTS {
        return Err(NormError::TooManyElements(ne, GAGLIARDO_MAX_ELEMENTS));
    }
    let grads = element_gradients(u)?;
    let inner_rule: &TriangleRule = triangle_degree4();
    let outer_rule: &TriangleRule = triangle_degree6();
    let corners: Vec<[Vec2; 3]> = (0..ne).map(|t| mesh.corners(t)).collect();
    let centroid: Vec<Vec2> = corners.iter().map(|c| (c[0] + c[1] + c[2]) / 3.0).collect();
    let diam: Vec<f64> = corners
        .iter()
        .map(|c| (c[0] - c[1]).norm().max((c[1] - c[2]).norm()).max((c[2] - c[0]).norm()))
        .collect();
    let inner: Vec<Vec<(Vec2, f64, Vec2)>> = (0..ne)
        .map(|t| {
            element_quadrature(mesh, t, inner_rule).map(|pts| pts.iter().map(|p| (p.x, p.weight, gradient_in(u, &grads, t, p.x))).collect())
        })
        .collect::<std::result::Result<_, _>>()?;
    let outer: Vec<Vec<(Vec2, f64, Vec2)>> = (0..ne)
        .map(|t| {
            element_quadrature(mesh, t, outer_rule).map(|pts| pts.iter().map(|p| (p.x, p.weight, gradient_in(u, &grads, t, p.x))).collect())
        })
        .collect::<std::result::Result<_, _>>()?;
    let gl = gl16();
    let exponent = 1.0 + s;
    let per_element: Vec<f64> = (0..ne)
        .into_par_iter()
        .map(|t| {
            let mut total = 0.0;
            for other in 0..ne {
                let near = (centroid[t] - centroid[other]).norm() < 1.5 * (diam[t] + diam[other]);
                for &(x, wx, gx) in &outer[t] {
                    if !near {
                        for &(y, wy, gy) in &inner[other] {
                            let d2 = (x - y).norm_squared();
                            total += wx * wy * (gx - gy).norm_squared() / d2.powf(exponent);
                        }
                        continue;
                    }
                    let contains = other == t;
                    let mut radial = 0.0;
                    for (th0, th1) in angular_intervals(x, &corners[other], contains) {
                        let half = 0.5 * (th1 - th0);
                        for (&node, &wt) in gl.nodes.iter().zip(&gl.weights) {
                            let th = th0 + half * (node + 1.0);
                            let e = Vec2::new(th.cos(), th.sin());
                            let Some((r0, r1)) = ray_clip(x, e, &corners[other]) else { continue };
                            let mut line = 0.0;
                            if contains {
                                // ρ = r1 t^p with p = 1/(2 − 2s): ρ^{1−2s} dρ = p r1^{2−2s} dt.
                                let p = 1.0 / (2.0 - 2.0 * s);
                                for (&tn, &tw) in gl.nodes.iter().zip(&gl.weights) {
                                    let tt = 0.5 * (tn + 1.0);
                                    let rho = r1 * tt.powf(p);
                                    if rho <= 0.0 {
                                        continue;
                                    }
                                    let dg = gx - gradient_in(u, &grads, other, x + e * rho);
                                    line += 0.5 * tw * dg.norm_squared() / (rho * rho) * p * r1.powf(2.0 - 2.0 * s);
                                }
                            } else {
                                let (l0, l1) = (r0.max(1e-300).ln(), r1.ln());
                                let hl = 0.5 * (l1 - l0);
                                for (&tn, &tw) in gl.nodes.iter().zip(&gl.weights) {
                                    let rho = (l0 + hl * (tn + 1.0)).exp();
                                    let dg = gx - gradient_in(u, &grads, other, x + e * rho);
                                    line += hl * tw * dg.norm_squared() * rho.powf(-2.0 * s);
                                }
                            }
                            radial += half * wt * line;
                        }
                    }
                    total += wx * radial;
                }
            }
            total
        })
        .collect();
    Ok(per_element.iter().sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::solve_dirichlet;
    use crate::mesh::{mesh_domain, unit_square, SizingField};
    use crate::weights::{admissibility_grid, EtaProfile};
    use crate::curve::CircleCurve;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn constant_field(mesh: &Mesh, c: f64) -> SampledField {
        SampledField::from_fn(mesh, None, &|_| (c, Vec2::zeros(), [0.0; 3])).unwrap()
    }

    #[test]
    fn constant_examples() {
        let mesh = unit_square(4);
        let w = WeightFunction::constant(1.0 / 6.0);
        let one = constant_field(&mesh, 1.0);
        assert_relative_eq!(kondratiev_norm(&one, &w, 0, 0.0).unwrap(), 1.0, epsilon = 1e-13);
        assert_relative_eq!(kondratiev_norm(&one, &w, 1, 1.0).unwrap(), 6.0, epsilon = 1e-12);
        assert_relative_eq!(sobolev_norm(&one, 0).unwrap(), 1.0, epsilon = 1e-13);
        let s = SampledField::from_fn(&mesh, None, &|x| ((PI * x.x).sin() * (PI * x.y).sin(), Vec2::zeros(), [0.0; 3])).unwrap();
        assert_relative_eq!(sobolev_norm(&s, 0).unwrap(), 0.5, max_relative = 2e-3);
    }

    #[test]
    fn p1_has_no_second_order() {
        let u = FemSolution::interpolate(Arc::new(unit_square(3)), &|x| x.x);
        let field = SampledField::from_fem(&u, None).unwrap();
        assert!(matches!(kondratiev_norm(&field, &WeightFunction::constant(1.0), 2, 0.0), Err(NormError::OrderUnavailable { .. })));
        assert!(sobolev_norm(&field, 1).is_ok());
    }

    fn random_p2_field(mesh: &Arc<Mesh>, rng: &mut ChaCha8Rng) -> FemSolution {
        let values = (0..mesh.nodes.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FemSolution::from_values(mesh.clone(), values)
    }

    fn punctured_disk() -> (Arc<Mesh>, WeightFunction) {
        let eta = EtaProfile::new(1.0);
        let w = WeightFunction::new(eta, vec![Vec2::new(0.0, -0.12)]);
        let circle = CircleCurve::new(Vec2::new(0.0, 0.0), 0.1);
        let mesh = mesh_domain(&circle, &SizingField::conformal(w.clone(), 0.5, 1e-3, 0.03).unwrap()).unwrap();
        (Arc::new(mesh.elevate()), w)
    }

    #[test]
    fn contraction_holds_for_random_fields() {
        let (mesh, w) = punctured_disk();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let f = SampledField::from_fem(&random_p2_field(&mesh, &mut rng), Some(&w)).unwrap();
            assert!(sobolev_norm(&f, 1).unwrap() <= kondratiev_norm(&f, &w, 1, 1.0).unwrap());
            assert!(sobolev_norm(&f, 2).unwrap() <= kondratiev_norm(&f, &w, 2, 2.0).unwrap());
        }
    }

    #[test]
    fn conformal_identity() {
        let (mesh, w) = punctured_disk();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = SampledField::from_fem(&random_p2_field(&mesh, &mut rng), Some(&w)).unwrap();
        let k = kondratiev_norm(&f, &w, 1, 1.0).unwrap().powi(2);
        assert_relative_eq!(k, conformal_h1_squared(&f, &w).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn shift_ratios_inside_interval() {
        let (mesh, w) = punctured_disk();
        let grid = admissibility_grid(&w, 24, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for b in [0.25, -0.25, 0.5, -0.5] {
            let (lo, hi) = shift_interval(&w, b, 2, &grid).unwrap();
            assert!(lo <= 1.0 && 1.0 <= hi);
            for _ in 0..5 {
                let f = SampledField::from_fem(&random_p2_field(&mesh, &mut rng), Some(&w)).unwrap();
                let a = 0.3;
                let ratio = kondratiev_norm(&f.shifted(&w, b).unwrap(), &w, 2, a + b).unwrap() / kondratiev_norm(&f, &w, 2, a).unwrap();
                assert!(lo <= ratio && ratio <= hi, "{b}: {lo} {ratio} {hi}");
            }
        }
    }

    #[test]
    fn ratio_report_examples() {
        let mesh = Arc::new(unit_square(8).elevate());
        let w = WeightFunction::constant(1.0 / 6.0);
        let f = |x: Vec2| -2.0 * PI * PI * (PI * x.x).sin() * (PI * x.y).sin();
        let (u, rep) = solve_dirichlet(mesh.clone(), &f, None).unwrap();
        let r1 = ratio_report(1, &u, &f, &w, 0.0, rep.dofs).unwrap();
        let (u10, _) = solve_dirichlet(mesh.clone(), &|x| 10.0 * f(x), None).unwrap();
        let r10 = ratio_report(1, &u10, &|x| 10.0 * f(x), &w, 0.0, rep.dofs).unwrap();
        assert_relative_eq!(r1.ratio.unwrap(), r10.ratio.unwrap(), max_relative = 1e-9);
        let fine = Arc::new(unit_square(16).elevate());
        let (uf, repf) = solve_dirichlet(fine, &f, None).unwrap();
        let rf = ratio_report(1, &uf, &f, &w, 0.0, repf.dofs).unwrap();
        assert_relative_eq!(r1.ratio.unwrap(), rf.ratio.unwrap(), max_relative = 0.02);
        let (z, _) = solve_dirichlet(mesh, &|_| 0.0, None).unwrap();
        assert_eq!(ratio_report(1, &z, &|_| 0.0, &w, 0.0, rep.dofs).unwrap().ratio, None);
    }

    #[test]
    fn gagliardo_trivial_fields() {
        let mesh = Arc::new(unit_square(4).elevate());
        let c = FemSolution::interpolate(mesh.clone(), &|x| 3.0 * x.x - x.y + 1.0);
        assert!(gagliardo_seminorm(&c, 0.5).unwrap() < 1e-12);
        assert!(gagliardo_seminorm(&c, 0.01).is_err());
    }

    #[test]
    fn gagliardo_matches_monte_carlo() {
        let s = 0.5;
        let mesh = Arc::new(unit_square(8).elevate());
        let u = FemSolution::interpolate(mesh, &|x| x.x * x.x);
        let value = gagliardo_seminorm(&u, s).unwrap().powi(2);
        // Importance sampling: x uniform, θ uniform, ρ with density ∝ ρ^{1−2s} on [0, √2].
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let rmax = 2f64.sqrt();
        let norm = rmax.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
        let count = 10_000_000;
        let mut sum = 0.0;
        for _ in 0..count {
            let x = Vec2::new(rng.gen::<f64>(), rng.gen::<f64>());
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            let rho = (rng.gen::<f64>() * norm * (2.0 - 2.0 * s)).powf(1.0 / (2.0 - 2.0 * s));
            let y = x + Vec2::new(th.cos(), th.sin()) * rho;
            if (0.0..=1.0).contains(&y.x) && (0.0..=1.0).contains(&y.y) {
                sum += 4.0 * th.cos().powi(2);
            }
        }
        let mc = sum / count as f64 * std::f64::consts::TAU * norm;
        assert_relative_eq!(value, mc, max_relative = 0.02);
    }
}
