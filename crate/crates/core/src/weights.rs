//! The cutoff profile `eta`, the weight `r = eta(dist(x, V))` and the
//! conformal metric `g_hat = r^-2 dx^2`.
//!
//! `eta(t) = t` for `t <= 7R/48`, `eta(t) = R/6` for `t >= 3R/16`, and in
//! between `eta' = 1 - S((t - t0)/w)` with `t0 = 7R/48`, `w = R/24`. Since the
//! smoothstep is antisymmetric about `1/2` the window adds exactly `w/2`, so
//! `eta(3R/16) = R/6` holds without fitting.

use std::io::Write;

use thiserror::Error;

use crate::bump::{smoothstep, smoothstep_taylor};
use crate::curve::ClosedCurve;
use crate::jet::{Jet2, Taylor};
use crate::quadrature::{adaptive_gauss, gl16};
use crate::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("negative argument {0}")]
    NegativeT(f64),
    #[error("argument must be positive, got {0}")]
    NonPositiveT(f64),
    #[error("evaluation point coincides with a puncture")]
    AtPuncture,
    #[error("derivative order {0} exceeds the supported maximum")]
    OrderTooHigh(usize),
}

pub type Result<T> = std::result::Result<T, WeightError>;

/// Highest derivative order supported by the jet evaluators.
pub const MAX_ORDER: usize = 8;

/// Smooth cutoff `eta` on `[0, inf)` for separation radius `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaProfile {
    radius: f64,
}

impl EtaProfile {
    pub fn new(radius: f64) -> Self {
        assert!(radius > 0.0 && radius.is_finite(), "separation radius must be positive");
        Self { radius }
    }

    /// Separation radius `R`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Start of the transition window, `7R/48`.
    pub fn window_start(&self) -> f64 {
        7.0 * self.radius / 48.0
    }

    /// Width of the transition window, `R/24`.
    pub fn window_width(&self) -> f64 {
        self.radius / 24.0
    }

    /// `R/8`: `eta` is the identity below this.
    pub fn exact_radius(&self) -> f64 {
        self.radius / 8.0
    }

    /// `R/5`: `eta` is constant above this.
    pub fn support_radius(&self) -> f64 {
        self.radius / 5.0
    }

    /// Plateau value `R/6`.
    pub fn plateau(&self) -> f64 {
        self.radius / 6.0
    }

    fn window_coordinate(&self, t: f64) -> f64 {
        (t - self.window_start()) / self.window_width()
    }

    /// `eta(t)` for `t >= 0`.
    pub fn value(&self, t: f64) -> f64 {
        let x = self.window_coordinate(t);
        if x <= 0.0 {
            return t;
        }
        if x >= 1.0 {
            return self.plateau();
        }
        // int_0^x (1 - S) = 1/2 - int_0^{1-x} S by the symmetry of S
        let integral = if x <= 0.5 {
            x - panel_integral(x)
        } else {
            0.5 - panel_integral(1.0 - x)
        };
        self.window_start() + self.window_width() * integral
    }

    /// `eta'(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        1.0 - smoothstep(self.window_coordinate(t))
    }

    /// Normalized Taylor coefficients of `eta` at `t` up to `order`.
    pub fn taylor(&self, t: f64, order: usize) -> Taylor {
        let x = self.window_coordinate(t);
        if x <= 0.0 {
            return Taylor::variable(t, order);
        }
        if x >= 1.0 {
            return Taylor::constant(self.plateau(), order);
        }
        let w = self.window_width();
        let s = smoothstep_taylor(x, order.saturating_sub(1));
        let mut c = vec![0.0; order + 1];
        c[0] = self.value(t);
        if order >= 1 {
            c[1] = 1.0 - s.c[0];
        }
        for k in 2..=order {
            c[k] = -s.c[k - 1] / (k as f64 * w.powi(k as i32 - 1));
        }
        Taylor { c }
    }

    /// `k`-th derivative of `eta` at `t`.
    pub fn eval(&self, t: f64, k: usize) -> Result<f64> {
        if t < 0.0 {
            return Err(WeightError::NegativeT(t));
        }
        if k > MAX_ORDER {
            return Err(WeightError::OrderTooHigh(k));
        }
        Ok(match k {
            0 => self.value(t),
            1 => self.derivative(t),
            _ => self.taylor(t, k).derivative(k),
        })
    }

    /// `A(t) = t eta'(t) / eta(t)`.
    pub fn log_derivative(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(WeightError::NonPositiveT(t));
        }
        Ok(t * self.derivative(t) / self.value(t))
    }
}

/// `int_0^x S` for `x` in `[0, 1/2]`.
fn panel_integral(x: f64) -> f64 {
    let rule = gl16();
    let panels = 8;
    let h = x / panels as f64;
    (0..panels)
        .map(|k| {
            let a = k as f64 * h;
            rule.integrate(a, a + h, smoothstep)
        })
        .sum()
}

/// `k`-th derivative of `eta` at `t`.
pub fn eta_eval(profile: &EtaProfile, t: f64, k: usize) -> Result<f64> {
    profile.eval(t, k)
}

/// `A(t) = t eta'(t) / eta(t)`.
pub fn log_derivative_a(profile: &EtaProfile, t: f64) -> Result<f64> {
    profile.log_derivative(t)
}

/// `r(x) = eta(dist(x, V))`. With no punctures `r` is the plateau `R/6`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    eta: EtaProfile,
    punctures: Vec<Vec2>,
}

impl WeightFunction {
    pub fn new(eta: EtaProfile, punctures: Vec<Vec2>) -> Self {
        Self { eta, punctures }
    }

    /// Weight of a rounded domain: separation radius of the parent polygon and
    /// the domain's puncture set.
    pub fn for_domain(domain: &crate::geometry::RoundedDomain) -> Self {
        Self::new(EtaProfile::new(domain.polygon().separation_radius()), domain.punctures().to_vec())
    }

    /// `r` identically equal to `c`.
    pub fn constant(c: f64) -> Self {
        Self::new(EtaProfile::new(6.0 * c), Vec::new())
    }

    pub fn eta(&self) -> &EtaProfile {
        &self.eta
    }

    pub fn punctures(&self) -> &[Vec2] {
        &self.punctures
    }

    /// Nearest puncture and its distance, if any puncture exists.
    pub fn nearest(&self, x: Vec2) -> Option<(usize, f64)> {
        self.punctures
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (x - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Distance to the puncture set (infinite when there is none).
    pub fn distance(&self, x: Vec2) -> f64 {
        self.nearest(x).map_or(f64::INFINITY, |(_, d)| d)
    }

    pub fn value(&self, x: Vec2) -> f64 {
        match self.nearest(x) {
            Some((_, d)) => self.eta.value(d),
            None => self.eta.plateau(),
        }
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        match self.nearest(x) {
            Some((i, d)) if d > 0.0 && d < self.eta.support_radius() => {
                (x - self.punctures[i]) * (self.eta.derivative(d) / d)
            }
            _ => Vec2::zeros(),
        }
    }

    pub fn value_and_gradient(&self, x: Vec2) -> (f64, Vec2) {
        match self.nearest(x) {
            Some((i, d)) => {
                let grad = if d > 0.0 && d < self.eta.support_radius() {
                    (x - self.punctures[i]) * (self.eta.derivative(d) / d)
                } else {
                    Vec2::zeros()
                };
                (self.eta.value(d), grad)
            }
            None => (self.eta.plateau(), Vec2::zeros()),
        }
    }

    /// Bivariate Taylor jet of `r` at `x` up to total degree `order`.
    pub fn jet(&self, x: Vec2, order: usize) -> Result<Jet2> {
        if order > MAX_ORDER {
            return Err(WeightError::OrderTooHigh(order));
        }
        let Some((i, d)) = self.nearest(x) else {
            return Ok(Jet2::constant(self.eta.plateau(), order));
        };
        if d == 0.0 {
            return Err(WeightError::AtPuncture);
        }
        if d >= self.eta.support_radius() {
            return Ok(Jet2::constant(self.eta.plateau(), order));
        }
        let offset = x - self.punctures[i];
        Ok(radial_jet(&self.eta, offset, order))
    }

    /// `d^{i+j} r / dx^i dy^j` at `x`.
    pub fn derivative(&self, x: Vec2, alpha: (usize, usize)) -> Result<f64> {
        Ok(self.jet(x, alpha.0 + alpha.1)?.partial(alpha.0, alpha.1))
    }
}

/// Jet of `eta(|offset|)` in the offset coordinates.
fn radial_jet(eta: &EtaProfile, offset: Vec2, order: usize) -> Jet2 {
    let (dx, dy) = Jet2::coordinates(offset.x, offset.y, order);
    let dist = (&(&dx * &dx) + &(&dy * &dy)).sqrt();
    dist.compose(&eta.taylor(dist.value(), order).c)
}

/// `d^alpha r` at `x`.
pub fn weight_eval(w: &WeightFunction, x: Vec2, alpha: (usize, usize)) -> Result<f64> {
    w.derivative(x, alpha)
}

/// `|r^{|alpha| - b} d^alpha (r^b)|` at `x`.
pub fn admissibility_value(w: &WeightFunction, x: Vec2, b: f64, alpha: (usize, usize)) -> Result<f64> {
    let order = alpha.0 + alpha.1;
    let r = w.jet(x, order)?;
    let rb = r.powf(b);
    Ok((r.value().powf(order as f64 - b) * rb.partial(alpha.0, alpha.1)).abs())
}

/// Supremum of `|r^{|alpha| - b} d^alpha (r^b)|` over `grid`.
pub fn admissibility_scan(w: &WeightFunction, b: f64, alpha: (usize, usize), grid: &[Vec2]) -> Result<f64> {
    grid.iter().try_fold(0.0f64, |acc, &x| Ok(acc.max(admissibility_value(w, x, b, alpha)?)))
}

/// Scan grid around every puncture: `rings` radii spread over `(R/100, R/4)`
/// including the distances `R/100, R/10, R/7, R/5.5, R/4`, each with `angles`
/// directions. Points closer to another puncture are kept; they are evaluated
/// against their nearest puncture anyway.
pub fn admissibility_grid(w: &WeightFunction, rings: usize, angles: usize) -> Vec<Vec2> {
    let radius = w.eta().radius();
    let mut radii: Vec<f64> = vec![radius / 100.0, radius / 10.0, radius / 7.0, radius / 5.5, radius / 4.0];
    let (lo, hi) = ((radius / 100.0).ln(), (radius / 4.0).ln());
    for k in 0..rings {
        radii.push((lo + (hi - lo) * (k as f64 + 0.5) / rings as f64).exp());
    }
    let mut grid = Vec::with_capacity(w.punctures().len() * radii.len() * angles);
    for p in w.punctures() {
        for &rad in &radii {
            for a in 0..angles {
                let phi = std::f64::consts::TAU * (a as f64 + 0.25) / angles as f64;
                grid.push(p + Vec2::new(phi.cos(), phi.sin()) * rad);
            }
        }
    }
    grid
}

/// Geodesic curvature in `g_hat` of a curve through `x` with unit tangent
/// `tangent` and signed Euclidean curvature `theta_prime` (domain on the left):
/// `kappa = r kappa_e + <grad r, nu>` with `kappa_e = -theta'` and `nu` the
/// outward (right-hand) normal.
pub fn conformal_curvature_at(w: &WeightFunction, x: Vec2, tangent: Vec2, theta_prime: f64) -> Result<f64> {
    if w.distance(x) == 0.0 {
        return Err(WeightError::AtPuncture);
    }
    let (r, grad) = w.value_and_gradient(x);
    let normal = Vec2::new(tangent.y, -tangent.x);
    Ok(-r * theta_prime + grad.dot(&normal))
}

/// Geodesic curvature of `curve` in `g_hat` at Euclidean arc length `s`.
pub fn conformal_curvature<C: ClosedCurve + ?Sized>(curve: &C, s: f64, w: &WeightFunction) -> Result<f64> {
    conformal_curvature_at(w, curve.point(s), curve.tangent(s), curve.curvature(s))
}

/// One sample of a curvature profile.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CurvatureSample {
    pub piece_id: usize,
    pub s_hat: f64,
    pub kappa: f64,
    pub dkappa_ds: f64,
    pub r: f64,
}

/// Sampled `d^k kappa / ds_hat^k` along a boundary.
#[derive(Debug, Clone)]
pub struct CurvatureProfile {
    pub order: usize,
    pub samples: Vec<CurvatureSample>,
    /// Supremum of `|d^k kappa / ds_hat^k|` over the samples.
    pub sup: f64,
}

/// Step in `g_hat` arc length for the `k`-th difference quotient. Larger steps
/// for higher orders keep rounding noise below the truncation error.
pub fn curvature_step(k: usize) -> f64 {
    match k {
        0 | 1 => 1e-3,
        2 => 1e-2,
        3 => 3e-2,
        _ => 5e-2,
    }
}

/// Substep for transporting along the curve in `g_hat` arc length.
const TRANSPORT_STEP: f64 = 1e-3;

/// Euclidean arc length reached from `s` after `g_hat` arc length `s_hat`
/// (RK4 on `ds / ds_hat = r(gamma(s))`).
pub fn transport<C: ClosedCurve + ?Sized>(curve: &C, w: &WeightFunction, s: f64, s_hat: f64) -> f64 {
    if s_hat == 0.0 {
        return s;
    }
    let steps = (s_hat.abs() / TRANSPORT_STEP).ceil() as usize;
    let h = s_hat / steps as f64;
    let f = |s: f64| w.value(curve.point(s));
    let mut s = s;
    for _ in 0..steps {
        let k1 = f(s);
        let k2 = f(s + 0.5 * h * k1);
        let k3 = f(s + 0.5 * h * k2);
        let k4 = f(s + h * k3);
        s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    s
}

/// Stencil offsets (in steps) and weights of the central `k`-th difference.
fn stencil(k: usize) -> &'static [(i32, f64)] {
    match k {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
    }
}

/// `d^k kappa / ds_hat^k` at Euclidean arc length `s`.
pub fn curvature_derivative<C: ClosedCurve + ?Sized>(curve: &C, w: &WeightFunction, s: f64, k: usize) -> Result<f64> {
    if k > 4 {
        return Err(WeightError::OrderTooHigh(k));
    }
    let h = curvature_step(k);
    let mut acc = 0.0;
    for &(offset, weight) in stencil(k) {
        let at = transport(curve, w, s, offset as f64 * h);
        acc += weight * conformal_curvature(curve, at, w)?;
    }
    Ok(acc / h.powi(k as i32))
}

/// Profile of `d^k kappa / ds_hat^k` with `per_piece` samples on each piece
/// listed in `pieces` (all pieces when `None`). The second derivative column
/// of the samples always carries the first derivative.
pub fn curvature_profile<C: ClosedCurve + ?Sized>(
    curve: &C,
    w: &WeightFunction,
    k: usize,
    per_piece: usize,
    pieces: Option<&[usize]>,
) -> Result<CurvatureProfile> {
    if k > 4 {
        return Err(WeightError::OrderTooHigh(k));
    }
    let all: Vec<usize> = (0..curve.piece_count()).collect();
    let pieces = pieces.unwrap_or(&all);
    let mut samples = Vec::new();
    let mut sup = 0.0f64;
    let mut prev_s = 0.0;
    let mut s_hat = 0.0;
    let mut sorted = pieces.to_vec();
    sorted.sort_unstable();
    for &i in &sorted {
        let (a, b) = curve.piece_range(i);
        for m in 0..per_piece {
            let s = a + (b - a) * (m as f64 + 0.5) / per_piece as f64;
            s_hat += metric_length_between(curve, w, prev_s, s)?;
            prev_s = s;
            let value = curvature_derivative(curve, w, s, k)?;
            sup = sup.max(value.abs());
            samples.push(CurvatureSample {
                piece_id: i,
                s_hat,
                kappa: conformal_curvature(curve, s, w)?,
                dkappa_ds: if k == 1 { value } else { curvature_derivative(curve, w, s, 1)? },
                r: w.value(curve.point(s)),
            });
        }
    }
    Ok(CurvatureProfile { order: k, samples, sup })
}

fn metric_length_between<C: ClosedCurve + ?Sized>(curve: &C, w: &WeightFunction, s0: f64, s1: f64) -> Result<f64> {
    if s1 <= s0 {
        return Ok(0.0);
    }
    geodesic_length(|s| (curve.point(s), curve.tangent(s)), s0, s1, w)
}

/// Write `piece_id, s_hat, kappa, dkappa_ds, r` rows.
pub fn write_curvature_csv<W: Write>(profile: &CurvatureProfile, out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for sample in &profile.samples {
        writer.serialize(sample)?;
    }
    writer.flush()?;
    Ok(())
}

/// `g_hat` length of the path `t -> (gamma(t), gamma'(t))` on `[t0, t1]`.
pub fn geodesic_length<F: Fn(f64) -> (Vec2, Vec2)>(path: F, t0: f64, t1: f64, w: &WeightFunction) -> Result<f64> {
    let mut hit = false;
    let value = adaptive_gauss(
        |t| {
            let (x, dx) = path(t);
            let r = w.value(x);
            if r <= 0.0 {
                hit = true;
                return 0.0;
            }
            dx.norm() / r
        },
        t0,
        t1,
        1e-10,
    );
    if hit {
        return Err(WeightError::AtPuncture);
    }
    Ok(value)
}

/// `g_hat` length of a whole closed curve.
pub fn curve_geodesic_length<C: ClosedCurve + ?Sized>(curve: &C, w: &WeightFunction) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..curve.piece_count() {
        let (a, b) = curve.piece_range(i);
        total += geodesic_length(|s| (curve.point(s), curve.tangent(s)), a, b, w)?;
    }
    Ok(total)
}

/// `g_hat` length of an open polyline, exact per straight segment up to
/// quadrature tolerance.
pub fn polyline_geodesic_length(points: &[Vec2], w: &WeightFunction) -> Result<f64> {
    points.windows(2).try_fold(0.0, |acc, seg| {
        let (a, b) = (seg[0], seg[1]);
        Ok(acc + geodesic_length(|t| (a + (b - a) * t, b - a), 0.0, 1.0, w)?)
    })
}
