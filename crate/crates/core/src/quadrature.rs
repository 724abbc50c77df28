//! Quadrature rules: Gauss-Legendre on intervals (with an adaptive driver)
//! and symmetric Dunavant rules on triangles.

use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached Gauss-Legendre rule of a fixed small size.
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    /// Integrate `f` over `[a, b]`.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Shared 16-point rule.
pub fn gl16() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(16))
}

/// Shared 8-point rule.
pub fn gl8() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(8))
}

/// Adaptive bisection driven by a 16-point Gauss-Legendre estimate on each
/// half versus the whole interval. Stops when the two estimates agree to
/// `rel_tol` relative (or an absolute floor of `1e-300`).
pub fn adaptive_gauss<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let rule = gl16();
    let whole = rule.integrate(a, b, &mut f);
    adaptive_step(&mut f, a, b, whole, rel_tol, 0, rule)
}

fn adaptive_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    depth: usize,
    rule: &GaussRule,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, &mut *f);
    let right = rule.integrate(m, b, &mut *f);
    let refined = left + right;
    if depth >= 40 || (refined - whole).abs() <= rel_tol * refined.abs().max(1e-300) {
        return refined;
    }
    adaptive_step(f, a, m, left, rel_tol, depth + 1, rule)
        + adaptive_step(f, m, b, right, rel_tol, depth + 1, rule)
}

/// A quadrature rule on the reference triangle `{(x, y): x, y >= 0, x + y <= 1}`
/// given in barycentric coordinates with weights summing to one (multiply
/// by the element area).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    fn from_orbits(degree: usize, s3: &[f64], s21: &[(f64, f64)], s111: &[(f64, f64, f64)]) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &w in s3 {
            points.push([1.0 / 3.0; 3]);
            weights.push(w);
        }
        for &(w, a) in s21 {
            let b = 1.0 - 2.0 * a;
            for p in [[b, a, a], [a, b, a], [a, a, b]] {
                points.push(p);
                weights.push(w);
            }
        }
        for &(w, a, b) in s111 {
            let c = 1.0 - a - b;
            for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                points.push(p);
                weights.push(w);
            }
        }
        Self { points, weights, degree }
    }

    /// Reference coordinates `(xi, eta)` of point `i` (barycentric `l1, l2`).
    #[inline]
    pub fn reference(&self, i: usize) -> (f64, f64) {
        (self.points[i][1], self.points[i][2])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Three-point rule exact for quadratics.
pub fn triangle_degree2() -> &'static TriangleRule {
    static RULE: OnceLock<TriangleRule> = OnceLock::new();
    RULE.get_or_init(|| TriangleRule::from_orbits(2, &[], &[(1.0 / 3.0, 1.0 / 6.0)], &[]))
}

/// Dunavant six-point rule, exact for degree 4.
pub fn triangle_degree4() -> &'static TriangleRule {
    static RULE: OnceLock<TriangleRule> = OnceLock::new();
    RULE.get_or_init(|| {
        TriangleRule::from_orbits(
            4,
            &[],
            &[
                (0.223_381_589_678_011, 0.445_948_490_915_965),
                (0.109_951_743_655_322, 0.091_576_213_509_771),
            ],
            &[],
        )
    })
}

/// Dunavant twelve-point rule, exact for degree 6.
pub fn triangle_degree6() -> &'static TriangleRule {
    static RULE: OnceLock<TriangleRule> = OnceLock::new();
    RULE.get_or_init(|| {
        TriangleRule::from_orbits(
            6,
            &[],
            &[
                (0.116_786_275_726_379, 0.249_286_745_170_910),
                (0.050_844_906_370_207, 0.063_089_014_491_502),
            ],
            &[(0.082_851_075_618_374, 0.053_145_049_844_817, 0.310_352_451_033_784)],
        )
    })
}
