//! Truncated Taylor arithmetic in one and two variables.
//!
//! Coefficients are stored as normalized Taylor coefficients
//! `f^{(k)}(x0) / k!`, so derivatives come out exact to rounding, which is
//! what high-order admissibility scans of the weight need.

use std::ops::{Add, Mul, Neg, Sub};

/// Univariate truncated Taylor series `sum_k c[k] t^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    pub c: Vec<f64>,
}

impl Taylor {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Self { c }
    }

    /// The identity variable `x0 + t`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x0;
        if order >= 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        if k >= self.c.len() {
            return 0.0;
        }
        self.c[k] * factorial(k)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    pub fn recip(&self) -> Self {
        let n = self.c.len();
        let mut q = vec![0.0; n];
        q[0] = 1.0 / self.c[0];
        for k in 1..n {
            let mut acc = 0.0;
            for i in 1..=k {
                acc += self.c[i] * q[k - i];
            }
            q[k] = -acc / self.c[0];
        }
        Self { c: q }
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut e = vec![0.0; n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let mut acc = 0.0;
            for i in 1..=k {
                acc += i as f64 * self.c[i] * e[k - i];
            }
            e[k] = acc / k as f64;
        }
        Self { c: e }
    }

    pub fn ln(&self) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        let mut l = vec![0.0; n];
        l[0] = a0.ln();
        for k in 1..n {
            let mut acc = 0.0;
            for i in 1..k {
                acc += i as f64 * l[i] * self.c[k - i];
            }
            l[k] = (self.c[k] - acc / k as f64) / a0;
        }
        Self { c: l }
    }

    pub fn powf(&self, p: f64) -> Self {
        self.ln().scale(p).exp()
    }
}

impl Add for &Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        Taylor { c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        Taylor { c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

impl Mul for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        let n = self.c.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..(n - i) {
                out[i + j] += self.c[i] * rhs.c[j];
            }
        }
        Taylor { c: out }
    }
}

/// Bivariate truncated Taylor polynomial of total degree `order`:
/// `sum_{i+j<=K} c[i][j] dx^i dy^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    order: usize,
    c: Vec<f64>,
}

impl Jet2 {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.order + 1) + j
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut c = vec![0.0; (order + 1) * (order + 1)];
        c[0] = value;
        Self { order, c }
    }

    /// Coordinate jets `(x0 + dx, y0 + dy)`.
    pub fn coordinates(x0: f64, y0: f64, order: usize) -> (Self, Self) {
        let mut x = Self::constant(x0, order);
        let mut y = Self::constant(y0, order);
        if order >= 1 {
            let ix = x.idx(1, 0);
            x.c[ix] = 1.0;
            let iy = y.idx(0, 1);
            y.c[iy] = 1.0;
        }
        (x, y)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            return 0.0;
        }
        self.c[self.idx(i, j)]
    }

    /// Partial derivative `d^{i+j} / dx^i dy^j` at the expansion point.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * factorial(i) * factorial(j)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { order: self.order, c: self.c.iter().map(|v| v * s).collect() }
    }

    /// Evaluate `f(self)` given the univariate Taylor coefficients of `f` at
    /// `self.value()`.
    pub fn compose(&self, outer: &[f64]) -> Self {
        let mut delta = self.clone();
        delta.c[0] = 0.0;
        let mut out = Self::constant(outer.first().copied().unwrap_or(0.0), self.order);
        let mut power = Self::constant(1.0, self.order);
        for coef in outer.iter().take(self.order + 1).skip(1) {
            power = &power * &delta;
            if *coef != 0.0 {
                for (o, p) in out.c.iter_mut().zip(&power.c) {
                    *o += coef * p;
                }
            }
        }
        out
    }

    /// Partial derivative along `x` (`axis = 0`) or `y`; the result keeps the
    /// same storage but its top-degree coefficients are zero.
    pub fn differentiate(&self, axis: usize) -> Self {
        let k = self.order;
        let mut out = Self::constant(0.0, k);
        for i in 0..=k {
            for j in 0..=(k - i) {
                let (src, factor) = match axis {
                    0 if i < k - j => ((i + 1, j), (i + 1) as f64),
                    1 if j < k - i => ((i, j + 1), (j + 1) as f64),
                    _ => continue,
                };
                let id = out.idx(i, j);
                out.c[id] = self.c[self.idx(src.0, src.1)] * factor;
            }
        }
        out
    }

    pub fn sqrt(&self) -> Self {
        self.compose(&power_coefficients(self.value(), 0.5, self.order))
    }

    pub fn powf(&self, p: f64) -> Self {
        self.compose(&power_coefficients(self.value(), p, self.order))
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        Jet2 { order: self.order, c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        Jet2 { order: self.order, c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        let k = self.order;
        let mut out = Jet2::constant(0.0, k);
        for i1 in 0..=k {
            for j1 in 0..=(k - i1) {
                let a = self.c[self.idx(i1, j1)];
                if a == 0.0 {
                    continue;
                }
                for i2 in 0..=(k - i1 - j1) {
                    for j2 in 0..=(k - i1 - j1 - i2) {
                        let id = out.idx(i1 + i2, j1 + j2);
                        out.c[id] += a * rhs.c[rhs.idx(i2, j2)];
                    }
                }
            }
        }
        out
    }
}

/// Taylor coefficients of `t -> t^p` at `x0 > 0`.
pub fn power_coefficients(x0: f64, p: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for k in 0..=order {
        out.push(binom * x0.powf(p - k as f64));
        binom *= (p - k as f64) / (k as f64 + 1.0);
    }
    out
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}
