//! The exp(-1/t) smoothstep: a C-infinity monotone transition from 0 to 1 on
//! `[0, 1]` whose derivatives of all orders vanish at both ends.
//!
//! `S(x) = f(x) / (f(x) + f(1 - x))` with `f(t) = exp(-1/t)`; it satisfies
//! `S(1 - x) = 1 - S(x)`.

use crate::jet::Taylor;

/// Exponent beyond which `exp` is treated as saturated.
const SATURATION: f64 = 700.0;

#[inline]
fn logit(x: f64) -> f64 {
    1.0 / x - 1.0 / (1.0 - x)
}

/// `S(x)`, clamped to 0 below 0 and 1 above 1.
#[inline]
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let g = logit(x);
    if g > SATURATION {
        0.0
    } else if g < -SATURATION {
        1.0
    } else {
        1.0 / (1.0 + g.exp())
    }
}

/// `S'(x) = S (1 - S) (1/x^2 + 1/(1-x)^2)`.
#[inline]
pub fn smoothstep_derivative(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let s = smoothstep(x);
    if s == 0.0 || s == 1.0 {
        return 0.0;
    }
    s * (1.0 - s) * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x)))
}

/// Taylor coefficients of `S` at `x` up to `order`.
pub fn smoothstep_taylor(x: f64, order: usize) -> Taylor {
    if x <= 0.0 {
        return Taylor::constant(0.0, order);
    }
    if x >= 1.0 {
        return Taylor::constant(1.0, order);
    }
    let g0 = logit(x);
    if g0 > SATURATION {
        return Taylor::constant(0.0, order);
    }
    if g0 < -SATURATION {
        return Taylor::constant(1.0, order);
    }
    let t = Taylor::variable(x, order);
    let one_minus = t.scale(-1.0).add_scalar(1.0);
    let g = &t.recip() - &one_minus.recip();
    g.exp().add_scalar(1.0).recip()
}
