//! Adaptive-precision orientation and in-circle tests (thin wrappers over
//! the `robust` crate).

use crate::Vec2;
use robust::Coord;

#[inline]
fn coord(p: Vec2) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

/// Positive when `a, b, c` turn counterclockwise, zero when collinear.
#[inline]
pub fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counterclockwise triangle `a, b, c`.
#[inline]
pub fn incircle(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    robust::incircle(coord(a), coord(b), coord(c), coord(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_conventions() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(1.0, 0.0);
        let c = Vec2::new(0.0, 1.0);
        assert!(orient(a, b, c) > 0.0);
        assert!(orient(a, c, b) < 0.0);
        assert_eq!(orient(a, b, Vec2::new(2.0, 0.0)), 0.0);
        assert!(incircle(a, b, c, Vec2::new(0.5, 0.5)) > 0.0);
        assert!(incircle(a, b, c, Vec2::new(2.0, 2.0)) < 0.0);
        assert_eq!(incircle(a, b, c, Vec2::new(1.0, 1.0)), 0.0);
    }
}
