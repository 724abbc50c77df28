//! Target element sizes.

use super::MeshError;
use crate::weights::WeightFunction;
use crate::Vec2;

#[derive(Debug, Clone)]
pub enum SizingRule {
    /// `h = h_max` everywhere.
    Uniform,
    /// `h = beta r(x)`: roughly constant element size in `g_hat`.
    Conformal { weight: WeightFunction, beta: f64 },
    /// `h = h_max (d / scale)^exponent` with `d` the distance to the nearest
    /// corner, for resolving corner singularities of the straight polygon.
    Graded { corners: Vec<Vec2>, exponent: f64, scale: f64 },
}

/// `h(x) = clamp(rule(x), h_min, h_max)`.
#[derive(Debug, Clone)]
pub struct SizingField {
    pub h_max: f64,
    pub h_min: f64,
    pub rule: SizingRule,
}

impl SizingField {
    pub fn uniform(h: f64) -> Result<Self, MeshError> {
        Self::new(h, h, SizingRule::Uniform)
    }

    pub fn conformal(weight: WeightFunction, beta: f64, h_min: f64, h_max: f64) -> Result<Self, MeshError> {
        if !(beta > 0.0) {
            return Err(MeshError::InvalidSizing(format!("beta = {beta} must be positive")));
        }
        Self::new(h_min, h_max, SizingRule::Conformal { weight, beta })
    }

    pub fn graded(corners: Vec<Vec2>, exponent: f64, scale: f64, h_min: f64, h_max: f64) -> Result<Self, MeshError> {
        if !(exponent > 0.0 && scale > 0.0) {
            return Err(MeshError::InvalidSizing(format!("grading exponent {exponent} and scale {scale} must be positive")));
        }
        Self::new(h_min, h_max, SizingRule::Graded { corners, exponent, scale })
    }

    fn new(h_min: f64, h_max: f64, rule: SizingRule) -> Result<Self, MeshError> {
        if !(h_min > 0.0 && h_min <= h_max && h_max.is_finite()) {
            return Err(MeshError::InvalidSizing(format!("need 0 < h_min = {h_min} <= h_max = {h_max}")));
        }
        Ok(Self { h_max, h_min, rule })
    }

    pub fn beta(&self) -> Option<f64> {
        match self.rule {
            SizingRule::Conformal { beta, .. } => Some(beta),
            _ => None,
        }
    }

    /// Target size at `x`.
    pub fn size(&self, x: Vec2) -> f64 {
        let raw = match &self.rule {
            SizingRule::Uniform => self.h_max,
            SizingRule::Conformal { weight, beta } => beta * weight.value(x),
            SizingRule::Graded { corners, exponent, scale } => {
                let d = corners.iter().map(|c| (x - c).norm()).fold(f64::INFINITY, f64::min);
                self.h_max * (d / scale).min(1.0).powf(*exponent)
            }
        };
        raw.clamp(self.h_min, self.h_max)
    }
}
