//! Rounded polygonal domain families and uniform weighted-Sobolev estimates
//! for the Dirichlet Poisson problem.
//!
//! A straight polygon is rounded at every corner at scale `1/n`, producing a
//! family of smooth domains together with puncture sets placed on the exterior
//! bisectrices. The conformal weight `r_n` built from those punctures turns
//! each corner neighbourhood into a cylinder-like end. The crate
//!
//! - builds the family ([`geometry`]) and the weight ([`weights`]),
//! - measures boundary curvature, width and normal reach in the conformal
//!   metric ([`diagnostics`]),
//! - meshes ([`mesh`]) and solves the Dirichlet Poisson problem with P1/P2
//!   elements ([`fem`]),
//! - evaluates Babuška–Kondratiev and Sobolev norms ([`norms`]),
//! - and runs parameter sweeps with CSV/SVG output ([`harness`]).

pub mod bump;
pub mod curve;
pub mod diagnostics;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod jet;
pub mod mesh;
pub mod norms;
pub mod predicates;
pub mod quadrature;
pub mod sparse;
pub mod svg;
pub mod weights;

/// Plane vector / point.
pub type Vec2 = nalgebra::Vector2<f64>;

pub use curve::ClosedCurve;
pub use geometry::{Polygon, RoundedDomain, RoundingParams, SmoothArc};
pub use weights::{EtaProfile, WeightFunction};
