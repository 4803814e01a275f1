//! Orbit complexity, periodic-point closing and heteroclinic certificates for
//! area-preserving maps of the two-torus.
//!
//! The geometric core (`geometry`, `maps`, `cocycle`) is generic over
//! [`scalar::Real`]; the aliases below fix it at `f64`, which is what the
//! higher layers use.

// NaN must fail validation, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bowen;
pub mod certify;
pub mod closing;
pub mod cocycle;
pub mod counterexample;
pub mod error;
pub mod geometry;
pub mod hetero;
pub mod maps;
pub mod pliss;
pub mod scalar;
pub mod schedule;

pub use error::{Error, Result};

pub type Point = geometry::TorusPoint<f64>;
pub type Vector = geometry::Vec2<f64>;
pub type Matrix = geometry::Mat2<f64>;
pub type Map = maps::SurfaceMap<f64>;
pub type Trace = cocycle::CocycleTrace<f64>;
pub type Bounds = maps::NormBounds<f64>;
