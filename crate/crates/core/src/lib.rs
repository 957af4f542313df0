//! Quadratic rough Heston engine.
//!
//! The spot follows `dS = S √V dW` with `V = a (Z − b)² + c`, where `Z` solves
//! a Volterra equation with the fractional kernel `λ t^{α−1}/Γ(α)` driven by the
//! same Brownian motion. The crate simulates the joint SPX/VIX dynamics, prices
//! SPX options and (by nested Monte Carlo) VIX futures and options, inverts
//! implied volatilities and calibrates `(α, λ, a, b, c, Z₀)` to joint smiles.
//!
//! Every numerical type is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod error;
pub mod impliedvol;
pub mod kv;
pub mod model;
pub mod pricing;
pub mod rng;
mod scalar;
pub mod simulate;
pub mod specialfn;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

pub type ModelParams = model::ModelParams<Real>;
pub type ForwardCurve = model::ForwardCurve<Real>;
pub type ParametricTheta = model::ParametricTheta<Real>;
pub type KernelSpec = specialfn::KernelSpec<Real>;
pub type SimConfig = simulate::SimConfig<Real>;
pub type PathEnsemble = simulate::PathEnsemble<Real>;
pub type PriceEstimate = pricing::PriceEstimate<Real>;
pub type VixConvention = pricing::VixConvention<Real>;
pub type NestedConfig = pricing::NestedConfig;
pub type VolQuote = impliedvol::VolQuote<Real>;
pub type SmileSet = calibrate::SmileSet<Real>;
pub type CalibrationResult = calibrate::CalibrationResult<Real>;
pub type McConfig = calibrate::McConfig;

/// Single-precision aliases.
pub mod single {
    pub type ModelParams = crate::model::ModelParams<f32>;
    pub type ForwardCurve = crate::model::ForwardCurve<f32>;
    pub type SimConfig = crate::simulate::SimConfig<f32>;
    pub type PathEnsemble = crate::simulate::PathEnsemble<f32>;
}
