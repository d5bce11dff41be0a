//! Boundary-crossing probabilities for m-dimensional Brownian motion.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: open regions of ℝ^m with exact signed distance, dilation
//!   and erosion, and the Hausdorff-type metrics ρ_h and ρ_H.
//! * [`path`]: piecewise-linear scalar and vector paths used to describe
//!   moving boundaries.
//! * [`domain`]: time-space domains G built from time sections G_t, plus
//!   estimation of the class parameters (K, β, γ, v₀).
//! * [`bounds`]: explicit inequalities for hitting-time densities,
//!   conditional survival and the certified dilation gap constant.
//! * [`closedform`]: exact one-dimensional formulas (normal CDF, linear
//!   barrier non-crossing, first-passage density, bridge crossing) and the
//!   piecewise-linear band estimator.
//! * [`mc`]: the seeded Monte Carlo engine used as a verification oracle.

pub mod bounds;
pub mod closedform;
pub mod domain;
pub mod error;
pub mod geometry;
pub mod mc;
pub mod path;
pub mod rng;

pub use error::{Error, Result};
