//! Convex approximations of two-stage mixed-integer recourse models.
//!
//! The crate provides exact rational oracles for the second-stage value
//! function, the dual-basis decomposition into affine-plus-periodic pieces,
//! the shifted LP-relaxation and α-approximations, Monte Carlo estimators of
//! the recourse function, and the constants that enter the parametric error
//! bounds.

pub mod approx;
pub mod bases;
pub mod bounds;
pub mod distributions;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod instance;
pub(crate) mod json;
pub mod linalg;
pub mod periodic;
pub mod sir;
pub mod validate;

pub use error::{MirError, Result};
pub use instance::{load_instance, Instance};
