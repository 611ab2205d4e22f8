//! Gradient-boosted decision trees with single-model uncertainty estimates, and a
//! pool-based active-learning harness that uses them as query strategies.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiation.

pub mod ceal;
pub mod data;
pub mod error;
pub mod gbdt;
pub mod harness;
pub mod matrix;
pub mod sampling;
pub mod scalar;
pub mod uncertainty;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use scalar::Scalar;

pub type Model = gbdt::BoostedModel<f64>;
pub type ModelF32 = gbdt::BoostedModel<f32>;
pub type FeatureMatrix = Matrix<f64>;
pub type VeDecomposition = uncertainty::VeDecomposition<f64>;
pub type PseudoLabelSet = ceal::PseudoLabelSet<f64>;
pub type LeafCache = uncertainty::LeafCache;
