//! Proximal maps for regularizing the magnitude of complex-valued images.
//!
//! The central routine is [`prox::magnitude_lift`], which evaluates the
//! proximal map of `G(z) = H(|z|)` from the proximal map of `H` alone: a
//! phase reattachment when `prox_H` keeps the nonnegative orthant, and a
//! Douglas-Rachford bounded prox otherwise. Around it sit a regularizer
//! catalog, a parametric level-set projection, a point-scatterer SAR model
//! and the PDHG / Douglas-Rachford solvers used for full reconstructions.

pub mod cimg;
pub mod error;
pub mod export;
pub mod image;
pub mod levelset;
pub mod operator;
pub mod par;
pub mod prox;
pub mod regularizers;
pub mod rng;
pub mod sar;
pub mod solvers;
pub mod suites;

pub use error::{Error, Result};
pub use image::{ComplexImage, MagPhase, Shape};
pub use num_complex::Complex64;
pub use operator::LinearOperator;
pub use prox::{magnitude_lift, LiftConfig, MagLiftReport, ProxFunction};
