//! Numerical laboratory for the unconstrained feature model of neural
//! collapse.
//!
//! The crate trains free last-layer features `H` and classifiers `(W, b)`
//! under weight decay, certifies global optimality through the nuclear-norm
//! convex relaxation, builds and checks simplex-ETF solutions, and exposes
//! the negative-curvature direction at strict saddles.
//!
//! All math is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar at `f64`, which is what the tolerances in the test-suite
//! assume.

// `!(x > 0)` guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lemmas;
pub mod losses;
pub mod numlin;
pub mod rng;
pub mod scalar;
pub mod ufm;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = numlin::Mat<f64>;
pub type Matrix32 = numlin::Mat<f32>;
pub type LossSpec = losses::LossSpec<f64>;
pub type Hyper = ufm::Hyper<f64>;
pub type UfmState = ufm::UfmState<f64>;
pub type TrainConfig = ufm::TrainConfig<f64>;
pub type Certificate = certify::Certificate<f64>;
pub type RhoSolution = certify::RhoSolution<f64>;
