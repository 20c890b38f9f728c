//! Rate-two, full-diversity space-time block code for four transmit antennas:
//! construction, rank/determinant analysis, channel model, low-complexity
//! maximum-likelihood decoders and a Monte Carlo error-rate harness.
//!
//! Numeric routines are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiation.

pub mod analysis;
pub mod channel;
pub mod constellation;
pub mod decoder;
pub mod error;
pub mod numcore;
pub mod scalar;
pub mod sim;
pub mod stbc;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Cx, Scalar};

pub type Complex64 = Cx<f64>;
pub type ComplexMat64 = numcore::ComplexMat<f64>;
pub type RealMat64 = numcore::RealMat<f64>;
pub type Constellation64 = constellation::Constellation<f64>;
pub type Code64 = stbc::LinearDispersionCode<f64>;
pub type Channel64 = channel::ChannelRealization<f64>;
pub type Model64 = decoder::RealEquivalentModel<f64>;
pub type DecodeResult64 = decoder::DecodeResult<f64>;
