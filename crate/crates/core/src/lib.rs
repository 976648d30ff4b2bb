//! Wideband direction-of-arrival estimation toolkit.
//!
//! The deterministic maximum-likelihood (DML) cost for a wideband array is
//! a sum of per-frequency residuals, one orthogonal-complement projector
//! per DFT bin. Because that projector varies smoothly with frequency, a
//! low-order Chebyshev interpolant collapses the thousands of summands into
//! a handful of narrowband-like terms, each weighting a precompressed
//! correlation matrix. This crate implements that compression, the
//! piecewise-constant (bin) baseline, incoherent MUSIC over the same bins,
//! the DCT-accelerated one-dimensional searches, and the chi-square
//! detection / Gauss-Newton refinement loop that turns them into estimates,
//! together with a frequency-domain signal simulator.
//!
//! Everything numeric is generic over the real scalar type (`f32`/`f64`)
//! through [`num::Real`]; the `*64` aliases at the crate root are the
//! instantiations used in practice.

// Validations are written as `!(x > 0)` on purpose: the negated form also
// rejects NaN, which `x <= 0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array_model;
pub mod chebyshev;
pub mod cost;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod num;
pub mod search1d;
pub mod signal_sim;

pub use error::{Error, Result};
pub use num::Real;

/// Complex scalar over `f32`.
pub type C32 = num_complex::Complex<f32>;
/// Complex scalar over `f64`.
pub type C64 = num_complex::Complex<f64>;

pub type Interval64 = chebyshev::Interval<f64>;
pub type ChebGrid64 = chebyshev::ChebGrid<f64>;
pub type ChebSeries64 = chebyshev::ChebSeries<f64>;
pub type CMatrix64 = linalg::CMatrix<f64>;
pub type ArrayConfig64 = array_model::ArrayConfig<f64>;
pub type DoaVector64 = array_model::DoaVector<f64>;
pub type ScenarioConfig64 = signal_sim::ScenarioConfig<f64>;
pub type SnapshotSet64 = signal_sim::SnapshotSet<f64>;
pub type CorrSet64 = cost::CorrSet<f64>;
pub type SearchConfig64 = search1d::SearchConfig<f64>;
pub type PseudoSpectrum64 = search1d::PseudoSpectrum<f64>;
pub type DetectorConfig64 = estimator::DetectorConfig<f64>;
pub type EstimationResult64 = estimator::EstimationResult<f64>;
