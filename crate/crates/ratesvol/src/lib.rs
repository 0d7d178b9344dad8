//! Yield-curve principal components with observed stochastic volatility.
//!
//! The pipeline: ingest monthly zero-coupon rate panels and a volatility
//! index series, extract principal components of the rate panel, estimate
//! autoregressive models in which selected components carry
//! volatility-scaled innovations, run residual diagnostics, simulate the
//! fitted system in discrete or continuous time with closed-form
//! stationary oracles, and analyze zero-coupon bond total returns, term
//! premia, and the maturity-slope (CAPM-style) prediction.

pub mod dates;
pub mod diagnose;
pub mod estimate;
pub mod ingest;
pub mod linalg;
pub mod report;
pub mod returns;
pub mod rng;
pub mod simulate;
pub mod special;
pub mod yieldpca;

pub use dates::YearMonth;
