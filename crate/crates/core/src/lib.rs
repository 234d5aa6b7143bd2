//! Structured low-rank factorization of multivariate time series.
//!
//! A `d x T` series is modelled as `X = U V Lambda + noise`, where `Lambda`
//! (`tau x T`) is a known structure matrix: the identity, stacked identity
//! blocks for `tau`-periodic series, or a trigonometric basis for smooth
//! series. The estimator projects onto the row space of `Lambda`, keeps the
//! best rank-`k` approximation there, and maps back.
//!
//! Modules:
//! - [`linalg`]: norms, SVD, truncation, eigen-extremes.
//! - [`structure`]: builders for `Lambda`, projection and expansion.
//! - [`estimator`]: the rank-constrained fit and risk functions.
//! - [`noise`]: i.i.d., MA(1) and AR(1) row noise and `||Sigma||_op`.
//! - [`sobolev`]: smooth dictionaries and the optimal frequency cutoff.
//! - [`select`]: penalized selection of `(tau, k)`.

pub mod error;
pub mod estimator;
pub mod linalg;
pub mod noise;
pub mod rng;
pub mod select;
pub mod sobolev;
pub mod structure;

pub use error::{Error, Result};
pub use estimator::{empirical_risk, fit, predict, risk, FactorModel, RankPath};
pub use linalg::{Matrix, SvdResult};
pub use noise::{CovarianceSummary, Innovation, NoiseLaw, NoiseSpec};
pub use select::{CandidateGrid, PenaltyParams, SelectionRecord, SelectionResult};
pub use sobolev::{SmoothDictionary, SmoothFactorSpec};
pub use structure::{BasisKind, BasisSpec, StructureBasis};
