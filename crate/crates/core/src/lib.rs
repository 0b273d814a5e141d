//! Functional linear regression `Y = ⟨ρ, X⟩ + ε` with spectral regularization of
//! the empirical covariance operator.
//!
//! - [`hilbert`]: grids, quadrature weights, curves and the weighted inner product.
//! - [`spectral`]: empirical covariance / cross-covariance and functional PCA.
//! - [`filters`]: regularization filters `f_n`, threshold `c_n`, the ranks `k_n` and `d_n`.
//! - [`estimator`]: `ρ̂ = Γ_n†Δ_n`, prediction, `ŝ_n`, `t̂_{n,x}`, `σ̂_ε`, and intervals.
//! - [`simlab`]: Karhunen-Loève simulation, truth oracles and Monte Carlo experiments.
//! - [`cli`]: the `flr` command-line front end.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod filters;
pub mod hilbert;
pub mod simlab;
pub mod spectral;

pub use error::{Error, Result};
pub use estimator::{
    fit, predict, prediction_interval, EstimatorFit, FitRecord, Normalizer, PredictionInterval,
};
pub use filters::{FilterKind, FilterSpec, GeneralizedVariant};
pub use hilbert::{inner_product, make_trapezoid_grid, norm, Curve, Grid};
pub use spectral::{eigendecompose, empirical_covariance, Centering, SpectralDecomposition};
