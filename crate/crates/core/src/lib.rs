//! Nonparametric spot-volatility estimation from high-frequency prices.
//!
//! The centerpiece is the Fourier estimator: volatility Fourier
//! coefficients are built from price-increment coefficients through a
//! Dirichlet-kernel convolution with cut-off `N`, and the variance path is
//! reconstructed by Fejér inversion with cut-off `M`. With noisy prices the
//! same estimator remains consistent once `N` is scaled like `c√n`; an
//! adaptive gradient-descent rule selects `(N, M)` from data by minimizing
//! the conditional asymptotic MISE. Two-Scale and Pre-averaging estimators,
//! simulators, error metrics and CLT verification harnesses round out the
//! toolkit.
//!
//! Scalar-generic pieces (the kernels and the c-AMISE objective) are
//! parameterized over `num_traits::Float`; concrete `f64` aliases sit at
//! the crate root. Time convention: one trading session = one day; all
//! variances are per day.

pub mod baselines;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod ingest;
pub mod kernels;
pub mod lemmas;
pub mod metrics;
pub mod path;
pub mod plugins;
pub mod selector;
pub mod simulate;

pub use error::{Error, Result};
pub use path::{interior_grid, EstimatorConfig, PricePath, SpotVolPath, DAY_VARIANCE_FACTOR, TWO_PI};

/// Concrete scalar used by the path-level machinery.
pub type Real = f64;

/// c-AMISE objective over `f64` (the generic form is [`selector::CAmise`]).
pub type CAmise64 = selector::CAmise<f64>;
