//! Mixed fractional Vasicek processes: exact-covariance simulation, the
//! fundamental-martingale observation transform, and closed-form
//! maximum-likelihood estimators of the drift parameters.
//!
//! The model is
//!
//! ```text
//! dX_t = (alpha - beta X_t) dt + gamma dxi_t,   X_0 = 0,
//! xi_t = W_t + B^H_t,
//! ```
//!
//! where `W` is a standard Brownian motion and `B^H` an independent
//! fractional Brownian motion with Hurst index `H != 1/2`.
//!
//! The crate is `no_std` (with `alloc`). File formats, the Monte Carlo
//! harness and the command-line interface live in the `mfvasicek` crate.
//!
//! Pipeline:
//!
//! 1. [`covariance::build_increment_factor`] factors the covariance of the
//!    grid increments of `xi` once.
//! 2. [`simulate::sample_mfbm`] / [`simulate::simulate_vasicek`] draw paths.
//! 3. [`kernel::kernel_filter`] turns the same factor into the discrete
//!    kernel `g(s_i, t_n)` and the bracket `<M>`.
//! 4. [`transform::transform`] maps an observed path to `(Z, Q, <M>)`.
//! 5. [`estimators`] evaluates the likelihood and the closed-form MLEs, and
//!    [`asymptotics`] supplies the limiting laws used for standard errors.

#![no_std]
#![warn(missing_debug_implementations)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod asymptotics;
pub mod covariance;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod simulate;
pub mod transform;

pub use asymptotics::{AsymptoticLaw, Coordinate, MarginalLaw, Regime};
pub use covariance::{build_increment_factor, fbm_cov, mixed_cov, CovarianceModel, IncrementFactor};
pub use error::{Error, ParamViolation, Result};
pub use estimators::{
    fit, fit_with_kernel, log_likelihood, mle_alpha_known_beta, mle_beta_known_alpha, mle_joint, EstimateReport,
    FitOptions, GammaSpec, Mode, SufficientStats,
};
pub use kernel::{
    kernel_filter, kernel_wiener_hopf, martingale_from_path, KernelField, KernelMethod, KernelRow, MartingaleTrack,
};
pub use model::{make_uniform_grid, validate_params, HurstSide, ModelParams, PathLabel, SamplePath, TimeGrid};
pub use transform::{compute_decomposition, estimate_gamma, transform, DecompositionTrack, TransformedObservation};
