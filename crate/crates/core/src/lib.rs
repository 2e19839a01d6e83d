//! Bayesian optimisation with a minimum-value information acquisition.
//!
//! The objective is modelled as f(x) = η + ½g(x)² with a Gaussian process on
//! `g`, so the unknown global minimum is just another hyperparameter. Kernel
//! hyperparameters and η are sampled jointly, and the acquisition is the
//! mutual information between the next observation and the minimum: the
//! entropy of the predictive Gaussian mixture minus the mean per-sample
//! Gaussian entropy.
//!
//! Module map:
//!
//! * [`gp`]: squared-exponential kernel, jittered Cholesky, latent posterior
//! * [`warped`]: the parabolic warp and its linearised predictive
//! * [`hyper`]: whitened priors, likelihood, elliptical slice sampling
//! * [`entropy`]: Gaussian-mixture entropy by quadrature or moment matching
//! * [`acquisition`]: FITBO, FITBO-MM and the EI / PI / UCB baselines
//! * [`bo`]: acquisition maximisation, recommendation, the outer loop, metrics
//! * [`benchmarks`]: Branin, Eggholder and Hartmann-6 on the unit cube

pub mod acquisition;
pub mod benchmarks;
pub mod bo;
pub mod entropy;
pub mod error;
pub mod gp;
pub mod hyper;
pub mod warped;

mod linalg;

pub use error::{FitboError, Result};
