//! Robust Bayesian shrinkage estimation.
//!
//! Empirical-Bayes and full-Bayes hierarchical estimators under Normal,
//! Double-Exponential, Cauchy and Scaled-Beta2-mixture priors, the robust
//! weighted-square losses that induce them, and the 1970 batting-average
//! prediction experiment those estimators are compared on.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`]: player records and the arcsine variance-stabilizing transform.
//! - [`distributions`]: prior families, the Cauchy/Scaled-Beta2 marginals,
//!   quartile matching and sampling.
//! - [`losses`]: robust losses and the optimal estimators they induce.
//! - [`posterior`]: empirical-Bayes fits and one-dimensional posterior expectations.
//! - [`mcmc`]: Gibbs and Metropolis-within-Gibbs samplers for the hierarchical models.
//! - [`models`]: every estimator behind one trait, registered by id.
//! - [`report`]: the comparison table and figure data series.

pub mod dataset;
pub mod distributions;
pub mod error;
pub mod losses;
pub mod mcmc;
pub mod models;
pub mod posterior;
pub mod quadrature;
pub mod report;
pub mod settings;
pub mod special;

pub use error::{Error, Result};
