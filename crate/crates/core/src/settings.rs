//! Run-level configuration shared by every estimator.

use serde::{Deserialize, Serialize};

use crate::dataset::{arcsine_transform_n, DEFAULT_AT_BATS};
use crate::error::{Error, Result};
use crate::mcmc::McmcConfig;

/// Scale on which posterior summaries are turned into batting averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionScale {
    /// Posterior mean of the batting average itself, `E[(sin(mu/sqrt n) + 1)/2]`.
    #[default]
    Average,
    /// Back-transformed posterior mean of `mu`, `inverse_transform(E[mu])`.
    Transformed,
}

/// Where the empirical-Bayes prior is centred.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorCenter {
    /// Mean of the transformed scores.
    #[default]
    Empirical,
    /// A fixed batting average, e.g. a previous season's league average.
    Fixed(f64),
}

impl PriorCenter {
    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("empirical") {
            return Ok(PriorCenter::Empirical);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Validation(format!("prior center `{s}` is neither `empirical` nor a number")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Validation(format!("prior center {v} is outside [0, 1]")));
        }
        Ok(PriorCenter::Fixed(v))
    }

    /// The fixed center on the transformed scale, if any.
    pub fn transformed(&self, at_bats: u32) -> Result<Option<f64>> {
        match *self {
            PriorCenter::Empirical => Ok(None),
            PriorCenter::Fixed(avg) => arcsine_transform_n(avg, at_bats).map(Some),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub at_bats: u32,
    pub prior_center: PriorCenter,
    pub prediction_scale: PredictionScale,
    /// Scale `b` of the Scaled Beta2 hyperprior in Models 6 and 7.
    pub b: f64,
    pub mcmc: McmcConfig,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            at_bats: DEFAULT_AT_BATS,
            prior_center: PriorCenter::Empirical,
            prediction_scale: PredictionScale::Average,
            b: 4.0,
            mcmc: McmcConfig::default(),
        }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        if self.at_bats == 0 {
            return Err(Error::Validation("at_bats must be at least 1".into()));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Validation(format!("b must be positive, got {}", self.b)));
        }
        self.prior_center.transformed(self.at_bats)?;
        self.mcmc.validate()
    }
}
