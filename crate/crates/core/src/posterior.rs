//! Empirical-Bayes hyperparameters and one-dimensional posterior expectations
//! for a unit-variance Normal likelihood.

use serde::{Deserialize, Serialize};

use crate::dataset::{inverse_transform_n, transformed_scores, PlayerRecord};
use crate::distributions::{match_quartiles, PriorSpec, QuartileFamily};
use crate::error::{Error, Result};
use crate::losses::log_shift;
use crate::models::{ModelResult, Prediction};
use crate::quadrature::Quadrature;
use crate::settings::{PredictionScale, RunSettings};

/// Prior location and variance fitted from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub location: f64,
    pub sigma0_sq: f64,
    /// Prior precision `1 / sigma0_sq`.
    pub tau: f64,
    /// Shrinkage proportion `1 / (1 + sigma0_sq)`.
    pub shrink_c: f64,
}

impl HyperParams {
    pub fn from_shrinkage(location: f64, shrink_c: f64) -> Self {
        let sigma0_sq = 1.0 / shrink_c - 1.0;
        Self {
            location,
            sigma0_sq,
            tau: 1.0 / sigma0_sq,
            shrink_c,
        }
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0_sq.sqrt()
    }
}

fn check_len(xs: &[f64], needed: usize) -> Result<()> {
    if xs.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: xs.len(),
        });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("scores must be finite".into()));
    }
    Ok(())
}

/// `M = mean(x)`, `1 / (1 + sigma0^2) = (k - 3) / sum (x - M)^2`.
pub fn fit_empirical_hyperparams(xs: &[f64]) -> Result<HyperParams> {
    check_len(xs, 4)?;
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    shrinkage_fit(xs, mean, k - 3.0)
}

/// As [`fit_empirical_hyperparams`] with the location fixed in advance;
/// one more degree of freedom is left, so the proportion is `(k - 2) / S`.
pub fn fit_fixed_center_hyperparams(xs: &[f64], location: f64) -> Result<HyperParams> {
    check_len(xs, 3)?;
    if !location.is_finite() {
        return Err(Error::Domain("location must be finite".into()));
    }
    shrinkage_fit(xs, location, xs.len() as f64 - 2.0)
}

fn shrinkage_fit(xs: &[f64], location: f64, dof: f64) -> Result<HyperParams> {
    let sum_sq: f64 = xs.iter().map(|x| (x - location).powi(2)).sum();
    if sum_sq <= dof {
        return Err(Error::DegenerateVariance {
            sum_sq,
            threshold: dof,
        });
    }
    Ok(HyperParams::from_shrinkage(location, dof / sum_sq))
}

/// `x + c (M - x)`.
pub fn posterior_mean_normal(x: f64, hp: &HyperParams) -> f64 {
    x + hp.shrink_c * (hp.location - x)
}

/// `E[(sin(mu / sqrt n) + 1) / 2]` for `mu ~ Normal(mean, var)`.
pub fn normal_average_mean(mean: f64, var: f64, at_bats: u32) -> f64 {
    let n = f64::from(at_bats);
    (((mean / n.sqrt()).sin() * (-var / (2.0 * n)).exp()) + 1.0) / 2.0
}

/// Posterior of `mu` given one observation `x ~ Normal(mu, 1)` and a prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorProblem {
    pub x: f64,
    pub prior: PriorSpec,
    quad: Quadrature,
}

impl PosteriorProblem {
    pub fn new(x: f64, prior: PriorSpec) -> Result<Self> {
        prior.validate()?;
        if !x.is_finite() {
            return Err(Error::Domain("observation must be finite".into()));
        }
        Ok(Self {
            x,
            prior,
            quad: Quadrature::new(1e-9, 0.0),
        })
    }

    /// Replace the quadrature settings (tolerance, refinement limit).
    pub fn with_quadrature(mut self, quad: Quadrature) -> Self {
        self.quad = quad;
        self
    }

    pub fn log_unnormalized(&self, mu: f64) -> f64 {
        let r = self.x - mu;
        -0.5 * r * r + self.prior.ln_density(mu)
    }

    fn breaks(&self) -> Vec<f64> {
        let mut b = self.prior.breakpoints();
        b.push(self.x);
        b
    }

    /// `E[g(mu) | x]`; `g` should be bounded by a polynomial.
    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let breaks = self.breaks();
        let lf = |m: f64| self.log_unnormalized(m);
        // Scan between the likelihood and prior centres, avoiding a pole.
        let (lo, hi) = (self.x.min(self.prior.location()), self.x.max(self.prior.location()));
        let mut anchors: Vec<f64> = (1..64).map(|i| lo + (hi - lo) * i as f64 / 64.0).collect();
        anchors.push(self.x);
        if !self.prior.has_pole() {
            anchors.push(self.prior.location());
        }
        let shift = log_shift(&lf, &anchors);
        let density = |m: f64| {
            let v = (lf(m) - shift).exp();
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        let lo_lim = self.prior.support_min();
        let den = self
            .quad
            .integrate_with_breaks(density, lo_lim, f64::INFINITY, &breaks)?
            .value;
        let num = Quadrature {
            abs_tol: self.quad.rel_tol * 1e-3 * den,
            ..self.quad
        }
        .integrate_with_breaks(|m| g(m) * density(m), lo_lim, f64::INFINITY, &breaks)?
        .value;
        Ok(num / den)
    }

    /// `E[mu | x]`, integrated as `x + E[mu - x]` so the tolerance is absolute
    /// on the scale of the observation.
    pub fn posterior_mean(&self) -> Result<f64> {
        let x = self.x;
        Ok(x + self.expectation(|m| m - x)?)
    }

    /// Posterior mean of the batting average `(sin(mu / sqrt n) + 1) / 2`.
    pub fn average_mean(&self, at_bats: u32) -> Result<f64> {
        self.expectation(|m| inverse_transform_n(m, at_bats))
    }
}

/// Shorthand for [`PosteriorProblem::posterior_mean`].
pub fn posterior_mean_quadrature(x: f64, prior: PriorSpec) -> Result<f64> {
    PosteriorProblem::new(x, prior)?.posterior_mean()
}

/// The three empirical-Bayes models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EbModel {
    /// Normal prior.
    Normal,
    /// Double-exponential prior, quartile-matched.
    DoubleExponential,
    /// Cauchy prior, quartile-matched.
    Cauchy,
}

impl EbModel {
    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(EbModel::Normal),
            2 => Some(EbModel::DoubleExponential),
            3 => Some(EbModel::Cauchy),
            _ => None,
        }
    }

    pub fn id(&self) -> u8 {
        match self {
            EbModel::Normal => 1,
            EbModel::DoubleExponential => 2,
            EbModel::Cauchy => 3,
        }
    }

    pub fn prior(&self, hp: &HyperParams) -> Result<PriorSpec> {
        let sigma0 = hp.sigma0();
        match self {
            EbModel::Normal => PriorSpec::normal(hp.location, sigma0),
            EbModel::DoubleExponential => PriorSpec::double_exponential(
                hp.location,
                match_quartiles(sigma0, QuartileFamily::DoubleExponential)?,
            ),
            EbModel::Cauchy => PriorSpec::cauchy(
                hp.location,
                match_quartiles(sigma0, QuartileFamily::Cauchy)?,
            ),
        }
    }
}

/// Hyperparameters according to the configured prior centre.
pub fn fit_for_settings(xs: &[f64], settings: &RunSettings) -> Result<HyperParams> {
    match settings.prior_center.transformed(settings.at_bats)? {
        None => fit_empirical_hyperparams(xs),
        Some(center) => fit_fixed_center_hyperparams(xs, center),
    }
}

/// Per-player batting-average predictions under an empirical-Bayes model.
pub fn eb_predictions(model: EbModel, xs: &[f64], settings: &RunSettings) -> Result<Vec<f64>> {
    let hp = fit_for_settings(xs, settings)?;
    let prior = model.prior(&hp)?;
    let n = settings.at_bats;
    xs.iter()
        .map(|&x| match (model, settings.prediction_scale) {
            (EbModel::Normal, scale) => {
                let mean = posterior_mean_normal(x, &hp);
                Ok(match scale {
                    PredictionScale::Average => normal_average_mean(mean, 1.0 - hp.shrink_c, n),
                    PredictionScale::Transformed => inverse_transform_n(mean, n),
                })
            }
            (_, PredictionScale::Average) => PosteriorProblem::new(x, prior)?.average_mean(n),
            (_, PredictionScale::Transformed) => {
                Ok(inverse_transform_n(posterior_mean_quadrature(x, prior)?, n))
            }
        })
        .collect()
}

pub fn predict_eb_model(
    model: EbModel,
    players: &[PlayerRecord],
    settings: &RunSettings,
) -> Result<ModelResult> {
    let xs = transformed_scores(players, settings.at_bats);
    let preds = eb_predictions(model, &xs, settings)?;
    ModelResult::new(model.id().to_string(), players, preds, settings.clone())
}

/// Mean squared error of predictions against the remainder averages.
pub fn mse(predictions: &[f64], players: &[PlayerRecord]) -> Result<f64> {
    if predictions.len() != players.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: players.len(),
        });
    }
    if players.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let sum: f64 = predictions
        .iter()
        .zip(players)
        .map(|(p, r)| (p - r.remainder_avg).powi(2))
        .sum();
    Ok(sum / players.len() as f64)
}

/// Pairs predictions with player names.
pub fn label_predictions(players: &[PlayerRecord], preds: &[f64]) -> Vec<Prediction> {
    players
        .iter()
        .zip(preds)
        .map(|(p, &estimate)| Prediction {
            player: p.name.clone(),
            estimate,
        })
        .collect()
}
