//! Weighted square losses `w(theta) (delta - theta)^2` and their Bayes rules.
//!
//! Under such a loss the optimal estimate is `E[w theta | x] / E[w | x]`, so a
//! weight reshapes the posterior the same way a change of prior would.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::special::{normal_cdf, normal_ln_pdf, normal_sf};

/// Variance of the Normal in the Cauchy-over-Gaussian weight; it gives that
/// Normal the interquartile range of a standard Cauchy.
pub const MATCHED_GAUSSIAN_VAR: f64 = 2.19;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightedLossSpec {
    SquareLoss,
    /// `w = exp(rate |theta - anchor|)`.
    ExponentialWeight { anchor: f64, rate: f64 },
    /// `w = Cauchy(theta | anchor, 1) / Normal(theta | anchor, gaussian_var)`.
    CauchyOverGaussian { anchor: f64, gaussian_var: f64 },
}

impl WeightedLossSpec {
    pub fn exponential(anchor: f64, rate: f64) -> Result<Self> {
        let spec = WeightedLossSpec::ExponentialWeight { anchor, rate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn cauchy_over_gaussian(anchor: f64) -> Self {
        WeightedLossSpec::CauchyOverGaussian {
            anchor,
            gaussian_var: MATCHED_GAUSSIAN_VAR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (label, v, anchor) = match *self {
            WeightedLossSpec::SquareLoss => return Ok(()),
            WeightedLossSpec::ExponentialWeight { anchor, rate } => ("rate", rate, anchor),
            WeightedLossSpec::CauchyOverGaussian {
                anchor,
                gaussian_var,
            } => ("gaussian_var", gaussian_var, anchor),
        };
        if !anchor.is_finite() {
            return Err(Error::Domain("anchor must be finite".into()));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{label} must be positive, got {v}")));
        }
        Ok(())
    }

    fn anchor(&self) -> Option<f64> {
        match *self {
            WeightedLossSpec::SquareLoss => None,
            WeightedLossSpec::ExponentialWeight { anchor, .. }
            | WeightedLossSpec::CauchyOverGaussian { anchor, .. } => Some(anchor),
        }
    }

    pub fn log_weight(&self, theta: f64) -> f64 {
        match *self {
            WeightedLossSpec::SquareLoss => 0.0,
            WeightedLossSpec::ExponentialWeight { anchor, rate } => rate * (theta - anchor).abs(),
            WeightedLossSpec::CauchyOverGaussian {
                anchor,
                gaussian_var,
            } => {
                let d = theta - anchor;
                let ln_cauchy = -PI.ln() - (d * d).ln_1p();
                let ln_normal = normal_ln_pdf(d / gaussian_var.sqrt()) - 0.5 * gaussian_var.ln();
                ln_cauchy - ln_normal
            }
        }
    }

    pub fn weight(&self, theta: f64) -> f64 {
        self.log_weight(theta).exp()
    }

    pub fn loss(&self, theta: f64, delta: f64) -> f64 {
        let e = theta - delta;
        if e == 0.0 {
            return 0.0;
        }
        self.weight(theta) * e * e
    }
}

/// Bayes estimate under `spec` for a posterior given by its (unnormalized)
/// log density. `center` should be near the posterior bulk (e.g. its mean).
///
/// Integrals are taken against `exp(log w + log p - shift)` so exponential
/// weights never overflow. A weighted posterior whose tails do not decay fast
/// enough for a first moment, or whose quadrature fails, gives
/// [`Error::Divergence`].
pub fn optimal_estimate<F>(spec: &WeightedLossSpec, log_posterior: F, center: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if !center.is_finite() {
        return Err(Error::Domain("center must be finite".into()));
    }
    let log_f = |t: f64| spec.log_weight(t) + log_posterior(t);

    // Tail probe: the weighted density must fall faster than |t|^-3.
    for sign in [-1.0, 1.0] {
        let near = log_f(center + sign * 1e3);
        let far = log_f(center + sign * 1e6);
        if far.is_nan() || near.is_nan() || far > near - 3.0 * 1e3f64.ln() {
            return Err(Error::Divergence(format!(
                "weighted posterior does not decay in the {} tail",
                if sign < 0.0 { "left" } else { "right" }
            )));
        }
    }

    let mut breaks = vec![center];
    breaks.extend(spec.anchor());
    let shift = log_shift(&log_f, &breaks);

    let quad = Quadrature::new(1e-11, 0.0);
    let diverged = |e: Error| match e {
        Error::Quadrature {
            estimate,
            achieved_error,
        } => Error::Divergence(format!(
            "weighted posterior expectation failed to converge (estimate {estimate}, error {achieved_error})"
        )),
        other => other,
    };
    let den = quad
        .integrate_with_breaks(|t| (log_f(t) - shift).exp(), f64::NEG_INFINITY, f64::INFINITY, &breaks)
        .map_err(diverged)?
        .value;
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::Divergence(format!("normalizing integral is {den}")));
    }
    let num = Quadrature::new(1e-10, 1e-13 * den)
        .integrate_with_breaks(
            |t| (t - center) * (log_f(t) - shift).exp(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &breaks,
        )
        .map_err(diverged)?
        .value;
    Ok(center + num / den)
}

/// A value near the maximum of `log_f`, so `exp(log_f - shift)` stays in range.
pub(crate) fn log_shift<F: Fn(f64) -> f64>(log_f: &F, anchors: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut consider = |t: f64| {
        let v = log_f(t);
        if v.is_finite() && v > best {
            best = v;
        }
    };
    for &a in anchors {
        consider(a);
        for j in -6..8 {
            let step = 2f64.powi(j);
            consider(a - step);
            consider(a + step);
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// Closed-form Bayes estimate under `exp(rate |theta - anchor|)` weighting for
/// a `Normal(mean, var)` posterior.
///
/// With `s = sqrt(var)`:
///
/// ```text
/// a  = exp(r (M - mu) + v r^2 / 2)   b  = Phi((M - (mu - r v)) / s)   c  = s phi(same)
/// a' = exp(r (mu - M) + v r^2 / 2)   b' = Phi((M - (mu + r v)) / s)   c' = s phi(same)
/// delta = (a [b (mu - r v) - c] + a' [c' + (1 - b') (mu + r v)]) / (a b + a' (1 - b'))
/// ```
///
/// The common factor `exp(v r^2 / 2 + r |M - mu|)` is cancelled before
/// exponentiating.
pub fn exp_loss_estimator(mean: f64, var: f64, anchor: f64, rate: f64) -> Result<f64> {
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::Domain(format!("posterior variance must be positive, got {var}")));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Domain(format!("rate must be positive, got {rate}")));
    }
    if !mean.is_finite() || !anchor.is_finite() {
        return Err(Error::Domain("mean and anchor must be finite".into()));
    }
    let s = var.sqrt();
    let gap = rate * (anchor - mean).abs();
    let a = (rate * (anchor - mean) - gap).exp();
    let a2 = (rate * (mean - anchor) - gap).exp();
    let z1 = (anchor - (mean - rate * var)) / s;
    let z2 = (anchor - (mean + rate * var)) / s;
    let b = normal_cdf(z1);
    let c = s * normal_ln_pdf(z1).exp();
    let b2_upper = normal_sf(z2);
    let c2 = s * normal_ln_pdf(z2).exp();

    let num = a * (b * (mean - rate * var) - c) + a2 * (c2 + b2_upper * (mean + rate * var));
    let den = a * b + a2 * b2_upper;
    let delta = num / den;
    if !delta.is_finite() {
        return Err(Error::Divergence(format!(
            "exponential-loss estimate is not finite (numerator {num}, denominator {den})"
        )));
    }
    Ok(delta)
}
