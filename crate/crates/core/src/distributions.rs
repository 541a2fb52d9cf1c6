//! Prior families: densities, CDFs, quantiles, sampling and quartile matching.
//!
//! Parameterizations:
//!
//! | family | density |
//! |---|---|
//! | `Normal(M, s)` | `N(M, s^2)` |
//! | `DoubleExponential(M, nu)` | `1/(nu sqrt2) exp(-sqrt2 |t-M| / nu)`, so `nu` is the standard deviation |
//! | `Cauchy(M, g)` | `1/(pi g) / (1 + ((t-M)/g)^2)` |
//! | `ScaledBeta2(p, q, b)` | `G(p+q)/(G(p)G(q)) (1/b) (t/b)^(p-1) / (1+t/b)^(p+q)`, `t > 0` |
//! | `CauchyScaledBeta2(M, b)` | marginal of `Cauchy(M, s)` with `s ~ ScaledBeta2(1,1,b)` |
//! | `CauchyScale2Beta2(M, b)` | marginal of `Cauchy(M, s)` with `s^2 ~ ScaledBeta2(1,1,b)` |

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::special::{normal_cdf, normal_quantile, normal_upper_quartile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorSpec {
    Normal { location: f64, scale: f64 },
    DoubleExponential { location: f64, scale: f64 },
    Cauchy { location: f64, scale: f64 },
    ScaledBeta2 { p: f64, q: f64, scale: f64 },
    CauchyScaledBeta2 { location: f64, scale: f64 },
    CauchyScale2Beta2 { location: f64, scale: f64 },
}

impl PriorSpec {
    pub fn normal(location: f64, scale: f64) -> Result<Self> {
        PriorSpec::Normal { location, scale }.validated()
    }

    pub fn double_exponential(location: f64, scale: f64) -> Result<Self> {
        PriorSpec::DoubleExponential { location, scale }.validated()
    }

    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        PriorSpec::Cauchy { location, scale }.validated()
    }

    pub fn scaled_beta2(p: f64, q: f64, scale: f64) -> Result<Self> {
        PriorSpec::ScaledBeta2 { p, q, scale }.validated()
    }

    pub fn cauchy_scaled_beta2(location: f64, scale: f64) -> Result<Self> {
        PriorSpec::CauchyScaledBeta2 { location, scale }.validated()
    }

    pub fn cauchy_scale2_beta2(location: f64, scale: f64) -> Result<Self> {
        PriorSpec::CauchyScale2Beta2 { location, scale }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate().map(|_| self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |label: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{label} must be positive and finite, got {v}")))
            }
        };
        match *self {
            PriorSpec::ScaledBeta2 { p, q, scale } => {
                positive("shape p", p)?;
                positive("shape q", q)?;
                positive("scale", scale)
            }
            _ => {
                if !self.location().is_finite() {
                    return Err(Error::Domain("location must be finite".into()));
                }
                positive("scale", self.scale())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PriorSpec::Normal { .. } => "normal",
            PriorSpec::DoubleExponential { .. } => "double_exponential",
            PriorSpec::Cauchy { .. } => "cauchy",
            PriorSpec::ScaledBeta2 { .. } => "scaled_beta2",
            PriorSpec::CauchyScaledBeta2 { .. } => "cauchy_scaled_beta2",
            PriorSpec::CauchyScale2Beta2 { .. } => "cauchy_scale2_beta2",
        }
    }

    /// Location parameter; `0` for the Scaled Beta2 family.
    pub fn location(&self) -> f64 {
        match *self {
            PriorSpec::Normal { location, .. }
            | PriorSpec::DoubleExponential { location, .. }
            | PriorSpec::Cauchy { location, .. }
            | PriorSpec::CauchyScaledBeta2 { location, .. }
            | PriorSpec::CauchyScale2Beta2 { location, .. } => location,
            PriorSpec::ScaledBeta2 { .. } => 0.0,
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            PriorSpec::Normal { scale, .. }
            | PriorSpec::DoubleExponential { scale, .. }
            | PriorSpec::Cauchy { scale, .. }
            | PriorSpec::ScaledBeta2 { scale, .. }
            | PriorSpec::CauchyScaledBeta2 { scale, .. }
            | PriorSpec::CauchyScale2Beta2 { scale, .. } => scale,
        }
    }

    /// Lower end of the support.
    pub fn support_min(&self) -> f64 {
        match self {
            PriorSpec::ScaledBeta2 { .. } => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    /// True when the density is unbounded at the location.
    pub fn has_pole(&self) -> bool {
        matches!(self, PriorSpec::CauchyScaledBeta2 { .. })
    }

    /// Points where the density is non-smooth or singular; quadrature
    /// callers should split panels there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PriorSpec::ScaledBeta2 { .. } => vec![0.0],
            _ => vec![self.location()],
        }
    }

    /// Log density without argument checks; `-inf` outside the support.
    /// Used on hot paths (MCMC); assumes a validated spec.
    pub fn ln_density(&self, t: f64) -> f64 {
        match *self {
            PriorSpec::Normal { location, scale } => {
                let z = (t - location) / scale;
                -0.5 * z * z - scale.ln() - 0.5 * (2.0 * PI).ln()
            }
            PriorSpec::DoubleExponential { location, scale } => {
                let rate = SQRT_2 / scale;
                (0.5 * rate).ln() - rate * (t - location).abs()
            }
            PriorSpec::Cauchy { location, scale } => {
                let z = (t - location) / scale;
                -(PI * scale).ln() - (z * z).ln_1p()
            }
            PriorSpec::ScaledBeta2 { p, q, scale } => {
                if t <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let r = t / scale;
                ln_gamma(p + q) - ln_gamma(p) - ln_gamma(q) - scale.ln() + (p - 1.0) * r.ln()
                    - (p + q) * r.ln_1p()
            }
            PriorSpec::CauchyScaledBeta2 { location, scale } => {
                cauchy_scbeta2_value(t - location, scale).ln()
            }
            PriorSpec::CauchyScale2Beta2 { location, scale } => {
                let rb = scale.sqrt();
                -(2.0 * rb).ln() - 2.0 * ((t - location).abs() / rb).ln_1p()
            }
        }
    }

    /// Probability density at `t`.
    ///
    /// Errors when `t` is not finite or lies outside the family's support.
    /// The Cauchy-Scaled-Beta2 density is `+inf` at its location.
    pub fn density(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !t.is_finite() {
            return Err(Error::Domain(format!("density argument {t} is not finite")));
        }
        if let PriorSpec::ScaledBeta2 { .. } = self {
            if t <= 0.0 {
                return Err(Error::Domain(format!(
                    "scaled beta2 support is t > 0, got {t}"
                )));
            }
        }
        Ok(self.ln_density(t).exp())
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if t.is_nan() {
            return Err(Error::Domain("cdf argument is NaN".into()));
        }
        Ok(match *self {
            PriorSpec::Normal { location, scale } => normal_cdf((t - location) / scale),
            PriorSpec::DoubleExponential { location, scale } => {
                let d = (t - location) * SQRT_2 / scale;
                if d < 0.0 {
                    0.5 * d.exp()
                } else {
                    1.0 - 0.5 * (-d).exp()
                }
            }
            PriorSpec::Cauchy { location, scale } => 0.5 + ((t - location) / scale).atan() / PI,
            PriorSpec::ScaledBeta2 { p, q, scale } => {
                if t <= 0.0 {
                    0.0
                } else if t.is_infinite() {
                    1.0
                } else {
                    beta_reg(p, q, t / (t + scale))
                }
            }
            PriorSpec::CauchyScale2Beta2 { location, scale } => {
                let d = t - location;
                let tail = 0.5 / (1.0 + d.abs() / scale.sqrt());
                if d < 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            PriorSpec::CauchyScaledBeta2 { location, scale } => {
                let d = t - location;
                if d.is_infinite() {
                    return Ok(if d > 0.0 { 1.0 } else { 0.0 });
                }
                let quad = Quadrature::new(1e-12, 1e-15);
                let f = |u: f64| cauchy_scbeta2_value(u, scale);
                let tail = quad.integrate(f, d.abs(), f64::INFINITY)?.value;
                if d < 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
        })
    }

    pub fn quantile(&self, prob: f64) -> Result<f64> {
        self.validate()?;
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::Domain(format!("probability {prob} outside [0, 1]")));
        }
        let loc = self.location();
        Ok(match *self {
            PriorSpec::Normal { location, scale } => location + scale * normal_quantile(prob),
            PriorSpec::DoubleExponential { location, scale } => {
                let rate = SQRT_2 / scale;
                if prob < 0.5 {
                    location + (2.0 * prob).ln() / rate
                } else {
                    location - (2.0 * (1.0 - prob)).ln() / rate
                }
            }
            PriorSpec::Cauchy { location, scale } => location + scale * (PI * (prob - 0.5)).tan(),
            PriorSpec::ScaledBeta2 { p, q, scale } if p == 1.0 && q == 1.0 => {
                scale * prob / (1.0 - prob)
            }
            PriorSpec::CauchyScale2Beta2 { location, scale } => {
                let tail = prob.min(1.0 - prob);
                let d = scale.sqrt() * (0.5 / tail - 1.0);
                if prob < 0.5 {
                    location - d
                } else {
                    location + d
                }
            }
            _ => {
                if prob == 0.0 {
                    return Ok(self.support_min());
                }
                if prob == 1.0 {
                    return Ok(f64::INFINITY);
                }
                let s = self.scale();
                let (mut lo, mut hi) = match self {
                    PriorSpec::ScaledBeta2 { .. } => (0.0, s),
                    _ => (loc - s, loc + s),
                };
                while self.cdf(lo)? > prob {
                    lo = loc - 2.0 * (loc - lo).abs().max(s);
                }
                while self.cdf(hi)? < prob {
                    hi = loc + 2.0 * (hi - loc).abs().max(s);
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.cdf(mid)? < prob {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        })
    }

    /// One draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PriorSpec::Normal { location, scale } => {
                let z: f64 = StandardNormal.sample(rng);
                location + scale * z
            }
            PriorSpec::DoubleExponential { location, scale } => {
                let b = scale / SQRT_2;
                let u: f64 = rng.random::<f64>() - 0.5;
                location - b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            PriorSpec::Cauchy { location, scale } => {
                let u: f64 = rng.random();
                location + scale * (PI * (u - 0.5)).tan()
            }
            PriorSpec::ScaledBeta2 { p, q, scale } => {
                let g1 = Gamma::new(p, 1.0).expect("validated shape").sample(rng);
                let g2 = Gamma::new(q, 1.0).expect("validated shape").sample(rng);
                scale * g1 / g2
            }
            PriorSpec::CauchyScaledBeta2 { location, scale } => {
                let sigma = PriorSpec::ScaledBeta2 { p: 1.0, q: 1.0, scale }.draw(rng);
                PriorSpec::Cauchy { location, scale: sigma }.draw(rng)
            }
            PriorSpec::CauchyScale2Beta2 { location, scale } => {
                let var = PriorSpec::ScaledBeta2 { p: 1.0, q: 1.0, scale }.draw(rng);
                PriorSpec::Cauchy {
                    location,
                    scale: var.sqrt(),
                }
                .draw(rng)
            }
        }
    }

    /// `n` i.i.d. draws. The two Cauchy-Beta2 marginals are sampled through
    /// their scale mixtures.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        Ok((0..n).map(|_| self.draw(rng)).collect())
    }
}

/// Result 3 density value for offset `d` from the location. `+inf` at `d = 0`.
fn cauchy_scbeta2_value(d: f64, b: f64) -> f64 {
    let a = d.abs();
    if a == 0.0 {
        return f64::INFINITY;
    }
    if a.is_infinite() {
        return 0.0;
    }
    let v = a / b;
    if v <= 1.0 {
        // b^2 factored out of the bracket.
        let bracket = -(1.0 + v * v - PI * v) - (1.0 - v * v) * v.ln();
        bracket / (PI * b * (1.0 + v * v).powi(2))
    } else {
        // theta^2 factored out; avoids theta^4 overflow and cancellation.
        let u = b / a;
        let bracket = -(1.0 + u * u - PI * u) + (u * u - 1.0) * u.ln();
        (u / b) * u * bracket / (PI * (1.0 + u * u).powi(2))
    }
}

/// Marginal density of `theta` when `theta | s ~ Cauchy(0, s)` and
/// `s ~ ScaledBeta2(1, 1, b)`:
///
/// `b / (pi (b^2+t^2)^2) * [-(b^2 + t^2 - pi b |t|) + (b-t)(b+t)(log b - log|t|)]`
///
/// Evaluated in scaled form so it stays finite and accurate for
/// `1e-300 <= |theta| <= 1e300`. The pole at `theta = 0` returns `+inf`.
pub fn cauchy_scbeta2_density(theta: f64, b: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("b must be positive, got {b}")));
    }
    if theta.is_nan() {
        return Err(Error::Domain("theta is NaN".into()));
    }
    Ok(cauchy_scbeta2_value(theta, b))
}

/// Marginal density of `theta` when `theta | s ~ Cauchy(mu, s)` and
/// `s^2 ~ ScaledBeta2(1, 1, b)`: `1 / (2 sqrt(b) (1 + |theta - mu| / sqrt(b))^2)`.
pub fn cauchy_s2beta2_density(theta: f64, mu: f64, b: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("b must be positive, got {b}")));
    }
    if theta.is_nan() || mu.is_nan() {
        return Err(Error::Domain("argument is NaN".into()));
    }
    let rb = b.sqrt();
    let r = 1.0 + (theta - mu).abs() / rb;
    Ok(1.0 / (2.0 * rb * r * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuartileFamily {
    DoubleExponential,
    Cauchy,
}

/// Scale giving the same quartiles as `Normal(M, sigma0^2)`.
///
/// Double exponential: `nu0 = sqrt2 sigma0 Phi^-1(0.75) / log 2`.
/// Cauchy: `gamma0 = sigma0 Phi^-1(0.75)`.
pub fn match_quartiles(sigma0: f64, family: QuartileFamily) -> Result<f64> {
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::Domain(format!("sigma0 must be positive, got {sigma0}")));
    }
    let z = normal_upper_quartile();
    Ok(match family {
        QuartileFamily::DoubleExponential => SQRT_2 * sigma0 * z / std::f64::consts::LN_2,
        QuartileFamily::Cauchy => sigma0 * z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn quad() -> Quadrature {
        Quadrature::new(1e-12, 1e-15)
    }

    // Independent route for Result 3: the mixture integrand itself.
    fn r3_mixture(theta: f64, b: f64) -> f64 {
        let f = |s: f64| b * s / (PI * (b + s).powi(2) * (theta * theta + s * s));
        quad()
            .integrate_with_breaks(f, 0.0, f64::INFINITY, &[theta.abs(), b])
            .unwrap()
            .value
    }

    // Result 4 mixture: theta | s ~ Cauchy(mu, s), s^2 = w ~ ScBeta2(1, 1, b).
    fn r4_mixture(theta: f64, mu: f64, b: f64) -> f64 {
        let d2 = (theta - mu).powi(2);
        let f = |w: f64| w.sqrt() / (PI * (w + d2)) * b / (b + w).powi(2);
        quad()
            .integrate_with_breaks(f, 0.0, f64::INFINITY, &[d2, b])
            .unwrap()
            .value
    }

    #[test]
    fn density_examples() {
        let c = PriorSpec::cauchy(0.0, 1.0).unwrap();
        assert!((c.density(0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        let de = PriorSpec::double_exponential(0.0, SQRT_2).unwrap();
        assert!((de.density(0.0).unwrap() - 0.5).abs() < 1e-15);
        let sb = PriorSpec::scaled_beta2(1.0, 1.0, 4.0).unwrap();
        assert!((sb.ln_density(0.0 + f64::MIN_POSITIVE).exp() - 0.25).abs() < 1e-12);
        let sb1 = PriorSpec::scaled_beta2(1.0, 1.0, 1.0).unwrap();
        assert!((sb1.density(1.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn density_domain_errors() {
        let sb = PriorSpec::scaled_beta2(1.0, 1.0, 4.0).unwrap();
        assert!(sb.density(-1.0).is_err());
        assert!(sb.density(0.0).is_err());
        let n = PriorSpec::normal(0.0, 1.0).unwrap();
        assert!(n.density(f64::NAN).is_err());
        assert!(n.density(f64::INFINITY).is_err());
        assert!(PriorSpec::normal(0.0, -1.0).is_err());
        assert!(PriorSpec::scaled_beta2(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn every_family_normalizes() {
        let specs = [
            PriorSpec::normal(-3.3, 0.5).unwrap(),
            PriorSpec::normal(2.0, 7.0).unwrap(),
            PriorSpec::double_exponential(-3.3, 0.7).unwrap(),
            PriorSpec::double_exponential(1.0, 5.0).unwrap(),
            PriorSpec::cauchy(0.0, 0.35).unwrap(),
            PriorSpec::cauchy(4.0, 3.0).unwrap(),
            PriorSpec::scaled_beta2(1.0, 1.0, 4.0).unwrap(),
            PriorSpec::scaled_beta2(2.5, 1.5, 0.7).unwrap(),
            PriorSpec::scaled_beta2(0.5, 3.0, 2.0).unwrap(),
            PriorSpec::cauchy_scaled_beta2(0.0, 1.0).unwrap(),
            PriorSpec::cauchy_scaled_beta2(-1.0, 4.0).unwrap(),
            PriorSpec::cauchy_scale2_beta2(0.0, 4.0).unwrap(),
            PriorSpec::cauchy_scale2_beta2(2.0, 0.3).unwrap(),
        ];
        let q = Quadrature::new(1e-10, 1e-14);
        for spec in specs {
            let mass = q
                .integrate_with_breaks(
                    |t| spec.ln_density(t).exp(),
                    spec.support_min(),
                    f64::INFINITY,
                    &spec.breakpoints(),
                )
                .unwrap()
                .value;
            assert!((mass - 1.0).abs() < 1e-6, "{spec:?}: {mass}");
        }
    }

    #[test]
    fn result3_examples() {
        let v = cauchy_scbeta2_density(1.0, 1.0).unwrap();
        assert!((v - (PI - 2.0) / (4.0 * PI)).abs() < 1e-15);
        assert!((v - r3_mixture(1.0, 1.0)).abs() < 1e-12);
        for t in [0.3, 2.0, 50.0] {
            assert_eq!(
                cauchy_scbeta2_density(t, 1.0).unwrap(),
                cauchy_scbeta2_density(-t, 1.0).unwrap()
            );
        }
        assert!(
            cauchy_scbeta2_density(1e-6, 1.0).unwrap() > cauchy_scbeta2_density(1e-3, 1.0).unwrap()
        );
        assert_eq!(cauchy_scbeta2_density(0.0, 1.0).unwrap(), f64::INFINITY);
        assert!(cauchy_scbeta2_density(1.0, 0.0).is_err());
        assert!(cauchy_scbeta2_density(1.0, -2.0).is_err());
    }

    #[test]
    fn result3_matches_mixture_on_grid() {
        for b in [0.5, 1.0, 4.0] {
            for i in 0..50 {
                let t = 10f64.powf(-3.0 + 6.0 * i as f64 / 49.0);
                let closed = cauchy_scbeta2_density(t, b).unwrap();
                let mix = r3_mixture(t, b);
                assert!((closed - mix).abs() < 1e-8, "b={b} t={t}: {closed} vs {mix}");
            }
        }
    }

    #[test]
    fn result3_extreme_arguments_are_finite() {
        for t in [1e-300, 1e-100, 1e-15, 1e8, 1e100, 1e300] {
            let v = cauchy_scbeta2_density(t, 1.0).unwrap();
            assert!(v.is_finite() && v >= 0.0, "t={t}: {v}");
        }
        assert!(cauchy_scbeta2_density(1e-300, 1.0).unwrap() > 200.0);
        // Large-|theta| form agrees with the leading terms of the expansion
        // (log(t/b) - 1 + pi b/t) b / (pi t^2).
        let t: f64 = 1e9;
        let approx = (t.ln() - 1.0 + PI / t) / (PI * t * t);
        let v = cauchy_scbeta2_density(t, 1.0).unwrap();
        assert!((v / approx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn result4_examples() {
        assert!((cauchy_s2beta2_density(1.7, 1.7, 4.0).unwrap() - 0.25).abs() < 1e-15);
        let closed = cauchy_s2beta2_density(3.0, 0.0, 4.0).unwrap();
        assert!((closed - 0.04).abs() < 1e-15);
        assert!((closed - r4_mixture(3.0, 0.0, 4.0)).abs() < 1e-8);
        assert!(cauchy_s2beta2_density(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn result4_mixture_grid() {
        for b in [0.3, 1.0, 4.0, 9.0] {
            for i in 0..25 {
                let t = -12.0 + i as f64;
                let closed = cauchy_s2beta2_density(t, 0.5, b).unwrap();
                let mix = r4_mixture(t, 0.5, b);
                assert!((closed - mix).abs() < 1e-8, "b={b} t={t}");
            }
        }
    }

    #[test]
    fn quartile_matching_values() {
        let g = match_quartiles(1.0, QuartileFamily::Cauchy).unwrap();
        assert!((g - 0.674_489_750_196_081_7).abs() < 1e-12);
        let nu = match_quartiles(1.0, QuartileFamily::DoubleExponential).unwrap();
        // sqrt2 * 0.6744897501960817 / ln 2
        assert!((nu - 1.376_147_201_000_475).abs() < 1e-9, "{nu}");
        assert!(match_quartiles(0.0, QuartileFamily::Cauchy).is_err());
    }

    // Bisection on the CDF, independent of the closed-form quantiles.
    fn cdf_root(spec: &PriorSpec, p: f64) -> f64 {
        let (mut lo, mut hi) = (spec.location() - 100.0, spec.location() + 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if spec.cdf(mid).unwrap() < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn matched_priors_share_normal_quartiles() {
        for sigma0 in [0.3, 1.0, 2.5] {
            let m = -3.3;
            let target = sigma0 * normal_upper_quartile();
            let de = PriorSpec::double_exponential(
                m,
                match_quartiles(sigma0, QuartileFamily::DoubleExponential).unwrap(),
            )
            .unwrap();
            let c =
                PriorSpec::cauchy(m, match_quartiles(sigma0, QuartileFamily::Cauchy).unwrap())
                    .unwrap();
            let n = PriorSpec::normal(m, sigma0).unwrap();
            for spec in [de, c, n] {
                let upper = cdf_root(&spec, 0.75) - m;
                let lower = m - cdf_root(&spec, 0.25);
                assert!((upper - target).abs() < 1e-10, "{spec:?}");
                assert!((lower - target).abs() < 1e-10, "{spec:?}");
            }
            let iqr_n = n.quantile(0.75).unwrap() - n.quantile(0.25).unwrap();
            let iqr_de = de.quantile(0.75).unwrap() - de.quantile(0.25).unwrap();
            assert!((iqr_n - iqr_de).abs() < 1e-10);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let specs = [
            PriorSpec::scaled_beta2(2.0, 3.0, 1.5).unwrap(),
            PriorSpec::cauchy_scaled_beta2(0.5, 1.0).unwrap(),
            PriorSpec::cauchy_scale2_beta2(0.5, 4.0).unwrap(),
            PriorSpec::scaled_beta2(1.0, 1.0, 4.0).unwrap(),
        ];
        for spec in specs {
            for p in [0.1, 0.25, 0.5, 0.75, 0.9] {
                let x = spec.quantile(p).unwrap();
                assert!((spec.cdf(x).unwrap() - p).abs() < 1e-9, "{spec:?} p={p}");
            }
        }
    }

    #[test]
    fn normal_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let xs = PriorSpec::normal(0.0, 1.0).unwrap().sample(&mut rng, n).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = PriorSpec::cauchy_scaled_beta2(0.0, 1.0).unwrap();
        let a = spec.sample(&mut ChaCha8Rng::seed_from_u64(3), 50).unwrap();
        let b = spec.sample(&mut ChaCha8Rng::seed_from_u64(3), 50).unwrap();
        assert_eq!(a, b);
        assert!(spec.sample(&mut ChaCha8Rng::seed_from_u64(3), 0).is_err());
    }

    #[test]
    fn scbeta2_sample_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = 4.0;
        let mut xs = PriorSpec::scaled_beta2(1.0, 1.0, b)
            .unwrap()
            .sample(&mut rng, 100_000)
            .unwrap();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let f = y / (y + b);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS = {ks}");
    }

    #[test]
    fn double_exponential_sample_quartiles() {
        let spec = PriorSpec::double_exponential(1.0, 2.0).unwrap();
        let mut xs = spec.sample(&mut ChaCha8Rng::seed_from_u64(8), 100_000).unwrap();
        xs.sort_by(f64::total_cmp);
        let q1 = xs[25_000];
        let q3 = xs[75_000];
        assert!((q1 - spec.quantile(0.25).unwrap()).abs() < 0.03);
        assert!((q3 - spec.quantile(0.75).unwrap()).abs() < 0.03);
    }

    #[test]
    fn cauchy_scbeta2_mixture_sample_chi_square() {
        let b = 1.0;
        let spec = PriorSpec::cauchy_scaled_beta2(0.0, b).unwrap();
        let n = 100_000;
        let xs = spec.sample(&mut ChaCha8Rng::seed_from_u64(21), n).unwrap();
        // Bins symmetric about the pole; the outer bins absorb the tails.
        let edges = [
            f64::NEG_INFINITY, -10.0, -3.0, -1.0, -0.5, -0.2, -0.05, 0.0, 0.05, 0.2, 0.5, 1.0,
            3.0, 10.0, f64::INFINITY,
        ];
        let q = Quadrature::new(1e-11, 1e-14);
        let mut chi2 = 0.0;
        for w in edges.windows(2) {
            let p = q
                .integrate(|t| cauchy_scbeta2_value(t, b), w[0], w[1])
                .unwrap()
                .value;
            let observed = xs.iter().filter(|&&x| x > w[0] && x <= w[1]).count() as f64;
            let expected = p * n as f64;
            chi2 += (observed - expected).powi(2) / expected;
        }
        let df = (edges.len() - 2) as f64;
        let critical = ChiSquared::new(df).unwrap().inverse_cdf(0.99);
        assert!(chi2 < critical, "chi2 = {chi2}, critical = {critical}");
    }

    #[test]
    fn prior_spec_json_is_tagged() {
        let spec = PriorSpec::cauchy(1.0, 2.0).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"family":"cauchy","location":1.0,"scale":2.0}"#);
        let back: PriorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
