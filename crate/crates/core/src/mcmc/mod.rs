//! Full-Bayes hierarchical models sampled by MCMC.
//!
//! Every model has `x_i ~ Normal(mu_i, 1)`, `mu_i | M, s ~ F(M, s)` and
//! hyperpriors on `M` and on the scale. The all-Normal model with an
//! inverse-gamma variance is sampled by exact Gibbs; the others use
//! Metropolis-within-Gibbs with per-block random walks tuned during burn-in.
//!
//! Chains run in parallel. Chain `c` draws from `ChaCha8Rng` seeded with
//! `seed` on stream `c` (see [`rng::chain_rng`]), and results are gathered in
//! chain order, so output never depends on thread count.

mod diagnostics;
mod gibbs;
mod mwg;
pub mod rng;
mod trace_io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use diagnostics::{
    diagnose, effective_sample_size, split_rhat, DiagnosticsSummary, ParamDiagnostics, RHAT_THRESHOLD,
};
pub use trace_io::{load_trace, persist_trace, read_trace, write_trace};

use crate::dataset::{inverse_transform_n, transformed_scores, PlayerRecord};
use crate::distributions::PriorSpec;
use crate::error::{Error, Result};
use crate::models::ModelResult;
use crate::posterior::fit_empirical_hyperparams;
use crate::settings::{PredictionScale, RunSettings};

/// Initial random-walk step sizes, per block type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalScales {
    pub mu: f64,
    pub location: f64,
    /// Step on the log of the scale parameter.
    pub log_scale: f64,
}

impl Default for ProposalScales {
    fn default() -> Self {
        Self {
            mu: 1.0,
            location: 0.5,
            log_scale: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub chains: usize,
    /// Iterations per chain, burn-in included.
    pub iters: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Keep every `thin`-th post-burn-in draw in the trace. Posterior means
    /// always use every draw.
    pub thin: usize,
    pub proposal_scales: ProposalScales,
    pub adapt_interval: usize,
    pub target_acceptance: f64,
    /// Half-width of the uniform jitter applied to starting values of
    /// chains after the first.
    pub jitter: f64,
    /// Drop the likelihood and sample the prior (sampler validation).
    pub use_likelihood: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            iters: 50_000,
            burnin: 10_000,
            seed: 0,
            thin: 1,
            proposal_scales: ProposalScales::default(),
            adapt_interval: 100,
            target_acceptance: 0.375,
            jitter: 1.0,
            use_likelihood: true,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.chains < 1 {
            return fail("at least one chain is required".into());
        }
        if self.burnin >= self.iters {
            return fail(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burnin, self.iters
            ));
        }
        if self.thin == 0 || self.adapt_interval == 0 {
            return fail("thin and adapt_interval must be at least 1".into());
        }
        let s = self.proposal_scales;
        if [s.mu, s.location, s.log_scale].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return fail("proposal scales must be positive".into());
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return fail("target acceptance must lie in (0, 1)".into());
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return fail("jitter must be non-negative".into());
        }
        Ok(())
    }

    pub fn kept_per_chain(&self) -> usize {
        (self.iters - self.burnin).div_ceil(self.thin)
    }
}

/// Conditional family of the player-level means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationFamily {
    Normal,
    /// Laplace with scale `s`, i.e. a double exponential with standard deviation `sqrt2 s`.
    DoubleExponential,
    Cauchy,
}

impl LocationFamily {
    /// `log p(mu | M, s)`, up to a constant not involving `s`.
    #[inline]
    pub(crate) fn ln_cond(self, d: f64, s: f64) -> f64 {
        match self {
            LocationFamily::Normal => {
                let z = d / s;
                -0.5 * z * z - s.ln()
            }
            LocationFamily::DoubleExponential => -s.ln() - d.abs() / s,
            LocationFamily::Cauchy => {
                let z = d / s;
                -s.ln() - (z * z).ln_1p()
            }
        }
    }

    pub fn prior(self, location: f64, s: f64) -> Result<PriorSpec> {
        match self {
            LocationFamily::Normal => PriorSpec::normal(location, s),
            LocationFamily::DoubleExponential => {
                PriorSpec::double_exponential(location, std::f64::consts::SQRT_2 * s)
            }
            LocationFamily::Cauchy => PriorSpec::cauchy(location, s),
        }
    }
}

/// Hyperprior on the scale of the player-level distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "on", rename_all = "snake_case")]
pub enum ScalePrior {
    /// `s^2 ~ InvGamma(shape, rate)`.
    InverseGammaVariance { shape: f64, rate: f64 },
    /// Prior on `s`.
    Sd { prior: PriorSpec },
    /// Prior on `s^2`.
    Variance { prior: PriorSpec },
}

impl ScalePrior {
    /// True when the sampled scale parameter is the variance `s^2`.
    pub fn is_variance(&self) -> bool {
        !matches!(self, ScalePrior::Sd { .. })
    }

    /// Log prior density of the sampled scale parameter.
    pub(crate) fn ln_density(&self, v: f64) -> f64 {
        match *self {
            ScalePrior::InverseGammaVariance { shape, rate } => {
                if v <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -(shape + 1.0) * v.ln() - rate / v
                }
            }
            ScalePrior::Sd { prior } | ScalePrior::Variance { prior } => prior.ln_density(v),
        }
    }

    /// Standard deviation `s` for a sampled scale parameter value.
    #[inline]
    pub(crate) fn sd(&self, v: f64) -> f64 {
        if self.is_variance() {
            v.sqrt()
        } else {
            v
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalModelSpec {
    pub model_id: u8,
    pub family: LocationFamily,
    pub location_prior: PriorSpec,
    pub scale_prior: ScalePrior,
    /// Hold `M` at this value instead of sampling it.
    pub fixed_location: Option<f64>,
    /// Hold the scale parameter (on its sampled scale) at this value.
    pub fixed_scale: Option<f64>,
}

impl HierarchicalModelSpec {
    /// Models 4 to 7. `b` is the Scaled Beta2 scale used by Models 6 and 7.
    pub fn for_model(model_id: u8, b: f64) -> Result<Self> {
        let spec = match model_id {
            4 => Self {
                model_id,
                family: LocationFamily::Normal,
                location_prior: PriorSpec::normal(0.0, 1e5f64.sqrt())?,
                scale_prior: ScalePrior::InverseGammaVariance {
                    shape: 0.01,
                    rate: 0.01,
                },
                fixed_location: None,
                fixed_scale: None,
            },
            5 => Self {
                model_id,
                family: LocationFamily::DoubleExponential,
                location_prior: PriorSpec::double_exponential(
                    0.0,
                    std::f64::consts::SQRT_2 * 1e3,
                )?,
                scale_prior: ScalePrior::Sd {
                    prior: PriorSpec::scaled_beta2(1.0, 1.0, 1.0)?,
                },
                fixed_location: None,
                fixed_scale: None,
            },
            6 => Self {
                model_id,
                family: LocationFamily::Cauchy,
                location_prior: PriorSpec::cauchy(0.0, 1e3)?,
                scale_prior: ScalePrior::Sd {
                    prior: PriorSpec::scaled_beta2(1.0, 1.0, b)?,
                },
                fixed_location: None,
                fixed_scale: None,
            },
            7 => Self {
                model_id,
                family: LocationFamily::Cauchy,
                location_prior: PriorSpec::cauchy(0.0, 1e3)?,
                scale_prior: ScalePrior::Variance {
                    prior: PriorSpec::scaled_beta2(1.0, 1.0, b)?,
                },
                fixed_location: None,
                fixed_scale: None,
            },
            other => return Err(Error::UnknownModel(other.to_string())),
        };
        Ok(spec)
    }

    pub fn is_conjugate(&self) -> bool {
        self.family == LocationFamily::Normal
            && matches!(self.scale_prior, ScalePrior::InverseGammaVariance { .. })
            && matches!(self.location_prior, PriorSpec::Normal { .. })
    }

    /// Name of the scale column in traces: `scale` holds `s^2` or `s`.
    pub fn scale_is_variance(&self) -> bool {
        self.scale_prior.is_variance()
    }
}

/// Stored draws of one chain; each row is `mu_1..mu_k, M, scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub chain: usize,
    pub iterations: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

/// Stored post-burn-in draws of all chains.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcTrace {
    pub param_names: Vec<String>,
    pub chains: Vec<ChainDraws>,
}

impl McmcTrace {
    pub fn param_names_for(k: usize) -> Vec<String> {
        let mut names: Vec<String> = (1..=k).map(|i| format!("mu_{i}")).collect();
        names.push("M".into());
        names.push("scale".into());
        names
    }

    /// Draws of parameter `j`, one slice per chain.
    pub fn column(&self, j: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.rows.iter().map(|r| r[j]).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAcceptance {
    pub block: String,
    /// Post-burn-in acceptance rate, averaged over chains; `None` for
    /// blocks that are held fixed.
    pub rate: Option<f64>,
    /// Final proposal step, averaged over chains.
    pub step: f64,
}

/// Everything a sampler run produces.
#[derive(Debug, Clone)]
pub struct McmcRun {
    pub spec: HierarchicalModelSpec,
    pub config: McmcConfig,
    pub trace: McmcTrace,
    /// Posterior means over every post-burn-in draw, per parameter.
    pub posterior_means: Vec<f64>,
    /// Posterior means of the batting averages `(sin(mu_i/sqrt n)+1)/2`.
    pub average_means: Vec<f64>,
    pub acceptance: Vec<BlockAcceptance>,
    pub warnings: Vec<String>,
    pub diagnostics: Vec<ParamDiagnostics>,
}

impl McmcRun {
    pub fn summary(&self) -> DiagnosticsSummary {
        DiagnosticsSummary::from_params(&self.diagnostics, &self.acceptance, &self.warnings)
    }
}

/// Per-chain sampler output before merging.
pub(crate) struct ChainOutput {
    pub draws: ChainDraws,
    pub sums: Vec<f64>,
    pub average_sums: Vec<f64>,
    pub count: usize,
    pub accept_rates: Vec<Option<f64>>,
    pub steps: Vec<f64>,
}

/// Accumulates post-burn-in draws of one chain.
pub(crate) struct Recorder {
    burnin: usize,
    thin: usize,
    root_n: f64,
    draws: ChainDraws,
    sums: Vec<f64>,
    average_sums: Vec<f64>,
    count: usize,
}

impl Recorder {
    pub fn new(chain: usize, k: usize, config: &McmcConfig, at_bats: u32) -> Self {
        let kept = config.kept_per_chain();
        Self {
            burnin: config.burnin,
            thin: config.thin,
            root_n: f64::from(at_bats).sqrt(),
            draws: ChainDraws {
                chain,
                iterations: Vec::with_capacity(kept),
                rows: Vec::with_capacity(kept),
            },
            sums: vec![0.0; k + 2],
            average_sums: vec![0.0; k],
            count: 0,
        }
    }

    pub fn observe(&mut self, iter: usize, mu: &[f64], location: f64, scale: f64) {
        if iter < self.burnin {
            return;
        }
        let k = mu.len();
        for (j, &m) in mu.iter().enumerate() {
            self.sums[j] += m;
            self.average_sums[j] += ((m / self.root_n).sin() + 1.0) / 2.0;
        }
        self.sums[k] += location;
        self.sums[k + 1] += scale;
        if (iter - self.burnin) % self.thin == 0 {
            let mut row = Vec::with_capacity(k + 2);
            row.extend_from_slice(mu);
            row.push(location);
            row.push(scale);
            self.draws.iterations.push(iter);
            self.draws.rows.push(row);
        }
        self.count += 1;
    }

    pub fn finish(self, accept_rates: Vec<Option<f64>>, steps: Vec<f64>) -> ChainOutput {
        ChainOutput {
            draws: self.draws,
            sums: self.sums,
            average_sums: self.average_sums,
            count: self.count,
            accept_rates,
            steps,
        }
    }
}

/// Starting point shared by every chain before jitter.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StartPoint {
    pub mu: Vec<f64>,
    pub location: f64,
    pub scale: f64,
}

impl StartPoint {
    /// Chain 0 starts here; later chains get uniform jitter on `mu` and `M`
    /// and multiplicative jitter on the scale.
    pub fn for_chain<R: rand::Rng>(
        &self,
        spec: &HierarchicalModelSpec,
        chain: usize,
        jitter: f64,
        rng: &mut R,
    ) -> (Vec<f64>, f64, f64) {
        let mut mu = self.mu.clone();
        let (mut location, mut scale) = (self.location, self.scale);
        if chain > 0 && jitter > 0.0 {
            let u = |rng: &mut R| jitter * (2.0 * rng.random::<f64>() - 1.0);
            for m in &mut mu {
                *m += u(rng);
            }
            if spec.fixed_location.is_none() {
                location += u(rng);
            }
            if spec.fixed_scale.is_none() {
                scale *= u(rng).exp();
            }
        }
        (mu, location, scale)
    }
}

fn start_point(spec: &HierarchicalModelSpec, xs: &[f64]) -> StartPoint {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let eb_var = fit_empirical_hyperparams(xs)
        .map(|h| h.sigma0_sq)
        .unwrap_or(1.0);
    let scale = spec.fixed_scale.unwrap_or(if spec.scale_is_variance() {
        eb_var
    } else {
        eb_var.sqrt()
    });
    StartPoint {
        mu: xs.to_vec(),
        location: spec.fixed_location.unwrap_or(mean),
        scale,
    }
}

/// Run every chain of `spec` on transformed scores `xs`.
pub fn sample(
    spec: &HierarchicalModelSpec,
    xs: &[f64],
    config: &McmcConfig,
    at_bats: u32,
) -> Result<McmcRun> {
    config.validate()?;
    if xs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("scores must be finite".into()));
    }
    let start = start_point(spec, xs);
    let outputs: Vec<Result<ChainOutput>> = (0..config.chains)
        .into_par_iter()
        .map(|chain| {
            if spec.is_conjugate() {
                gibbs::run_chain(spec, xs, config, &start, chain, at_bats)
            } else {
                mwg::run_chain(spec, xs, config, &start, chain, at_bats)
            }
        })
        .collect();
    let outputs = outputs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(merge(spec, config, xs.len(), outputs))
}

fn merge(
    spec: &HierarchicalModelSpec,
    config: &McmcConfig,
    k: usize,
    outputs: Vec<ChainOutput>,
) -> McmcRun {
    let n_params = k + 2;
    let total: usize = outputs.iter().map(|o| o.count).sum();
    let posterior_means = (0..n_params)
        .map(|j| outputs.iter().map(|o| o.sums[j]).sum::<f64>() / total as f64)
        .collect();
    let average_means = (0..k)
        .map(|j| outputs.iter().map(|o| o.average_sums[j]).sum::<f64>() / total as f64)
        .collect();

    let names = McmcTrace::param_names_for(k);
    let n_chains = outputs.len() as f64;
    let mut acceptance = Vec::with_capacity(n_params);
    let mut warnings = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let rate = outputs
            .iter()
            .map(|o| o.accept_rates[j])
            .sum::<Option<f64>>()
            .map(|r| r / n_chains);
        let step = outputs.iter().map(|o| o.steps[j]).sum::<f64>() / n_chains;
        if let Some(r) = rate {
            if !(0.05..=0.95).contains(&r) {
                warnings.push(format!(
                    "acceptance rate {r:.3} for {name} is outside [0.05, 0.95] after tuning"
                ));
            }
        }
        acceptance.push(BlockAcceptance {
            block: name.clone(),
            rate,
            step,
        });
    }

    let trace = McmcTrace {
        param_names: names,
        chains: outputs.into_iter().map(|o| o.draws).collect(),
    };
    let diagnostics = diagnose(&trace).unwrap_or_else(|e| {
        warnings.push(format!("diagnostics unavailable: {e}"));
        Vec::new()
    });
    McmcRun {
        spec: *spec,
        config: config.clone(),
        trace,
        posterior_means,
        average_means,
        acceptance,
        warnings,
        diagnostics,
    }
}

/// Shared post-processing: predictions on the configured scale.
fn run_to_result(
    run: &McmcRun,
    players: &[PlayerRecord],
    settings: &RunSettings,
) -> Result<ModelResult> {
    let k = players.len();
    let preds: Vec<f64> = match settings.prediction_scale {
        PredictionScale::Average => run.average_means.clone(),
        PredictionScale::Transformed => run.posterior_means[..k]
            .iter()
            .map(|&m| inverse_transform_n(m, settings.at_bats))
            .collect(),
    };
    let mut result = ModelResult::new(run.spec.model_id.to_string(), players, preds, settings.clone())?;
    result.diagnostics_summary = Some(run.summary());
    Ok(result)
}

/// Model 4: Normal means, `M ~ N(0, 1e5)`, `s^2 ~ InvGamma(0.01, 0.01)`, exact Gibbs.
pub fn run_model4(players: &[PlayerRecord], settings: &RunSettings) -> Result<(McmcRun, ModelResult)> {
    run_model(4, players, settings)
}

/// Models 5, 6 and 7 by Metropolis-within-Gibbs.
pub fn run_model_mwg(
    model_id: u8,
    players: &[PlayerRecord],
    settings: &RunSettings,
) -> Result<(McmcRun, ModelResult)> {
    if !(5..=7).contains(&model_id) {
        return Err(Error::UnknownModel(model_id.to_string()));
    }
    run_model(model_id, players, settings)
}

fn run_model(
    model_id: u8,
    players: &[PlayerRecord],
    settings: &RunSettings,
) -> Result<(McmcRun, ModelResult)> {
    settings.validate()?;
    let spec = HierarchicalModelSpec::for_model(model_id, settings.b)?;
    let xs = transformed_scores(players, settings.at_bats);
    let run = sample(&spec, &xs, &settings.mcmc, settings.at_bats)?;
    let result = run_to_result(&run, players, settings)?;
    Ok((run, result))
}
