//! Split-R-hat and effective sample size.
//!
//! R-hat: each chain is halved, `W` is the mean within-half variance, `B/n`
//! the variance of half means, `var+ = (n-1)/n W + B/n`, `R = sqrt(var+/W)`.
//! ESS: multi-chain autocorrelations truncated with Geyer's initial monotone
//! sequence.

use serde::{Deserialize, Serialize};

use super::{BlockAcceptance, McmcTrace};
use crate::error::{Error, Result};

/// Split-R-hat above this marks a run unreliable.
pub const RHAT_THRESHOLD: f64 = 1.05;

pub const MIN_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    /// `None` when the parameter is constant; infinite (serialized as `null`)
    /// when chains are constant but disagree.
    pub split_rhat: Option<f64>,
    pub ess: Option<f64>,
    /// Every draw of every chain is identical.
    pub degenerate: bool,
    /// Split-R-hat exceeds [`RHAT_THRESHOLD`].
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub max_split_rhat: Option<f64>,
    pub min_ess: Option<f64>,
    pub min_acceptance: Option<f64>,
    pub max_acceptance: Option<f64>,
    /// Parameters whose split-R-hat exceeds the threshold.
    pub flagged: Vec<String>,
    pub degenerate: Vec<String>,
    pub warnings: Vec<String>,
    pub unreliable: bool,
}

impl DiagnosticsSummary {
    pub fn from_params(
        params: &[ParamDiagnostics],
        acceptance: &[BlockAcceptance],
        warnings: &[String],
    ) -> Self {
        let fold = |it: &mut dyn Iterator<Item = f64>, max: bool| {
            it.reduce(|a, b| if (b > a) == max { b } else { a })
        };
        let flagged: Vec<String> = params
            .iter()
            .filter(|p| p.flagged)
            .map(|p| p.name.clone())
            .collect();
        Self {
            max_split_rhat: fold(&mut params.iter().filter_map(|p| p.split_rhat), true),
            min_ess: fold(&mut params.iter().filter_map(|p| p.ess), false),
            min_acceptance: fold(&mut acceptance.iter().filter_map(|a| a.rate), false),
            max_acceptance: fold(&mut acceptance.iter().filter_map(|a| a.rate), true),
            unreliable: !flagged.is_empty(),
            flagged,
            degenerate: params
                .iter()
                .filter(|p| p.degenerate)
                .map(|p| p.name.clone())
                .collect(),
            warnings: warnings.to_vec(),
        }
    }
}

fn check_shape(chains: &[Vec<f64>]) -> Result<usize> {
    if chains.len() < 2 {
        return Err(Error::Validation(format!(
            "diagnostics need at least 2 chains, got {}",
            chains.len()
        )));
    }
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < MIN_DRAWS {
        return Err(Error::Validation(format!(
            "diagnostics need at least {MIN_DRAWS} draws per chain, got {n}"
        )));
    }
    Ok(n)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// `(W, B/n)` for equal-length sequences.
fn within_between(seqs: &[&[f64]]) -> (f64, f64) {
    let stats: Vec<(f64, f64)> = seqs.iter().map(|s| mean_var(s)).collect();
    let m = stats.len() as f64;
    let w = stats.iter().map(|s| s.1).sum::<f64>() / m;
    let grand = stats.iter().map(|s| s.0).sum::<f64>() / m;
    let b_over_n = stats.iter().map(|s| (s.0 - grand).powi(2)).sum::<f64>() / (m - 1.0);
    (w, b_over_n)
}

/// Split-R-hat; `Ok(None)` for a constant parameter.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<Option<f64>> {
    let n = check_shape(chains)?;
    let half = n / 2;
    let seqs: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[n - half..n]])
        .collect();
    let (w, b_over_n) = within_between(&seqs);
    if w == 0.0 {
        return Ok(if b_over_n > 0.0 { Some(f64::INFINITY) } else { None });
    }
    let len = half as f64;
    let var_plus = (len - 1.0) / len * w + b_over_n;
    Ok(Some((var_plus / w).sqrt()))
}

/// Multi-chain effective sample size; `Ok(None)` for a constant parameter.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> Result<Option<f64>> {
    let n = check_shape(chains)?;
    let seqs: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let m = seqs.len();
    let means: Vec<f64> = seqs.iter().map(|s| s.iter().sum::<f64>() / n as f64).collect();
    let nf = n as f64;

    let acov = |lag: usize| -> f64 {
        seqs.iter()
            .zip(&means)
            .map(|(s, &mu)| {
                (0..n - lag)
                    .map(|i| (s[i] - mu) * (s[i + lag] - mu))
                    .sum::<f64>()
                    / nf
            })
            .sum::<f64>()
            / m as f64
    };

    let w = acov(0) * nf / (nf - 1.0);
    let (_, b_over_n) = within_between(&seqs);
    let var_plus = w * (nf - 1.0) / nf + b_over_n;
    if var_plus <= 0.0 || w == 0.0 {
        return Ok(None);
    }
    let rho = |lag: usize| 1.0 - (w - acov(lag)) / var_plus;

    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = if t == 0 { 1.0 + rho(1) } else { rho(t) + rho(t + 1) };
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        t += 2;
    }
    let tau = (-1.0 + 2.0 * sum).max(1.0 / ((m * n) as f64).log10());
    Ok(Some((m * n) as f64 / tau))
}

/// Diagnostics for every traced parameter.
pub fn diagnose(trace: &McmcTrace) -> Result<Vec<ParamDiagnostics>> {
    trace
        .param_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let chains = trace.column(j);
            let split_rhat = split_rhat(&chains)?;
            let ess = effective_sample_size(&chains)?;
            let degenerate = split_rhat.is_none();
            Ok(ParamDiagnostics {
                name: name.clone(),
                split_rhat,
                ess,
                degenerate,
                flagged: split_rhat.is_some_and(|r| !(r <= RHAT_THRESHOLD)),
            })
        })
        .collect()
}
