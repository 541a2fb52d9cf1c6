use rand_distr::{Distribution, Gamma, StandardNormal};

use super::rng::chain_rng;
use super::{ChainOutput, HierarchicalModelSpec, McmcConfig, Recorder, ScalePrior, StartPoint};
use crate::distributions::PriorSpec;
use crate::error::{Error, Result};

/// One chain of the conjugate Normal / Normal / inverse-gamma model.
pub(crate) fn run_chain(
    spec: &HierarchicalModelSpec,
    xs: &[f64],
    config: &McmcConfig,
    start: &StartPoint,
    chain: usize,
    at_bats: u32,
) -> Result<ChainOutput> {
    let (m0, m_prec) = match spec.location_prior {
        PriorSpec::Normal { location, scale } => (location, 1.0 / (scale * scale)),
        _ => unreachable!("conjugate spec has a Normal location prior"),
    };
    let (a0, b0) = match spec.scale_prior {
        ScalePrior::InverseGammaVariance { shape, rate } => (shape, rate),
        _ => unreachable!("conjugate spec has an inverse-gamma variance prior"),
    };
    let k = xs.len();
    let mut rng = chain_rng(config.seed, chain);
    let (mut mu, mut loc, mut var) = start.for_chain(spec, chain, config.jitter, &mut rng);
    let gamma = Gamma::new(a0 + 0.5 * k as f64, 1.0)
        .map_err(|e| Error::Domain(format!("inverse-gamma shape: {e}")))?;
    let mut rec = Recorder::new(chain, k, config, at_bats);
    let lik = if config.use_likelihood { 1.0 } else { 0.0 };

    for iter in 0..config.iters {
        let prec = lik + 1.0 / var;
        let sd = prec.sqrt().recip();
        for (m, &x) in mu.iter_mut().zip(xs) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *m = (lik * x + loc / var) / prec + sd * z;
        }

        if spec.fixed_location.is_none() {
            let prec = k as f64 / var + m_prec;
            let mean = (mu.iter().sum::<f64>() / var + m0 * m_prec) / prec;
            let z: f64 = StandardNormal.sample(&mut rng);
            loc = mean + z / prec.sqrt();
        }

        if spec.fixed_scale.is_none() {
            let ss: f64 = mu.iter().map(|m| (m - loc).powi(2)).sum();
            let g = gamma.sample(&mut rng);
            var = (b0 + 0.5 * ss) / g;
        }

        if !(loc.is_finite() && var.is_finite() && var > 0.0 && mu.iter().all(|m| m.is_finite())) {
            return Err(Error::SamplerFault {
                chain,
                iteration: iter,
                message: format!("non-finite state (M = {loc}, variance = {var})"),
            });
        }
        rec.observe(iter, &mu, loc, var);
    }

    let fixed = |f: bool| if f { None } else { Some(1.0) };
    let mut rates = vec![Some(1.0); k];
    rates.push(fixed(spec.fixed_location.is_some()));
    rates.push(fixed(spec.fixed_scale.is_some()));
    Ok(rec.finish(rates, vec![0.0; k + 2]))
}
