use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::rng::chain_rng;
use super::{ChainOutput, HierarchicalModelSpec, McmcConfig, Recorder, StartPoint};
use crate::error::{Error, Result};

/// Acceptance bookkeeping for one random-walk block.
#[derive(Debug, Clone, Copy)]
struct Block {
    step: f64,
    window_accepted: u32,
    window_proposed: u32,
    accepted: u64,
    proposed: u64,
}

impl Block {
    fn new(step: f64) -> Self {
        Self {
            step,
            window_accepted: 0,
            window_proposed: 0,
            accepted: 0,
            proposed: 0,
        }
    }

    fn record(&mut self, accepted: bool, burning: bool) {
        if burning {
            self.window_proposed += 1;
            self.window_accepted += u32::from(accepted);
        } else {
            self.proposed += 1;
            self.accepted += u64::from(accepted);
        }
    }

    /// Multiplicative step update toward the target acceptance rate.
    fn adapt(&mut self, target: f64) {
        if self.window_proposed > 0 {
            let rate = f64::from(self.window_accepted) / f64::from(self.window_proposed);
            self.step *= (rate - target).exp();
        }
        self.window_accepted = 0;
        self.window_proposed = 0;
    }

    fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

fn accept<R: Rng>(rng: &mut R, log_ratio: f64) -> bool {
    rng.random::<f64>().ln() < log_ratio
}

fn fault(chain: usize, iteration: usize, what: &str) -> Error {
    Error::SamplerFault {
        chain,
        iteration,
        message: format!("non-finite log density for {what}"),
    }
}

/// One Metropolis-within-Gibbs chain: a random walk on each `mu_i`, on `M`,
/// and on the log of the scale parameter (with its Jacobian).
pub(crate) fn run_chain(
    spec: &HierarchicalModelSpec,
    xs: &[f64],
    config: &McmcConfig,
    start: &StartPoint,
    chain: usize,
    at_bats: u32,
) -> Result<ChainOutput> {
    let k = xs.len();
    let family = spec.family;
    let scale_prior = spec.scale_prior;
    let lik = if config.use_likelihood { 1.0 } else { 0.0 };
    let mut rng = chain_rng(config.seed, chain);
    let (mut mu, mut loc, mut v) = start.for_chain(spec, chain, config.jitter, &mut rng);
    let mut s = scale_prior.sd(v);

    let steps = config.proposal_scales;
    let mut blocks: Vec<Block> = (0..k).map(|_| Block::new(steps.mu)).collect();
    blocks.push(Block::new(steps.location));
    blocks.push(Block::new(steps.log_scale));
    let mut rec = Recorder::new(chain, k, config, at_bats);

    let group_ll = |mu: &[f64], loc: f64, s: f64| -> f64 {
        mu.iter().map(|&m| family.ln_cond(m - loc, s)).sum()
    };

    for iter in 0..config.iters {
        let burning = iter < config.burnin;

        for i in 0..k {
            let z: f64 = StandardNormal.sample(&mut rng);
            let cur = mu[i];
            let prop = cur + blocks[i].step * z;
            let lp = |m: f64| -0.5 * lik * (xs[i] - m).powi(2) + family.ln_cond(m - loc, s);
            let ratio = lp(prop) - lp(cur);
            if ratio.is_nan() {
                return Err(fault(chain, iter, &format!("mu_{}", i + 1)));
            }
            let ok = accept(&mut rng, ratio);
            if ok {
                mu[i] = prop;
            }
            blocks[i].record(ok, burning);
        }

        if spec.fixed_location.is_none() {
            let z: f64 = StandardNormal.sample(&mut rng);
            let prop = loc + blocks[k].step * z;
            let lp = |l: f64| group_ll(&mu, l, s) + spec.location_prior.ln_density(l);
            let ratio = lp(prop) - lp(loc);
            if ratio.is_nan() {
                return Err(fault(chain, iter, "M"));
            }
            let ok = accept(&mut rng, ratio);
            if ok {
                loc = prop;
            }
            blocks[k].record(ok, burning);
        }

        if spec.fixed_scale.is_none() {
            let z: f64 = StandardNormal.sample(&mut rng);
            let eta = v.ln();
            let prop_eta = eta + blocks[k + 1].step * z;
            let lp = |e: f64| {
                let val = e.exp();
                group_ll(&mu, loc, scale_prior.sd(val)) + scale_prior.ln_density(val) + e
            };
            let ratio = lp(prop_eta) - lp(eta);
            if ratio.is_nan() {
                return Err(fault(chain, iter, "scale"));
            }
            let ok = accept(&mut rng, ratio);
            if ok {
                v = prop_eta.exp();
                s = scale_prior.sd(v);
            }
            blocks[k + 1].record(ok, burning);
        }

        if burning && (iter + 1) % config.adapt_interval == 0 {
            for b in &mut blocks {
                b.adapt(config.target_acceptance);
            }
        }

        if !(loc.is_finite() && v.is_finite() && v > 0.0) {
            return Err(Error::SamplerFault {
                chain,
                iteration: iter,
                message: format!("non-finite state (M = {loc}, scale = {v})"),
            });
        }
        rec.observe(iter, &mu, loc, v);
    }

    let rates = blocks.iter().map(Block::rate).collect();
    let steps = blocks.iter().map(|b| b.step).collect();
    Ok(rec.finish(rates, steps))
}
