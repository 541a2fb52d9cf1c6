//! Run configuration: an optional JSON file overlaid with command-line flags.

use std::path::PathBuf;

use robust_shrink::settings::{PredictionScale, PriorCenter, RunSettings};
use serde::{Deserialize, Serialize};

use crate::{usage, Failure, GlobalOpts};

/// Trace thinning when neither the flags nor a config file set it.
pub const DEFAULT_THIN: usize = 10;

/// Everything needed to reproduce an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Player CSV; `None` means the bundled data.
    pub data: Option<PathBuf>,
    pub settings: RunSettings,
}

impl RunConfig {
    pub fn resolve(opts: &GlobalOpts) -> Result<Self, Failure> {
        let mut config = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Failure {
                    code: crate::EXIT_IO,
                    message: format!("{}: {e}", path.display()),
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| usage(format!("{}: invalid config: {e}", path.display())))?
            }
            None => {
                let mut settings = RunSettings::default();
                settings.mcmc.thin = DEFAULT_THIN;
                RunConfig { data: None, settings }
            }
        };
        let s = &mut config.settings;
        if let Some(d) = &opts.data {
            config.data = Some(d.clone());
        }
        if let Some(v) = opts.seed {
            s.mcmc.seed = v;
        }
        if let Some(v) = opts.chains {
            s.mcmc.chains = v;
        }
        if let Some(v) = opts.iters {
            s.mcmc.iters = v;
        }
        if let Some(v) = opts.burnin {
            s.mcmc.burnin = v;
        }
        if let Some(v) = opts.thin {
            s.mcmc.thin = v;
        }
        if let Some(v) = opts.b {
            s.b = v;
        }
        if let Some(c) = &opts.prior_center {
            s.prior_center = PriorCenter::parse(c).map_err(|e| usage(e.to_string()))?;
        }
        if let Some(scale) = &opts.scale {
            s.prediction_scale = match scale.as_str() {
                "average" => PredictionScale::Average,
                "transformed" => PredictionScale::Transformed,
                other => return Err(usage(format!("--scale must be `average` or `transformed`, got `{other}`"))),
            };
        }
        s.validate().map_err(|e| usage(e.to_string()))?;
        Ok(config)
    }
}
