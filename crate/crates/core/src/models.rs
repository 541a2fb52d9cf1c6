//! Estimators behind one trait, registered by id.
//!
//! ```
//! use robust_shrink::dataset::canonical_players;
//! use robust_shrink::models::Registry;
//! use robust_shrink::settings::RunSettings;
//!
//! let registry = Registry::standard();
//! let out = registry
//!     .get("1")
//!     .unwrap()
//!     .estimate(&canonical_players(), &RunSettings::default())
//!     .unwrap();
//! assert!((out.result.predictions[0].estimate - 0.290).abs() < 0.002);
//! ```

use serde::{Deserialize, Serialize};

use crate::dataset::PlayerRecord;
use crate::error::{Error, Result};
use crate::mcmc::{run_model4, run_model_mwg, DiagnosticsSummary, McmcRun};
use crate::posterior::{label_predictions, mse, predict_eb_model, EbModel};
use crate::settings::RunSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub player: String,
    pub estimate: f64,
}

/// Per-player predicted batting averages and their prediction error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model_id: String,
    pub predictions: Vec<Prediction>,
    pub mse: f64,
    pub diagnostics_summary: Option<DiagnosticsSummary>,
    pub config: RunSettings,
}

impl ModelResult {
    pub fn new(
        model_id: String,
        players: &[PlayerRecord],
        preds: Vec<f64>,
        config: RunSettings,
    ) -> Result<Self> {
        let mse = mse(&preds, players)?;
        Ok(Self {
            model_id,
            predictions: label_predictions(players, &preds),
            mse,
            diagnostics_summary: None,
            config,
        })
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.predictions.iter().map(|p| p.estimate).collect()
    }

    /// False when MCMC diagnostics flagged the run.
    pub fn is_reliable(&self) -> bool {
        self.diagnostics_summary
            .as_ref()
            .is_none_or(|d| !d.unreliable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Baseline,
    EmpiricalBayes,
    FullBayes,
}

pub struct ModelOutput {
    pub result: ModelResult,
    /// Sampler output, for full-Bayes estimators.
    pub run: Option<McmcRun>,
}

pub trait ShrinkageEstimator: Send + Sync {
    fn id(&self) -> &str;
    fn label(&self) -> &str;
    fn kind(&self) -> EstimatorKind;
    fn estimate(&self, players: &[PlayerRecord], settings: &RunSettings) -> Result<ModelOutput>;
}

/// First-45 averages as the prediction.
struct Mle;

impl ShrinkageEstimator for Mle {
    fn id(&self) -> &str {
        "mle"
    }
    fn label(&self) -> &str {
        "MLE"
    }
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Baseline
    }
    fn estimate(&self, players: &[PlayerRecord], settings: &RunSettings) -> Result<ModelOutput> {
        let preds = players
            .iter()
            .map(|p| p.first_period_average(settings.at_bats))
            .collect();
        Ok(ModelOutput {
            result: ModelResult::new(self.id().into(), players, preds, settings.clone())?,
            run: None,
        })
    }
}

/// Everybody gets the average of the first-45 averages.
struct GrandMean;

impl ShrinkageEstimator for GrandMean {
    fn id(&self) -> &str {
        "mean"
    }
    fn label(&self) -> &str {
        "Grand mean"
    }
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Baseline
    }
    fn estimate(&self, players: &[PlayerRecord], settings: &RunSettings) -> Result<ModelOutput> {
        if players.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let mean = players
            .iter()
            .map(|p| p.first_period_average(settings.at_bats))
            .sum::<f64>()
            / players.len() as f64;
        Ok(ModelOutput {
            result: ModelResult::new(
                self.id().into(),
                players,
                vec![mean; players.len()],
                settings.clone(),
            )?,
            run: None,
        })
    }
}

struct EmpiricalBayes {
    model: EbModel,
    id: &'static str,
    label: &'static str,
}

impl ShrinkageEstimator for EmpiricalBayes {
    fn id(&self) -> &str {
        self.id
    }
    fn label(&self) -> &str {
        self.label
    }
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::EmpiricalBayes
    }
    fn estimate(&self, players: &[PlayerRecord], settings: &RunSettings) -> Result<ModelOutput> {
        settings.validate()?;
        Ok(ModelOutput {
            result: predict_eb_model(self.model, players, settings)?,
            run: None,
        })
    }
}

struct FullBayes {
    model_id: u8,
    id: &'static str,
    label: &'static str,
}

impl ShrinkageEstimator for FullBayes {
    fn id(&self) -> &str {
        self.id
    }
    fn label(&self) -> &str {
        self.label
    }
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::FullBayes
    }
    fn estimate(&self, players: &[PlayerRecord], settings: &RunSettings) -> Result<ModelOutput> {
        let (run, result) = if self.model_id == 4 {
            run_model4(players, settings)?
        } else {
            run_model_mwg(self.model_id, players, settings)?
        };
        Ok(ModelOutput {
            result,
            run: Some(run),
        })
    }
}

/// Estimators in registration order.
pub struct Registry {
    estimators: Vec<Box<dyn ShrinkageEstimator>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            estimators: Vec::new(),
        }
    }

    /// The MLE and grand-mean baselines followed by Models 1 to 7.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Mle));
        r.register(Box::new(GrandMean));
        for (model, id, label) in [
            (EbModel::Normal, "1", "Model 1: Normal prior, empirical Bayes"),
            (EbModel::DoubleExponential, "2", "Model 2: double-exponential prior, empirical Bayes"),
            (EbModel::Cauchy, "3", "Model 3: Cauchy prior, empirical Bayes"),
        ] {
            r.register(Box::new(EmpiricalBayes { model, id, label }));
        }
        for (model_id, id, label) in [
            (4, "4", "Model 4: Normal hierarchy, inverse-gamma variance"),
            (5, "5", "Model 5: double-exponential hierarchy, Scaled Beta2 scale"),
            (6, "6", "Model 6: Cauchy hierarchy, Scaled Beta2 scale"),
            (7, "7", "Model 7: Cauchy hierarchy, Scaled Beta2 variance"),
        ] {
            r.register(Box::new(FullBayes { model_id, id, label }));
        }
        r
    }

    /// Adds an estimator, replacing any with the same id.
    pub fn register(&mut self, estimator: Box<dyn ShrinkageEstimator>) {
        if let Some(slot) = self.estimators.iter_mut().find(|e| e.id() == estimator.id()) {
            *slot = estimator;
        } else {
            self.estimators.push(estimator);
        }
    }

    pub fn get(&self, id: &str) -> Result<&dyn ShrinkageEstimator> {
        self.estimators
            .iter()
            .find(|e| e.id() == id)
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownModel(id.to_string()))
    }

    pub fn ids(&self) -> Vec<&str> {
        self.estimators.iter().map(|e| e.id()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn ShrinkageEstimator> {
        self.estimators.iter().map(|e| e.as_ref())
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::standard()
    }
}
