//! The prediction comparison table and the data behind the figures.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{transformed_scores, PlayerRecord};
use crate::distributions::{cauchy_s2beta2_density, cauchy_scbeta2_density, PriorSpec};
use crate::error::{Error, Result};
use crate::losses::WeightedLossSpec;
use crate::models::ModelResult;
use crate::posterior::{fit_for_settings, posterior_mean_normal, posterior_mean_quadrature, EbModel};
use crate::settings::RunSettings;

/// Column ids of the comparison table, in order.
pub const TABLE2_COLUMNS: [&str; 9] = ["mle", "mean", "1", "2", "3", "4", "5", "6", "7"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub player: String,
    pub remainder_avg: f64,
    /// One prediction per entry of [`TABLE2_COLUMNS`].
    pub predictions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Report {
    pub columns: Vec<String>,
    pub rows: Vec<Table2Row>,
    /// Unrounded mean squared errors, per column.
    pub mse: Vec<f64>,
    /// `100 * mse / mse(Model 1)`.
    pub ratio_percent: Vec<f64>,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Schema(format!("csv output failed: {e}"))
}

fn column_name(id: &str) -> String {
    if id.chars().all(|c| c.is_ascii_digit()) {
        format!("model_{id}")
    } else {
        id.to_string()
    }
}

impl Table2Report {
    /// Assemble the table from one result per column id.
    pub fn build(players: &[PlayerRecord], results: &[ModelResult]) -> Result<Self> {
        let find = |id: &str| results.iter().find(|r| r.model_id == id);
        let missing: Vec<String> = TABLE2_COLUMNS
            .iter()
            .filter(|id| find(id).is_none())
            .map(|id| id.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteReport { missing });
        }
        let ordered: Vec<&ModelResult> = TABLE2_COLUMNS.iter().filter_map(|id| find(id)).collect();
        for r in &ordered {
            if r.predictions.len() != players.len() {
                return Err(Error::LengthMismatch {
                    left: r.predictions.len(),
                    right: players.len(),
                });
            }
            if let Some(p) = r.predictions.iter().find(|p| !(0.0..=1.0).contains(&p.estimate)) {
                return Err(Error::Validation(format!(
                    "model {} predicts {} for {}",
                    r.model_id, p.estimate, p.player
                )));
            }
        }
        let rows = players
            .iter()
            .enumerate()
            .map(|(i, p)| Table2Row {
                player: p.name.clone(),
                remainder_avg: p.remainder_avg,
                predictions: ordered.iter().map(|r| r.predictions[i].estimate).collect(),
            })
            .collect();
        let mse: Vec<f64> = ordered.iter().map(|r| r.mse).collect();
        let base = mse[2];
        Ok(Self {
            columns: TABLE2_COLUMNS.iter().map(|s| s.to_string()).collect(),
            rows,
            ratio_percent: mse.iter().map(|m| 100.0 * m / base).collect(),
            mse,
        })
    }

    pub fn column(&self, id: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == id)?;
        Some(self.rows.iter().map(|r| r.predictions[j]).collect())
    }

    pub fn mse_of(&self, id: &str) -> Option<f64> {
        let j = self.columns.iter().position(|c| c == id)?;
        Some(self.mse[j])
    }

    /// CSV with one row per player, then `mse_x1000` and `ratio_percent`
    /// footer rows (blank remainder cell). Values are unrounded.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["player".to_string(), "remainder_avg".to_string()];
        header.extend(self.columns.iter().map(|c| column_name(c)));
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![row.player.clone(), format!("{:?}", row.remainder_avg)];
            rec.extend(row.predictions.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec).map_err(csv_err)?;
        }
        for (label, vals) in [
            ("mse_x1000", self.mse.iter().map(|m| m * 1e3).collect::<Vec<_>>()),
            ("ratio_percent", self.ratio_percent.clone()),
        ] {
            let mut rec = vec![label.to_string(), String::new()];
            rec.extend(vals.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Fixed-width text table, three decimals.
    pub fn render_text(&self) -> String {
        let mut out = format!("{:<14}{:>8}", "player", "remain");
        for c in &self.columns {
            out.push_str(&format!("{:>8}", c));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:<14}{:>8.3}", r.player, r.remainder_avg));
            for v in &r.predictions {
                out.push_str(&format!("{v:>8.3}"));
            }
            out.push('\n');
        }
        out.push_str(&format!("{:<22}", "MSE x 10^3"));
        for m in &self.mse {
            out.push_str(&format!("{:>8.3}", m * 1e3));
        }
        out.push('\n');
        out.push_str(&format!("{:<22}", "ratio to Model 1"));
        for r in &self.ratio_percent {
            out.push_str(&format!("{:>7.0}%", r));
        }
        out.push('\n');
        out
    }
}

/// A point left out of a series, e.g. a density pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmittedPoint {
    pub series: String,
    pub x: f64,
    pub reason: String,
}

/// One panel of a figure: a shared x column and named y series.
/// `None` cells are omitted points and appear blank in CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSeries {
    pub figure_id: u8,
    pub panel: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub series: Vec<(String, Vec<Option<f64>>)>,
    pub omitted: Vec<OmittedPoint>,
}

impl FigureSeries {
    fn new(figure_id: u8, panel: &str, x_label: &str, y_label: &str, x: Vec<f64>) -> Self {
        Self {
            figure_id,
            panel: panel.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x,
            series: Vec::new(),
            omitted: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, ys: Vec<f64>) {
        self.series.push((name.into(), ys.into_iter().map(Some).collect()));
    }

    /// Adds a series, omitting and flagging non-finite points.
    fn push_flagged(&mut self, name: &str, ys: Vec<f64>, reason: &str) {
        let mut cells = Vec::with_capacity(ys.len());
        for (&x, y) in self.x.iter().zip(ys) {
            if y.is_finite() {
                cells.push(Some(y));
            } else {
                self.omitted.push(OmittedPoint {
                    series: name.into(),
                    x,
                    reason: reason.into(),
                });
                cells.push(None);
            }
        }
        self.series.push((name.into(), cells));
    }

    pub fn get(&self, name: &str) -> Option<&[Option<f64>]> {
        self.series
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// File name: `figN.csv` for the main panel, `figN_<panel>.csv` otherwise.
    pub fn file_name(&self) -> String {
        if self.panel == "main" || self.panel == "center" {
            format!("fig{}.csv", self.figure_id)
        } else {
            format!("fig{}_{}.csv", self.figure_id, self.panel)
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![self.x_label.clone()];
        header.extend(self.series.iter().map(|(n, _)| n.clone()));
        w.write_record(&header).map_err(csv_err)?;
        for (i, x) in self.x.iter().enumerate() {
            let mut rec = vec![format!("{x:?}")];
            rec.extend(
                self.series
                    .iter()
                    .map(|(_, ys)| ys[i].map(|v| format!("{v:?}")).unwrap_or_default()),
            );
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// `lo, lo + step, ..., hi` computed by index to avoid drift.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

/// Inputs for [`figure_series`]; Figure 5 needs model results.
pub struct FigureContext<'a> {
    pub players: &'a [PlayerRecord],
    pub settings: &'a RunSettings,
    pub results: &'a [ModelResult],
}

/// The models whose results Figure 5 compares.
pub const FIGURE5_MODELS: [&str; 4] = ["1", "3", "4", "7"];

/// Data panels for figure `figure_id` (1 to 5).
pub fn figure_series(figure_id: u8, ctx: &FigureContext<'_>) -> Result<Vec<FigureSeries>> {
    match figure_id {
        1 => Ok(vec![figure1()]),
        2 => figure2(ctx).map(|f| vec![f]),
        3 => figure3(ctx).map(|f| vec![f]),
        4 => figure4(),
        5 => figure5(ctx).map(|f| vec![f]),
        other => Err(Error::Validation(format!(
            "figure id must be 1 to 5, got {other}"
        ))),
    }
}

fn figure1() -> FigureSeries {
    let xs = grid(-10.0, 10.0, 0.01);
    let mut f = FigureSeries::new(1, "main", "theta", "loss", xs.clone());
    let square = WeightedLossSpec::SquareLoss;
    let cg = WeightedLossSpec::cauchy_over_gaussian(0.0);
    f.push("quadratic", xs.iter().map(|&t| square.loss(t, 0.0)).collect());
    f.push("cauchy_over_gaussian", xs.iter().map(|&t| cg.loss(t, 0.0)).collect());
    f
}

/// The three empirical-Bayes priors centred at `location`, with fitted scales.
fn eb_priors(ctx: &FigureContext<'_>, location: f64) -> Result<(crate::posterior::HyperParams, [PriorSpec; 3])> {
    let xs = transformed_scores(ctx.players, ctx.settings.at_bats);
    let mut hp = fit_for_settings(&xs, ctx.settings)?;
    hp.location = location;
    let priors = [
        EbModel::Normal.prior(&hp)?,
        EbModel::DoubleExponential.prior(&hp)?,
        EbModel::Cauchy.prior(&hp)?,
    ];
    Ok((hp, priors))
}

/// Shrinkage `x - E(mu | x)` at `x = 0` as the prior location sweeps.
fn figure2(ctx: &FigureContext<'_>) -> Result<FigureSeries> {
    let ms = grid(-15.0, 15.0, 0.05);
    let x = 0.0;
    let mut f = FigureSeries::new(2, "main", "prior_location", "x_minus_posterior_mean", ms.clone());
    let (hp, _) = eb_priors(ctx, 0.0)?;
    f.push("normal", ms.iter().map(|&m| hp.shrink_c * (x - m)).collect());
    for (idx, name) in [(1, "double_exponential"), (2, "cauchy")] {
        let ys = ms
            .iter()
            .map(|&m| {
                let (_, priors) = eb_priors(ctx, m)?;
                Ok(x - posterior_mean_quadrature(x, priors[idx])?)
            })
            .collect::<Result<Vec<f64>>>()?;
        f.push(name, ys);
    }
    Ok(f)
}

/// Posterior means per observation, sorted by observation, with `M` the
/// fitted centre.
fn figure3(ctx: &FigureContext<'_>) -> Result<FigureSeries> {
    let mut xs = transformed_scores(ctx.players, ctx.settings.at_bats);
    xs.sort_by(f64::total_cmp);
    let hp = fit_for_settings(&xs, ctx.settings)?;
    let (_, priors) = eb_priors(ctx, hp.location)?;
    let mut f = FigureSeries::new(3, "main", "x", "posterior_mean", xs.clone());
    f.push("normal", xs.iter().map(|&x| posterior_mean_normal(x, &hp)).collect());
    for (idx, name) in [(1, "double_exponential"), (2, "cauchy")] {
        let ys = xs
            .iter()
            .map(|&x| posterior_mean_quadrature(x, priors[idx]))
            .collect::<Result<Vec<f64>>>()?;
        f.push(name, ys);
    }
    Ok(f)
}

/// Cauchy-Scaled-Beta2 and Cauchy-Scale2-Beta2 densities (`b = 1`) against
/// standard Cauchy and Normal, near the centre and in the tail.
fn figure4() -> Result<Vec<FigureSeries>> {
    let cauchy = PriorSpec::cauchy(0.0, 1.0)?;
    let normal = PriorSpec::normal(0.0, 1.0)?;
    let panel = |name: &str, xs: Vec<f64>| -> Result<FigureSeries> {
        let mut f = FigureSeries::new(4, name, "theta", "density", xs.clone());
        let r3 = xs
            .iter()
            .map(|&t| cauchy_scbeta2_density(t, 1.0))
            .collect::<Result<Vec<f64>>>()?;
        f.push_flagged("cauchy_scaled_beta2", r3, "pole");
        let r4 = xs
            .iter()
            .map(|&t| cauchy_s2beta2_density(t, 0.0, 1.0))
            .collect::<Result<Vec<f64>>>()?;
        f.push("cauchy_scale2_beta2", r4);
        f.push("cauchy", xs.iter().map(|&t| cauchy.ln_density(t).exp()).collect());
        f.push("normal", xs.iter().map(|&t| normal.ln_density(t).exp()).collect());
        Ok(f)
    };
    let mut center = grid(-10.0, 10.0, 0.01);
    // Snap the grid point nearest zero to exactly zero so the pole is explicit.
    if let Some(z) = center.iter_mut().min_by(|a, b| a.abs().total_cmp(&b.abs())) {
        *z = 0.0;
    }
    Ok(vec![panel("center", center)?, panel("tail", grid(5.0, 100.0, 0.5))?])
}

/// Observed season against Models 1, 3 (empirical Bayes) and 4, 7 (full Bayes).
fn figure5(ctx: &FigureContext<'_>) -> Result<FigureSeries> {
    let missing: Vec<String> = FIGURE5_MODELS
        .iter()
        .filter(|id| !ctx.results.iter().any(|r| r.model_id == **id))
        .map(|id| id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteReport { missing });
    }
    let xs: Vec<f64> = ctx
        .players
        .iter()
        .map(|p| p.first_period_average(ctx.settings.at_bats))
        .collect();
    let mut f = FigureSeries::new(5, "main", "first_45_average", "batting_average", xs);
    f.push(
        "remainder_avg",
        ctx.players.iter().map(|p| p.remainder_avg).collect(),
    );
    for id in FIGURE5_MODELS {
        let r = ctx
            .results
            .iter()
            .find(|r| r.model_id == id)
            .expect("checked above");
        f.push(&column_name(id), r.estimates());
    }
    Ok(f)
}
