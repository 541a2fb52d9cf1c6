//! `robust-shrink`: transform the data, run estimators, and write Table 2
//! and figure data.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use robust_shrink::dataset::{canonical_players, load_players, PlayerRecord};
use robust_shrink::error::Error;
use robust_shrink::models::{ModelResult, Registry};
use robust_shrink::report::{figure_series, FigureContext, Table2Report, FIGURE5_MODELS, TABLE2_COLUMNS};

use config::RunConfig;
use output::Outputs;

const EXIT_OTHER: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_DIAGNOSTICS: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "robust-shrink", version, about = "Robust Bayesian shrinkage of batting averages")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Player CSV (`name,y45,remainder_avg,remainder_ab`); defaults to the bundled data.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// JSON run configuration, as written to `config.json`. Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    chains: Option<usize>,
    /// Iterations per chain, burn-in included.
    #[arg(long, global = true)]
    iters: Option<usize>,
    #[arg(long, global = true)]
    burnin: Option<usize>,
    /// Keep every n-th post-burn-in draw in trace files [default: 10].
    #[arg(long, global = true)]
    thin: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "ROBUST_SHRINK_OUT", default_value = "out")]
    out: PathBuf,
    /// `empirical` or a fixed batting average such as 0.248.
    #[arg(long, global = true)]
    prior_center: Option<String>,
    /// Scale of the Scaled Beta2 hyperprior in Models 6 and 7 [default: 4].
    #[arg(long, global = true)]
    b: Option<f64>,
    /// Prediction scale: `average` or `transformed`.
    #[arg(long, global = true)]
    scale: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the arcsine-transformed first-period averages as CSV.
    Transform,
    /// Run one estimator and write `model_<id>/`.
    Run {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(TABLE2_COLUMNS))]
        model: String,
    },
    /// Run every estimator (reusing matching results) and write Table 2.
    Table2,
    /// Write the data behind one figure.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=5))]
        id: u8,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownModel(_) => EXIT_USAGE,
            ref e if e.is_io() => EXIT_IO,
            _ => EXIT_OTHER,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    let config = RunConfig::resolve(&cli.opts)?;
    let players = load(config.data.as_deref())?;
    let out = Outputs::new(&cli.opts.out);
    match cli.command {
        Command::Transform => cmd_transform(&players, &config),
        Command::Run { model } => cmd_run(&model, &players, &config, &out),
        Command::Table2 => cmd_table2(&players, &config, &out),
        Command::Figure { id } => cmd_figure(id, &players, &config, &out),
    }
}

fn load(path: Option<&Path>) -> Result<Vec<PlayerRecord>, Failure> {
    Ok(match path {
        Some(p) => load_players(p)?,
        None => canonical_players(),
    })
}

fn cmd_transform(players: &[PlayerRecord], config: &RunConfig) -> Result<u8, Failure> {
    let n = config.settings.at_bats;
    println!("player,y45,x");
    for p in players {
        println!("{},{:?},{:?}", p.name, p.y45, p.transformed(n));
    }
    Ok(0)
}

fn diagnostics_code(results: &[ModelResult]) -> u8 {
    let mut code = 0;
    for r in results.iter().filter(|r| !r.is_reliable()) {
        let flagged = r
            .diagnostics_summary
            .as_ref()
            .map(|d| d.flagged.join(", "))
            .unwrap_or_default();
        eprintln!("warning: model {} failed convergence diagnostics ({flagged})", r.model_id);
        code = EXIT_DIAGNOSTICS;
    }
    code
}

fn cmd_run(id: &str, players: &[PlayerRecord], config: &RunConfig, out: &Outputs) -> Result<u8, Failure> {
    let registry = Registry::standard();
    let result = out.model_result(&registry, id, players, config)?;
    println!(
        "model {}: MSE x 1000 = {:.3}, {} = {:.3}",
        result.model_id,
        result.mse * 1e3,
        result.predictions[0].player,
        result.predictions[0].estimate
    );
    Ok(diagnostics_code(std::slice::from_ref(&result)))
}

fn results_for(
    ids: &[&str],
    players: &[PlayerRecord],
    config: &RunConfig,
    out: &Outputs,
) -> Result<Vec<ModelResult>, Failure> {
    let registry = Registry::standard();
    let results: Vec<Result<ModelResult, Error>> = ids
        .par_iter()
        .map(|id| out.model_result(&registry, id, players, config))
        .collect();
    Ok(results.into_iter().collect::<Result<Vec<_>, _>>()?)
}

fn cmd_table2(players: &[PlayerRecord], config: &RunConfig, out: &Outputs) -> Result<u8, Failure> {
    let results = results_for(&TABLE2_COLUMNS, players, config, out)?;
    let report = Table2Report::build(players, &results)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    out.write("table2.csv", &csv)?;
    out.write_json("table2.json", &report)?;
    out.write_json("config.json", config)?;
    print!("{}", report.render_text());
    Ok(diagnostics_code(&results))
}

fn cmd_figure(id: u8, players: &[PlayerRecord], config: &RunConfig, out: &Outputs) -> Result<u8, Failure> {
    let results = if id == 5 {
        results_for(&FIGURE5_MODELS, players, config, out)?
    } else {
        Vec::new()
    };
    let panels = figure_series(
        id,
        &FigureContext {
            players,
            settings: &config.settings,
            results: &results,
        },
    )?;
    for panel in &panels {
        let mut csv = Vec::new();
        panel.write_csv(&mut csv)?;
        let name = panel.file_name();
        out.write(&name, &csv)?;
        for o in &panel.omitted {
            eprintln!("note: {name}: {} omitted at x = {} ({})", o.series, o.x, o.reason);
        }
        println!("{}", out.path(&name).display());
    }
    out.write_json("config.json", config)?;
    Ok(diagnostics_code(&results))
}
