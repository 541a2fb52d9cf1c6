//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use robust_shrink::dataset::{canonical_players, transformed_scores};
use robust_shrink::distributions::{
    cauchy_s2beta2_density, cauchy_scbeta2_density, match_quartiles, PriorSpec, QuartileFamily,
};
use robust_shrink::losses::{
    exp_loss_estimator, optimal_estimate, WeightedLossSpec, MATCHED_GAUSSIAN_VAR,
};
use robust_shrink::models::{ModelResult, Registry};
use robust_shrink::posterior::{fit_empirical_hyperparams, posterior_mean_quadrature, PosteriorProblem};
use robust_shrink::quadrature::Quadrature;
use robust_shrink::report::{figure_series, FigureContext};
use robust_shrink::settings::RunSettings;

const PRINTED: &str = include_str!("../../core/tests/fixtures/table2_printed.csv");

type Outcome = Result<String, String>;

/// Printed Table 2 column `name`, player rows only.
fn printed(name: &str) -> Vec<f64> {
    let mut lines = PRINTED.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|cells| !cells[0].contains('_'))
        .map(|cells| cells[j].parse().unwrap())
        .collect()
}

fn estimate(ids: &[&str], settings: &RunSettings) -> Result<Vec<ModelResult>, String> {
    let players = canonical_players();
    let registry = Registry::standard();
    ids.iter()
        .map(|id| {
            registry
                .get(id)
                .and_then(|e| e.estimate(&players, settings))
                .map(|o| o.result)
                .map_err(|e| format!("model {id}: {e}"))
        })
        .collect()
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    if took > limit {
        return Err(format!("{out}; took {took:.2?}, limit {limit:?}"));
    }
    Ok(format!("{out}; {took:.2?}"))
}

fn check(failures: &mut Vec<String>, ok: bool, message: String) {
    if !ok {
        failures.push(message);
    }
}

fn verdict(failures: Vec<String>, summary: String) -> Outcome {
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{} | {}", failures.join("; "), summary))
    }
}

fn criterion1() -> Outcome {
    timed(Duration::from_secs(1), || {
        let r = estimate(&["mle", "mean"], &RunSettings::default())?;
        let (mle, mean) = (r[0].mse * 1e3, r[1].mse * 1e3);
        let mut f = Vec::new();
        check(&mut f, (mle - 4.184).abs() <= 0.005, format!("MLE {mle:.4}"));
        check(&mut f, (mean - 1.348).abs() <= 0.005, format!("grand mean {mean:.4}"));
        check(
            &mut f,
            (r[1].predictions[0].estimate - 0.265).abs() < 5e-4,
            "grand mean is not 0.265".into(),
        );
        verdict(f, format!("MSE x 1000: MLE {mle:.4}, grand mean {mean:.4}"))
    })
}

fn criterion2() -> Outcome {
    timed(Duration::from_secs(1), || {
        let xs = transformed_scores(&canonical_players(), 45);
        let hp = fit_empirical_hyperparams(&xs).map_err(|e| e.to_string())?;
        let mut f = Vec::new();
        check(&mut f, (hp.location + 3.3166).abs() <= 0.0005, format!("M {:.6}", hp.location));
        check(&mut f, (hp.tau - 3.7853).abs() <= 0.002, format!("tau {:.6}", hp.tau));
        verdict(f, format!("M = {:.6}, tau = {:.6}", hp.location, hp.tau))
    })
}

fn criterion3() -> Outcome {
    timed(Duration::from_secs(10), || {
        let results = estimate(&["1", "2", "3"], &RunSettings::default())?;
        let mut f = Vec::new();
        let mut summary = Vec::new();
        for (r, (clemente, mse)) in results.iter().zip([(0.290, 1.196), (0.304, 1.187), (0.314, 1.137)]) {
            let want = printed(&format!("model_{}", r.model_id));
            let est = r.estimates();
            let worst = est
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            check(&mut f, worst <= 0.002, format!("model {} worst cell off by {worst:.4}", r.model_id));
            check(
                &mut f,
                (est[0] - clemente).abs() <= 0.002,
                format!("model {} Clemente {:.4}", r.model_id, est[0]),
            );
            check(
                &mut f,
                (r.mse * 1e3 - mse).abs() <= 0.005,
                format!("model {} MSE {:.4}", r.model_id, r.mse * 1e3),
            );
            summary.push(format!(
                "model {}: Clemente {:.4}, MSE {:.4}, worst cell {worst:.4}",
                r.model_id,
                est[0],
                r.mse * 1e3
            ));
        }
        verdict(f, summary.join(", "))
    })
}

fn criterion4() -> Outcome {
    timed(Duration::from_secs(600), || {
        let results = estimate(&["1", "4", "5", "6", "7"], &RunSettings::default())?;
        let model1 = results[0].mse;
        let mut f = Vec::new();
        let mut summary = Vec::new();
        for (r, (clemente, mse)) in results[1..]
            .iter()
            .zip([(0.282, 1.198), (0.298, 1.168), (0.291, 1.108), (0.309, 1.117)])
        {
            let c = r.predictions[0].estimate;
            let m = r.mse * 1e3;
            let ratio = r.mse / model1;
            let diag = r.diagnostics_summary.as_ref().ok_or("missing diagnostics")?;
            let rhat = diag.max_split_rhat.unwrap_or(f64::NAN);
            check(&mut f, (c - clemente).abs() <= 0.005, format!("model {} Clemente {c:.4} (want {clemente})", r.model_id));
            check(&mut f, (m - mse).abs() <= 0.03, format!("model {} MSE {m:.4} (want {mse})", r.model_id));
            check(&mut f, rhat <= 1.05, format!("model {} split-Rhat {rhat:.4}", r.model_id));
            if r.model_id == "6" || r.model_id == "7" {
                check(&mut f, ratio <= 0.95, format!("model {} ratio {:.1}%", r.model_id, 100.0 * ratio));
            }
            summary.push(format!(
                "model {}: Clemente {c:.4}, MSE {m:.4}, ratio {:.1}%, max Rhat {rhat:.4}",
                r.model_id,
                100.0 * ratio
            ));
        }
        verdict(f, summary.join(", "))
    })
}

fn criterion5() -> Outcome {
    let xs = transformed_scores(&canonical_players(), 45);
    let hp = fit_empirical_hyperparams(&xs).map_err(|e| e.to_string())?;
    let spec = WeightedLossSpec::cauchy_over_gaussian(hp.location);
    let normal = PriorSpec::normal(hp.location, MATCHED_GAUSSIAN_VAR.sqrt()).map_err(|e| e.to_string())?;
    let cauchy = PriorSpec::cauchy(hp.location, 1.0).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for &x in &xs {
        let problem = PosteriorProblem::new(x, normal).map_err(|e| e.to_string())?;
        let est = optimal_estimate(&spec, |t| problem.log_unnormalized(t), x).map_err(|e| e.to_string())?;
        let mean = posterior_mean_quadrature(x, cauchy).map_err(|e| e.to_string())?;
        worst = worst.max((est - mean).abs());
    }
    let summary = format!("max |loss estimate - Cauchy posterior mean| = {worst:.2e} over 18 points");
    if worst < 1e-6 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn criterion6() -> Outcome {
    let anchor = -3.3166;
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for off in [-4.0, -1.5, 0.0, 1.0, 3.0] {
        for v in [0.1, 0.4, 1.0, 2.0, 5.0] {
            for r in [0.05, 0.3, 1.0, 2.0, 4.0] {
                let mean = anchor + off;
                let closed = exp_loss_estimator(mean, v, anchor, r).map_err(|e| e.to_string())?;
                let spec = WeightedLossSpec::exponential(anchor, r).map_err(|e| e.to_string())?;
                let quad = optimal_estimate(&spec, |t| -0.5 * (t - mean).powi(2) / v, mean)
                    .map_err(|e| e.to_string())?;
                worst = worst.max((closed - quad).abs());
                n += 1;
            }
        }
    }
    let summary = format!("max |closed form - quadrature| = {worst:.2e} on {n} points");
    if worst < 1e-6 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn criterion7() -> Outcome {
    let q = Quadrature::new(1e-12, 1e-15);
    let b = 1.0;
    let mut f = Vec::new();

    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let theta = 10f64.powf(-3.0 + 6.0 * i as f64 / 49.0);
        let closed = cauchy_scbeta2_density(theta, b).map_err(|e| e.to_string())?;
        let mixture = q
            .integrate_with_breaks(
                |s| b * s / (PI * (b + s).powi(2) * (theta * theta + s * s)),
                0.0,
                f64::INFINITY,
                &[theta, b],
            )
            .map_err(|e| e.to_string())?
            .value;
        worst = worst.max((closed - mixture).abs());
    }
    check(&mut f, worst < 1e-8, format!("mixture mismatch {worst:.2e}"));

    let half = Quadrature::new(1e-10, 1e-14)
        .integrate_with_breaks(
            |t| cauchy_scbeta2_density(t, b).unwrap_or(f64::NAN),
            0.0,
            f64::INFINITY,
            &[b],
        )
        .map_err(|e| e.to_string())?
        .value;
    let mass = 2.0 * half;
    check(&mut f, (mass - 1.0).abs() < 1e-6, format!("mass {mass:.10}"));

    let density = |t: f64| cauchy_scbeta2_density(t, b).unwrap_or(f64::NAN);
    let tails: Vec<f64> = [1e3, 1e5, 1e7]
        .iter()
        .map(|&t: &f64| b * (t / b).ln() / (PI * t * t * density(t)))
        .collect();
    let poles: Vec<f64> = [1e-4, 1e-8, 1e-12]
        .iter()
        .map(|&t: &f64| PI * b * density(t) / (b / t).ln())
        .collect();
    for (label, ratios) in [("tail", &tails), ("pole", &poles)] {
        for r in ratios.iter() {
            check(&mut f, (r - 1.0).abs() <= 0.05, format!("{label} ratio {r:.4}"));
        }
    }
    let fmt = |v: &[f64]| v.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join("/");
    verdict(
        f,
        format!(
            "mixture {worst:.1e}, mass {mass:.10}, tail ratios {}, pole ratios {}",
            fmt(&tails),
            fmt(&poles)
        ),
    )
}

fn criterion8() -> Outcome {
    let q = Quadrature::new(1e-12, 1e-15);
    let mut f = Vec::new();
    let mut worst: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    for b in [0.3, 1.0, 4.0, 9.0] {
        let mu = 0.5;
        for i in 0..25 {
            let theta = -12.0 + i as f64;
            let d2 = (theta - mu).powi(2);
            let closed = cauchy_s2beta2_density(theta, mu, b).map_err(|e| e.to_string())?;
            let mixture = q
                .integrate_with_breaks(
                    |w| w.sqrt() / (PI * (w + d2)) * b / (b + w).powi(2),
                    0.0,
                    f64::INFINITY,
                    &[d2, b],
                )
                .map_err(|e| e.to_string())?
                .value;
            worst = worst.max((closed - mixture).abs());
        }
        // With t = |theta - mu| / sqrt(b), 2 sqrt(b) f(theta) = 1 / (1 + t)^2,
        // whose integral over [0, inf) is exactly 1.
        for i in 0..200 {
            let t = 0.05 * i as f64;
            let theta = mu + t * b.sqrt();
            let transformed = 2.0 * b.sqrt() * cauchy_s2beta2_density(theta, mu, b).map_err(|e| e.to_string())?;
            worst_t = worst_t.max((transformed * (1.0 + t).powi(2) - 1.0).abs());
        }
    }
    check(&mut f, worst < 1e-8, format!("mixture mismatch {worst:.2e}"));
    check(&mut f, worst_t < 1e-14, format!("t-substitution residual {worst_t:.2e}"));
    verdict(f, format!("mixture {worst:.1e}, t-substitution residual {worst_t:.1e}"))
}

fn criterion9() -> Outcome {
    let players = canonical_players();
    let settings = RunSettings::default();
    let ctx = FigureContext {
        players: &players,
        settings: &settings,
        results: &[],
    };
    let fig = figure_series(2, &ctx).map_err(|e| e.to_string())?.remove(0);
    let xs = transformed_scores(&players, 45);
    let hp = fit_empirical_hyperparams(&xs).map_err(|e| e.to_string())?;
    let mut f = Vec::new();

    let normal = fig.get("normal").ok_or("no normal series")?;
    let (mut lin, mut quad_gap): (f64, f64) = (0.0, 0.0);
    for (&m, y) in fig.x.iter().zip(normal) {
        let y = y.ok_or("missing point")?;
        lin = lin.max((y - hp.shrink_c * (0.0 - m)).abs());
        let prior = PriorSpec::normal(m, hp.sigma0()).map_err(|e| e.to_string())?;
        let quad = posterior_mean_quadrature(0.0, prior).map_err(|e| e.to_string())?;
        quad_gap = quad_gap.max((y + quad).abs());
    }
    check(&mut f, lin == 0.0, format!("normal series deviates from linear by {lin:.2e}"));
    check(&mut f, quad_gap < 1e-9, format!("normal series is {quad_gap:.2e} from quadrature"));

    let nu = match_quartiles(hp.sigma0(), QuartileFamily::DoubleExponential).map_err(|e| e.to_string())?;
    let gamma = match_quartiles(hp.sigma0(), QuartileFamily::Cauchy).map_err(|e| e.to_string())?;
    let shift = |prior: PriorSpec, d: f64| -> Result<f64, String> {
        let x = prior.location() + d;
        posterior_mean_quadrature(x, prior)
            .map(|e| (x - e).abs())
            .map_err(|e| e.to_string())
    };
    let de = PriorSpec::double_exponential(hp.location, nu).map_err(|e| e.to_string())?;
    let (d20, d30) = (shift(de, 20.0)?, shift(de, 30.0)?);
    let plateau = (d30 - d20).abs() / d20;
    check(&mut f, plateau <= 0.01, format!("DE plateau change {:.3}%", 100.0 * plateau));
    check(
        &mut f,
        d30 <= std::f64::consts::SQRT_2 / nu + 0.01,
        format!("DE shift {d30:.4} exceeds its bound"),
    );

    let cauchy = PriorSpec::cauchy(hp.location, gamma).map_err(|e| e.to_string())?;
    let curve = (0..=400)
        .map(|i| shift(cauchy, 0.05 * i as f64))
        .collect::<Result<Vec<f64>, String>>()?;
    let (peak_at, peak) = curve
        .iter()
        .cloned()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let unimodal = peak_at > 0
        && peak_at < curve.len() - 1
        && curve[..=peak_at].windows(2).all(|w| w[1] >= w[0])
        && curve[peak_at..].windows(2).all(|w| w[1] <= w[0]);
    check(&mut f, unimodal, "Cauchy series is not unimodal on [0, 20]".into());
    let far = shift(cauchy, 50.0 * gamma)?;
    check(&mut f, far < 0.1 * peak, format!("Cauchy shift at 50 gamma0 {far:.4} vs peak {peak:.4}"));

    verdict(
        f,
        format!(
            "DE shift {d20:.5} -> {d30:.5} ({:.3}%), Cauchy peak {peak:.4} at d = {:.2}, {far:.4} at 50 gamma0",
            100.0 * plateau,
            0.05 * peak_at as f64
        ),
    )
}

fn run_cli(dir: &Path, threads: &str, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_robust-shrink"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("RAYON_NUM_THREADS", threads)
        .env_remove("ROBUST_SHRINK_OUT")
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    match status.code() {
        Some(0) | Some(3) => Ok(()),
        other => Err(format!("{args:?} exited with {other:?}")),
    }
}

fn criterion10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [&[&str]; 3] = [&["run", "1"], &["run", "4", "--seed", "7"], &["run", "6", "--seed", "7"]];
    let mut compared = 0;
    for args in runs {
        let mut outputs = Vec::new();
        for (k, threads) in ["1", "4", "4"].iter().enumerate() {
            let dir = tmp.path().join(format!("{}_{k}", args.join("_")));
            run_cli(&dir, threads, args)?;
            let model_dir = dir.join(format!("model_{}", args[1]));
            let read = |name: &str| std::fs::read(model_dir.join(name)).map_err(|e| e.to_string());
            outputs.push((read("result.json")?, read("config.json")?));
        }
        for o in &outputs[1..] {
            if *o != outputs[0] {
                return Err(format!("{args:?}: JSON outputs differ between runs"));
            }
            compared += 2;
        }
    }
    Ok(format!("{compared} JSON files byte-identical across 1 and 4 threads"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("baselines", criterion1),
        ("empirical Bayes fit", criterion2),
        ("Models 1-3", criterion3),
        ("Models 4-7", criterion4),
        ("loss bridge", criterion5),
        ("exponential loss closed form", criterion6),
        ("Cauchy-Scaled Beta2 density", criterion7),
        ("Cauchy-Scale2 Beta2 density", criterion8),
        ("robustness shapes", criterion9),
        ("determinism", criterion10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
