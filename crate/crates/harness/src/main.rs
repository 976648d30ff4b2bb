//! `wdoa` command line: wideband DOA experiment runner.
//!
//! Subcommands:
//!   interp-error   projector interpolation-error curves and summaries
//!   rmse           known-order RMSE Monte-Carlo sweep over the SNR grid
//!   detect         detection-probability curve with unknown order
//!   simulate       dump one snapshot-set fixture as CSV
//!
//! Common flags: --config <path>, --seed <n>, --trials <n>, --out <dir>.
//! `interp-error` also takes --method cheb|bin|both and --orders a,b,c.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use wdoa_core::cost::CompressionKind;
use wdoa_harness::config::ExperimentConfig;
use wdoa_harness::experiments::{
    method_name, run_detect, run_interp_error, run_rmse, run_simulate,
};
use wdoa_harness::runio;

const USAGE: &str = "usage: wdoa <interp-error|rmse|detect|simulate> \
[--config <path>] [--seed <n>] [--trials <n>] [--out <dir>] \
[--method cheb|bin|both] [--orders <a,b,...>]";

struct Cli {
    command: String,
    config_path: Option<String>,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<String>,
    method: String,
    orders: Option<Vec<usize>>,
}

fn parse_cli(mut args: std::env::Args) -> Result<Cli, String> {
    let _ = args.next();
    let command = args.next().ok_or(USAGE.to_string())?;
    let mut cli = Cli {
        command,
        config_path: None,
        seed: None,
        trials: None,
        out: None,
        method: "both".to_string(),
        orders: None,
    };
    while let Some(flag) = args.next() {
        let mut value = || args.next().ok_or(format!("missing value for {flag}"));
        match flag.as_str() {
            "--config" => cli.config_path = Some(value()?),
            "--seed" => cli.seed = Some(value()?.parse().map_err(|_| "bad --seed".to_string())?),
            "--trials" => {
                cli.trials = Some(value()?.parse().map_err(|_| "bad --trials".to_string())?)
            }
            "--out" => cli.out = Some(value()?),
            "--method" => cli.method = value()?,
            "--orders" => {
                let list = value()?;
                let parsed: Result<Vec<usize>, _> =
                    list.split(',').map(|t| t.trim().parse::<usize>()).collect();
                cli.orders = Some(parsed.map_err(|_| "bad --orders".to_string())?);
            }
            other => return Err(format!("unknown flag `{other}`\n{USAGE}")),
        }
    }
    Ok(cli)
}

fn interp_error_files(
    cfg: &ExperimentConfig,
    dir: &Path,
    method: CompressionKind,
    orders: &[usize],
) -> Result<Vec<PathBuf>, Box<dyn std::error::Error>> {
    let report = run_interp_error(cfg, method, orders)?;
    let hash = cfg.hash();
    let name = method_name(method);
    let mut files = Vec::new();
    for (order, curve) in &report.curves {
        let text = runio::curve_csv(&hash, "r,error_db", curve);
        files.push(runio::write_text(
            dir,
            &format!("interp_error_{name}_{order}.csv"),
            &text,
        )?);
    }
    let text = runio::summary_csv(&hash, "order,max_error_db", &report.summary);
    files.push(runio::write_text(
        dir,
        &format!("interp_error_{name}_summary.csv"),
        &text,
    )?);
    let text = runio::triple_csv(&hash, "order,delta,max_error_db", &report.separation);
    files.push(runio::write_text(
        dir,
        &format!("interp_error_{name}_separation.csv"),
        &text,
    )?);
    for (order, max_db) in &report.summary {
        println!("{name} order {order}: max interpolation error {max_db:.2} dB");
    }
    Ok(files)
}

fn run() -> Result<(), Box<dyn std::error::Error>> {
    let cli =
        parse_cli(std::env::args()).map_err(|e| -> Box<dyn std::error::Error> { e.into() })?;
    let mut cfg = match &cli.config_path {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    let dir = PathBuf::from(&cfg.output_dir);
    let start = Instant::now();
    let mut outputs: Vec<PathBuf> = Vec::new();

    match cli.command.as_str() {
        "interp-error" => {
            let methods: Vec<CompressionKind> = match cli.method.as_str() {
                "cheb" => vec![CompressionKind::Chebyshev],
                "bin" => vec![CompressionKind::Bin],
                "both" => vec![CompressionKind::Chebyshev, CompressionKind::Bin],
                other => return Err(format!("unknown --method `{other}`").into()),
            };
            for method in methods {
                let orders: Vec<usize> = match (&cli.orders, method) {
                    (Some(orders), _) => orders.clone(),
                    (None, CompressionKind::Chebyshev) => (2..=7).collect(),
                    (None, CompressionKind::Bin) => vec![47],
                };
                outputs.extend(interp_error_files(&cfg, &dir, method, &orders)?);
            }
        }
        "rmse" => {
            let table = run_rmse(&cfg)?;
            let text = table.to_csv(&cfg.hash());
            outputs.push(runio::write_text(&dir, "rmse.csv", &text)?);
            for row in &table.rows {
                println!(
                    "{}:{} snr {:>6.1} dB -> rmse {:?} ({} / {} trials)",
                    row.estimator, row.order, row.snr_db, row.rmse, row.trials_used, cfg.trials
                );
            }
        }
        "detect" => {
            let table = run_detect(&cfg)?;
            let text = table.to_csv(&cfg.hash());
            outputs.push(runio::write_text(&dir, "detect.csv", &text)?);
            for row in &table.rows {
                println!(
                    "{}:{} snr {:>6.1} dB -> p_detect {:.3} ({} trials found all components)",
                    row.estimator, row.order, row.snr_db, row.p_detect, row.trials_detected
                );
            }
        }
        "simulate" => {
            let snap = run_simulate(&cfg)?;
            let text = snap.to_csv()?;
            outputs.push(runio::write_text(&dir, "snapshots.csv", &text)?);
            println!(
                "wrote {} sensors x {} bins at noise variance {:.3e}",
                snap.config().num_sensors(),
                snap.config().num_indices(),
                snap.noise_var()
            );
        }
        other => return Err(format!("unknown subcommand `{other}`\n{USAGE}").into()),
    }

    let manifest = runio::write_manifest(&dir, &cli.command, &cfg, &outputs, start.elapsed())?;
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
