//! Experiment drivers: projector interpolation-error sweeps, known-order
//! RMSE Monte-Carlo runs, detection-probability curves and fixture dumps.
//!
//! Trials fan out over a scoped worker pool; every trial derives its own
//! random stream from the master seed and its coordinates, so results do
//! not depend on scheduling and identical configurations give
//! byte-identical CSV output.

use wdoa_core::array_model::DoaVector;
use wdoa_core::cost::{
    amplitude_db, compress_bin, compress_cheb, interp_error_sweep, CompressionKind,
};
use wdoa_core::error::Error;
use wdoa_core::estimator::{estimate_known_k, run_detection_estimation, MvpOptions};
use wdoa_core::search1d::{locate_minima, music_pseudospectrum_grid};
use wdoa_core::signal_sim::{generate_snapshots, SnapshotSet};

use crate::config::{EstimatorKind, ExperimentConfig};

type Compressor<'a> =
    Box<dyn Fn(&SnapshotSet<f64>) -> Result<wdoa_core::cost::CorrSet<f64>, Error> + Sync + 'a>;

/// Deterministic per-trial seed from the master seed and the trial's
/// coordinates (SNR index, trial index). Estimators share the seed so they
/// see identical data.
pub fn trial_seed(master: u64, snr_index: u64, trial: u64) -> u64 {
    let mut z = master
        .wrapping_add(
            snr_index
                .wrapping_add(1)
                .wrapping_mul(0x9E37_79B9_7F4A_7C15),
        )
        .wrapping_add(trial.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `jobs` closures over a scoped thread pool, results in job order.
pub fn run_parallel<R: Send, F: Fn(usize) -> R + Sync>(jobs: usize, f: F) -> Vec<R> {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(jobs.max(1));
    if workers <= 1 {
        return (0..jobs).map(f).collect();
    }
    let mut out: Vec<Option<R>> = (0..jobs).map(|_| None).collect();
    let chunk = jobs.div_ceil(workers);
    std::thread::scope(|scope| {
        let mut rest = out.as_mut_slice();
        let mut start = 0usize;
        let f = &f;
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            let base = start;
            scope.spawn(move || {
                for (i, slot) in head.iter_mut().enumerate() {
                    *slot = Some(f(base + i));
                }
            });
            rest = tail;
            start += take;
        }
    });
    out.into_iter()
        .map(|r| r.expect("worker filled every slot"))
        .collect()
}

/// One estimator applied to one data set with a known component count.
pub fn estimate_trial(
    est: &EstimatorKind,
    snap: &SnapshotSet<f64>,
    k: usize,
    cfg: &ExperimentConfig,
    snr_db: f64,
) -> Result<DoaVector<f64>, Error> {
    let search = cfg
        .search_config()
        .map_err(|_| Error::InvalidArgument("search config"))?;
    let det = cfg
        .detector(snap.noise_var(), snr_db)
        .map_err(|_| Error::InvalidArgument("detector config"))?;
    let opts = MvpOptions::default();
    match est {
        EstimatorKind::ChebMl { order } => {
            let corr = compress_cheb(snap, *order)?;
            Ok(estimate_known_k(&corr, k, &det, &search, &opts)?.gamma_hat)
        }
        EstimatorKind::BinMl { bins } => {
            let corr = compress_bin(snap, *bins)?;
            Ok(estimate_known_k(&corr, k, &det, &search, &opts)?.gamma_hat)
        }
        EstimatorKind::IcMusic { bins } => {
            let corr = compress_bin(snap, *bins)?;
            let ps = music_pseudospectrum_grid(&corr, k, &search)?;
            let minima = locate_minima(&ps, k, &search).map_err(Error::from)?;
            let mut gammas: Vec<f64> = minima.iter().map(|m| m.gamma).collect();
            gammas.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            Ok(DoaVector::new(gammas)?)
        }
    }
}

/// One RMSE-table row.
#[derive(Debug, Clone)]
pub struct RmseRow {
    pub estimator: String,
    pub order: usize,
    pub snr_db: f64,
    /// Per-component RMSE, sorted-truth order.
    pub rmse: Vec<f64>,
    pub trials_used: usize,
    pub detected_fraction: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RmseTable {
    pub rows: Vec<RmseRow>,
}

impl RmseTable {
    pub fn to_csv(&self, config_hash: &str) -> String {
        let k = self.rows.iter().map(|r| r.rmse.len()).max().unwrap_or(0);
        let mut out = format!("# config_hash={config_hash}\n");
        let comps: Vec<String> = (1..=k).map(|i| format!("rmse_gamma{i}")).collect();
        out.push_str(&format!(
            "estimator,order,snr_db,{},trials_used,detected_fraction\n",
            comps.join(",")
        ));
        for row in &self.rows {
            let rmse: Vec<String> = (0..k)
                .map(|i| {
                    row.rmse
                        .get(i)
                        .map(|v| format!("{v:?}"))
                        .unwrap_or_default()
                })
                .collect();
            out.push_str(&format!(
                "{},{},{:?},{},{},{:?}\n",
                row.estimator,
                row.order,
                row.snr_db,
                rmse.join(","),
                row.trials_used,
                row.detected_fraction
            ));
        }
        out
    }
}

/// Sorted-order component matching: both vectors ascending, elementwise
/// squared errors.
fn squared_errors(estimate: &DoaVector<f64>, truth: &[f64]) -> Vec<f64> {
    let mut sorted_truth = truth.to_vec();
    sorted_truth.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    estimate
        .sorted()
        .as_slice()
        .iter()
        .zip(&sorted_truth)
        .map(|(e, t)| (e - t) * (e - t))
        .collect()
}

/// Known-order RMSE sweep over the SNR grid for every configured
/// estimator. Failed trials (rank collapse, minima shortage) are excluded
/// and counted through `trials_used`.
pub fn run_rmse(cfg: &ExperimentConfig) -> Result<RmseTable, Error> {
    let array = cfg
        .array_config()
        .map_err(|_| Error::InvalidArgument("array config"))?;
    let k = cfg.gamma_true.len();
    let mut table = RmseTable::default();
    for (snr_idx, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        // Generate each trial's data once, shared by all estimators.
        let snaps: Vec<SnapshotSet<f64>> = run_parallel(cfg.trials, |t| {
            let seed = trial_seed(cfg.seed, snr_idx as u64, t as u64);
            let scenario = cfg.scenario(snr_db, seed).expect("validated configuration");
            generate_snapshots(&scenario, &array).expect("generation cannot fail on valid configs")
        });
        for est in &cfg.estimators {
            let results = run_parallel(cfg.trials, |t| {
                estimate_trial(est, &snaps[t], k, cfg, snr_db)
                    .map(|g| squared_errors(&g, &cfg.gamma_true))
            });
            let mut acc = vec![0.0f64; k];
            let mut used = 0usize;
            for r in results.into_iter().flatten() {
                for (a, e) in acc.iter_mut().zip(&r) {
                    *a += e;
                }
                used += 1;
            }
            let rmse = acc
                .iter()
                .map(|s| {
                    if used > 0 {
                        (s / used as f64).sqrt()
                    } else {
                        f64::NAN
                    }
                })
                .collect();
            table.rows.push(RmseRow {
                estimator: est.label().to_string(),
                order: est.order(),
                snr_db,
                rmse,
                trials_used: used,
                detected_fraction: used as f64 / cfg.trials as f64,
            });
        }
    }
    Ok(table)
}

/// One detection-curve row.
#[derive(Debug, Clone)]
pub struct DetectRow {
    pub estimator: String,
    pub order: usize,
    pub snr_db: f64,
    pub p_detect: f64,
    /// Per-component RMSE over the trials that detected the true count.
    pub rmse: Vec<f64>,
    pub trials_detected: usize,
}

#[derive(Debug, Clone, Default)]
pub struct DetectTable {
    pub rows: Vec<DetectRow>,
}

impl DetectTable {
    pub fn to_csv(&self, config_hash: &str) -> String {
        let k = self.rows.iter().map(|r| r.rmse.len()).max().unwrap_or(0);
        let mut out = format!("# config_hash={config_hash}\n");
        let comps: Vec<String> = (1..=k).map(|i| format!("rmse_db_gamma{i}")).collect();
        out.push_str(&format!(
            "estimator,order,snr_db,p_detect,{},trials_detected\n",
            comps.join(",")
        ));
        for row in &self.rows {
            let rmse: Vec<String> = (0..k)
                .map(|i| {
                    row.rmse
                        .get(i)
                        .map(|v| format!("{:?}", amplitude_db(*v)))
                        .unwrap_or_default()
                })
                .collect();
            out.push_str(&format!(
                "{},{},{:?},{:?},{},{}\n",
                row.estimator,
                row.order,
                row.snr_db,
                row.p_detect,
                rmse.join(","),
                row.trials_detected
            ));
        }
        out
    }
}

/// Detection-probability sweep: the full threshold-test loop with unknown
/// component count, per SNR and per ML estimator (incoherent MUSIC has no
/// detection step and is skipped).
pub fn run_detect(cfg: &ExperimentConfig) -> Result<DetectTable, Error> {
    let array = cfg
        .array_config()
        .map_err(|_| Error::InvalidArgument("array config"))?;
    let k_true = cfg.gamma_true.len();
    let search = cfg
        .search_config()
        .map_err(|_| Error::InvalidArgument("search config"))?;
    let opts = MvpOptions::default();
    let mut table = DetectTable::default();
    for (snr_idx, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        for est in &cfg.estimators {
            let compress: Compressor = match est {
                EstimatorKind::ChebMl { order } => {
                    let order = *order;
                    Box::new(move |s: &SnapshotSet<f64>| compress_cheb(s, order))
                }
                EstimatorKind::BinMl { bins } => {
                    let bins = *bins;
                    Box::new(move |s: &SnapshotSet<f64>| compress_bin(s, bins))
                }
                EstimatorKind::IcMusic { .. } => continue,
            };
            let results = run_parallel(cfg.trials, |t| {
                let seed = trial_seed(cfg.seed, snr_idx as u64, t as u64);
                let scenario = cfg.scenario(snr_db, seed).expect("validated configuration");
                let snap = generate_snapshots(&scenario, &array)
                    .expect("generation cannot fail on valid configs");
                let corr = compress(&snap)?;
                let det = cfg
                    .detector(snap.noise_var(), snr_db)
                    .map_err(|_| Error::InvalidArgument("detector config"))?;
                let result = run_detection_estimation(&corr, &det, &search, &opts)?;
                Ok::<_, Error>((result.k_hat, result.gamma_hat))
            });
            let mut detected = 0usize;
            let mut acc = vec![0.0f64; k_true];
            for r in results.into_iter().flatten() {
                if r.0 == k_true {
                    detected += 1;
                    for (a, e) in acc.iter_mut().zip(squared_errors(&r.1, &cfg.gamma_true)) {
                        *a += e;
                    }
                }
            }
            let rmse = acc
                .iter()
                .map(|s| {
                    if detected > 0 {
                        (s / detected as f64).sqrt()
                    } else {
                        f64::NAN
                    }
                })
                .collect();
            table.rows.push(DetectRow {
                estimator: est.label().to_string(),
                order: est.order(),
                snr_db,
                p_detect: detected as f64 / cfg.trials as f64,
                rmse,
                trials_detected: detected,
            });
        }
    }
    Ok(table)
}

/// Per-order interpolation-error curves (`(r, error_db)` rows), plus their
/// maxima and a two-wave separation sweep.
#[derive(Debug, Clone)]
pub struct InterpErrorReport {
    pub method: CompressionKind,
    /// `(order, per-index curve)` pairs.
    pub curves: Vec<(usize, Vec<(i64, f64)>)>,
    /// `(order, max_error_db)` summary.
    pub summary: Vec<(usize, f64)>,
    /// `(order, delta, max_error_db)` separation sweep rows.
    pub separation: Vec<(usize, f64, f64)>,
}

pub fn method_name(kind: CompressionKind) -> &'static str {
    match kind {
        CompressionKind::Chebyshev => "cheb",
        CompressionKind::Bin => "bin",
    }
}

/// Sweeps the projector interpolation error for each order: across the
/// whole band at the configured arrival parameters, and across the two-wave
/// separation grid (first wave anchored at the scenario's first arrival,
/// second at `gamma_1 + delta` for `delta` in [0.02, 1.0]).
pub fn run_interp_error(
    cfg: &ExperimentConfig,
    method: CompressionKind,
    orders: &[usize],
) -> Result<InterpErrorReport, Error> {
    let array = cfg
        .array_config()
        .map_err(|_| Error::InvalidArgument("array config"))?;
    let gamma = DoaVector::new(cfg.gamma_true.clone())?;
    let curves = run_parallel(orders.len(), |i| {
        let sweep = interp_error_sweep(&array, &gamma, method, orders[i])?;
        let curve: Vec<(i64, f64)> = sweep
            .per_index()
            .iter()
            .map(|(r, e)| (*r, amplitude_db(*e)))
            .collect();
        Ok::<_, Error>((orders[i], curve, sweep.max_error_db()))
    })
    .into_iter()
    .collect::<Result<Vec<_>, Error>>()?;

    let anchor = *cfg.gamma_true.first().unwrap_or(&-0.71);
    let deltas: Vec<f64> = (0..50).map(|i| 0.02 + i as f64 * 0.02).collect();
    let mut separation = Vec::new();
    for &order in orders {
        let rows = run_parallel(deltas.len(), |i| {
            let delta = deltas[i];
            let second = (anchor + delta).clamp(-1.0, 1.0);
            let pair = DoaVector::new(vec![anchor, second])?;
            let sweep = interp_error_sweep(&array, &pair, method, order)?;
            Ok::<_, Error>((order, delta, sweep.max_error_db()))
        })
        .into_iter()
        .collect::<Result<Vec<_>, Error>>()?;
        separation.extend(rows);
    }

    Ok(InterpErrorReport {
        method,
        summary: curves.iter().map(|(o, _, m)| (*o, *m)).collect(),
        curves: curves.into_iter().map(|(o, c, _)| (o, c)).collect(),
        separation,
    })
}

/// Generates one snapshot fixture at the first grid SNR.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SnapshotSet<f64>, Error> {
    let array = cfg
        .array_config()
        .map_err(|_| Error::InvalidArgument("array config"))?;
    let snr_db = cfg.snr_grid_db[0];
    let scenario = cfg
        .scenario(snr_db, trial_seed(cfg.seed, 0, 0))
        .map_err(|_| Error::InvalidArgument("scenario config"))?;
    generate_snapshots(&scenario, &array)
}
