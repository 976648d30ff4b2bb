//! End-to-end checks of the `wdoa` binary: outputs exist, carry the hash
//! comment, and are byte-identical across reruns of the same seed.

use std::path::Path;
use std::process::Command;

fn wdoa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wdoa"))
}

fn tiny_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("exp.cfg");
    // Small array and band so the binary runs in well under a second.
    let text = format!(
        "sensors = 4\ncarrier_hz = 1.0e9\nbandwidth_hz = 1.0e8\ndft_len = 256\nr1 = -51\nr2 = 50\n\
         amplitudes = 1+0.5j\ndelays = 0\ngamma_true = 0.27\n\
         snr_grid_db = 20\nestimators = cheb-ml:5\ntrials = 4\nseed = 11\nsearch_order = 24\n{extra}"
    );
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn rmse_subcommand_reproducible() {
    let dir = std::env::temp_dir().join("wdoa_cli_rmse");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = tiny_config(&dir, "");

    let out_a = dir.join("a");
    let status = wdoa()
        .args(["rmse", "--config", &cfg, "--out", out_a.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let csv_a = std::fs::read_to_string(out_a.join("rmse.csv")).unwrap();
    assert!(csv_a.starts_with("# config_hash="));
    assert!(csv_a
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("estimator,order,snr_db"));

    let out_b = dir.join("b");
    let status = wdoa()
        .args(["rmse", "--config", &cfg, "--out", out_b.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let csv_b = std::fs::read_to_string(out_b.join("rmse.csv")).unwrap();
    assert_eq!(
        csv_a, csv_b,
        "same config and seed must give identical bytes"
    );

    // A different seed changes the numbers.
    let out_c = dir.join("c");
    let status = wdoa()
        .args([
            "rmse",
            "--config",
            &cfg,
            "--seed",
            "12",
            "--out",
            out_c.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let csv_c = std::fs::read_to_string(out_c.join("rmse.csv")).unwrap();
    assert_ne!(csv_a, csv_c);

    let manifest = std::fs::read_to_string(out_a.join("run_manifest.json")).unwrap();
    assert!(manifest.contains("\"command\": \"rmse\""));
    assert!(manifest.contains("\"config_hash\""));
}

#[test]
fn interp_error_subcommand_files() {
    let dir = std::env::temp_dir().join("wdoa_cli_interp");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = tiny_config(&dir, "");
    let out = dir.join("out");
    let status = wdoa()
        .args([
            "interp-error",
            "--config",
            &cfg,
            "--method",
            "cheb",
            "--orders",
            "3,5",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for name in [
        "interp_error_cheb_3.csv",
        "interp_error_cheb_5.csv",
        "interp_error_cheb_summary.csv",
        "interp_error_cheb_separation.csv",
    ] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert!(
            text.starts_with("# config_hash="),
            "{name} misses the hash row"
        );
        assert!(text.lines().count() > 2, "{name} has no data rows");
    }
    // Higher order, lower error.
    let summary = std::fs::read_to_string(out.join("interp_error_cheb_summary.csv")).unwrap();
    let rows: Vec<f64> = summary
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(rows[1] < rows[0]);
}

#[test]
fn simulate_fixture_round_trip() {
    let dir = std::env::temp_dir().join("wdoa_cli_sim");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = tiny_config(&dir, "");
    let out = dir.join("out");
    let status = wdoa()
        .args(["simulate", "--config", &cfg, "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("snapshots.csv")).unwrap();
    let snap = wdoa_core::SnapshotSet64::from_csv(&text).unwrap();
    assert_eq!(snap.config().num_sensors(), 4);
    assert_eq!(snap.config().num_indices(), 102);
}

#[test]
fn bad_usage_fails() {
    let status = wdoa().args(["no-such-command"]).status().unwrap();
    assert!(!status.success());
    let status = wdoa()
        .args(["rmse", "--config", "/definitely/not/here.cfg"])
        .status()
        .unwrap();
    assert!(!status.success());
}
