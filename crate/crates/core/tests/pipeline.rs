//! Cross-module integration: the full simulate-compress-search-refine
//! chain through the public API, the gamma-interpolant fidelity bound, and
//! detection calibration with components present.

use num_complex::Complex;
use wdoa_core::array_model::{ArrayConfig, DoaVector};
use wdoa_core::chebyshev::{cheb_fit, ChebGrid, Interval};
use wdoa_core::cost::{compress_cheb, cost_cheb};
use wdoa_core::estimator::{
    detect_step, run_detection_estimation, Decision, DetectorConfig, MvpOptions,
};
use wdoa_core::linalg::GaussianStream;
use wdoa_core::search1d::{beamformer_grid, extended_beamformer_value, SearchConfig};
use wdoa_core::signal_sim::{generate_snapshots, ScenarioConfig, ScenarioKind};

fn stock_array() -> ArrayConfig<f64> {
    let f_o = 2.4e9;
    let b = 0.1 * f_o;
    ArrayConfig::half_wavelength_ula(10, f_o, 2.99792458e8, 2048, 0.8 / b, -819, 818).unwrap()
}

fn stock_scenario(snr_db: f64, seed: u64) -> ScenarioConfig<f64> {
    ScenarioConfig::new(
        ScenarioKind::Independent,
        vec![
            Complex::new(0.626, 0.7798),
            Complex::new(-0.4432, -0.552),
            Complex::new(0.3138, 0.3908),
        ],
        vec![0.0, 0.6, 37.53],
        DoaVector::new(vec![-0.71, -0.63, 0.27]).unwrap(),
        0.2,
        2.4e8,
        snr_db,
        seed,
    )
    .unwrap()
}

#[test]
fn noisy_pipeline_recovers_the_scene() {
    let array = stock_array();
    let scenario = stock_scenario(25.0, 424244);
    let snap = generate_snapshots(&scenario, &array).unwrap();
    let corr = compress_cheb(&snap, 6).unwrap();
    let det = DetectorConfig::new(0.01, snap.noise_var())
        .unwrap()
        .with_snr_clamp(37.0);
    let result = run_detection_estimation(
        &corr,
        &det,
        &SearchConfig::default(),
        &MvpOptions::default(),
    )
    .unwrap();
    assert_eq!(result.k_hat, 3);
    for (got, want) in result.gamma_hat.as_slice().iter().zip([-0.71, -0.63, 0.27]) {
        assert!((got - want).abs() < 5e-3, "{got} vs {want}");
    }
    let json = result.to_json();
    assert!(json.contains("\"k_hat\":3"));
}

#[test]
fn gamma_interpolant_fidelity_bound() {
    // Interpolant against the direct node formula over a dense gamma grid,
    // normalized by the spectrum's dynamic range.
    let array = stock_array();
    let scenario = stock_scenario(15.0, 31);
    let snap = generate_snapshots(&scenario, &array).unwrap();
    let corr = compress_cheb(&snap, 6).unwrap();
    let search = SearchConfig::default(); // order 50
    let ps = beamformer_grid(&corr, &search).unwrap();

    let direct: Vec<f64> = (0..1000)
        .map(|i| {
            let g = -0.999 + 1.998 * i as f64 / 999.0;
            extended_beamformer_value(&corr, &DoaVector::empty(), g).unwrap()
        })
        .collect();
    let lo = direct.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = direct.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    assert!(range > 0.0);
    let mut worst = 0.0f64;
    for (i, d) in direct.iter().enumerate() {
        let g = -0.999 + 1.998 * i as f64 / 999.0;
        worst = worst.max((ps.eval(g) - d).abs() / range);
    }
    assert!(worst <= 1e-4, "interpolant fidelity {worst}");
}

#[test]
fn detection_calibrated_with_components_present() {
    // Testing at the true vector, the exceedance rate of the residual over
    // the threshold tracks the false-alarm probability.
    let array = stock_array();
    let gamma_true = DoaVector::new(vec![-0.71, -0.63, 0.27]).unwrap();
    let search = SearchConfig::default();
    let trials = 300usize;
    let mut exceed = 0usize;
    for t in 0..trials {
        let scenario = stock_scenario(10.0, 7_000 + t as u64);
        let snap = generate_snapshots(&scenario, &array).unwrap();
        let corr = compress_cheb(&snap, 8).unwrap();
        let det = DetectorConfig::new(0.01, snap.noise_var()).unwrap();
        match detect_step(&corr, &gamma_true, &det, &search).unwrap() {
            Decision::Add { .. } => exceed += 1,
            Decision::Stop { .. } => {}
        }
    }
    let rate = exceed as f64 / trials as f64;
    // Binomial three-sigma band around 0.01 for 300 trials is about
    // [0, 0.027]; allow the upper edge.
    assert!(
        rate <= 0.03,
        "exceedance rate {rate} far from the design 0.01"
    );
}

#[test]
fn generic_scalar_instantiates_at_f32() {
    // The numeric core is generic over the scalar; spot-check a few pieces
    // at f32 with tolerances matched to the narrower mantissa.
    let iv = Interval::<f32>::new(-1.0, 1.0).unwrap();
    let grid = ChebGrid::from_fn(iv, 12, |x| Complex::new((2.0 * x).cos(), 0.0)).unwrap();
    let series = cheb_fit(&grid);
    let got = series.eval(0.3).re;
    assert!(
        (got - (0.6f32).cos()).abs() < 1e-5,
        "f32 interpolation {got}"
    );

    let mut rng = GaussianStream::<f32>::new(9);
    let mean_sq: f32 = (0..10_000)
        .map(|_| rng.next_complex().norm_sqr())
        .sum::<f32>()
        / 10_000.0;
    assert!((mean_sq - 1.0).abs() < 0.05);

    let x = wdoa_core::linalg::chi2_inv_cdf(0.99f32, 2).unwrap();
    assert!((x - 9.2103f32).abs() < 1e-2);
}

#[test]
fn f64_aliases_compose() {
    // The crate-root aliases cover the main types end to end.
    let array: wdoa_core::ArrayConfig64 = stock_array();
    let scenario: wdoa_core::ScenarioConfig64 = stock_scenario(20.0, 5);
    let snap: wdoa_core::SnapshotSet64 = generate_snapshots(&scenario, &array).unwrap();
    let corr: wdoa_core::CorrSet64 = compress_cheb(&snap, 5).unwrap();
    let gamma: wdoa_core::DoaVector64 = DoaVector::new(vec![0.1]).unwrap();
    let value: f64 = cost_cheb(&corr, &gamma).unwrap();
    assert!(value.is_finite() && value > 0.0);
}
