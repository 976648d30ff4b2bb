//! Detection-estimation loop on the compressed DML cost.
//!
//! Starting from an empty parameter vector, a chi-square residual test
//! decides whether another wave is present; if so, its initial location is
//! the deepest minimum of the fixed-component beamformer, and a
//! Gauss-Newton refinement (variable-projection form: the gradient and
//! approximate Hessian come out of per-abscissa thin QR factors, with
//! neither the pseudo-inverse nor the projector ever formed) polishes the
//! enlarged vector. The loop stops when the test fails. A known-component
//! variant runs exactly `K` add-and-refine rounds with no test.

use num_complex::Complex;

use crate::array_model::{steering_derivative, steering_matrix, DoaVector};
use crate::cost::{compressed_cost, CorrSet};
use crate::error::{Error, Result};
use crate::linalg::{chi2_inv_cdf, thin_qr, CMatrix};
use crate::num::{real, real_from_usize, Real};
use crate::search1d::{extended_beamformer_grid, locate_minima, SearchConfig};

/// Separation below which arrival parameters count as coincident.
pub const DISTINCT_TOL: f64 = 1e-9;

/// Chi-square detector parameters.
#[derive(Debug, Clone)]
pub struct DetectorConfig<T> {
    p_fa: T,
    noise_var: T,
    snr_clamp_db: Option<T>,
}

impl<T: Real> DetectorConfig<T> {
    pub fn new(p_fa: T, noise_var: T) -> Result<Self> {
        if !(p_fa > T::zero() && p_fa < T::one()) {
            return Err(Error::InvalidArgument(
                "false-alarm probability must lie in (0, 1)",
            ));
        }
        if !(noise_var > T::zero()) {
            return Err(Error::InvalidArgument("noise variance must be positive"));
        }
        Ok(Self {
            p_fa,
            noise_var,
            snr_clamp_db: None,
        })
    }

    /// Above `clamp_db` of SNR, the test keeps the noise variance at the
    /// clamp level: at very high SNR the residual of the fitted model is
    /// dominated by the parameterization mismatch rather than noise, and an
    /// unclamped test would keep detecting spurious components.
    pub fn with_snr_clamp(mut self, clamp_db: T) -> Self {
        self.snr_clamp_db = Some(clamp_db);
        self
    }

    pub fn p_fa(&self) -> T {
        self.p_fa
    }

    pub fn noise_var(&self) -> T {
        self.noise_var
    }

    pub fn snr_clamp_db(&self) -> Option<T> {
        self.snr_clamp_db
    }

    /// Noise variance the test should use for data generated at `snr_db`.
    pub fn effective_noise_var(&self, snr_db: T) -> T {
        match self.snr_clamp_db {
            Some(clamp) if snr_db > clamp => {
                self.noise_var * real::<T>(10.0).powf((snr_db - clamp) / real(10.0))
            }
            _ => self.noise_var,
        }
    }
}

/// Gauss-Newton refinement controls.
#[derive(Debug, Clone)]
pub struct MvpOptions<T> {
    /// Stop when the relative cost decrease falls below this.
    pub cost_tol: T,
    pub max_iter: usize,
    /// Step-halving budget per iteration.
    pub max_halvings: usize,
}

impl<T: Real> Default for MvpOptions<T> {
    fn default() -> Self {
        Self {
            cost_tol: real(1e-10),
            max_iter: 50,
            max_halvings: 30,
        }
    }
}

/// State after a refinement run.
#[derive(Debug, Clone)]
pub struct MvpState<T> {
    pub gamma: DoaVector<T>,
    /// Accepted iterations (steps that reduced the cost beyond tolerance).
    pub iterations: usize,
    pub cost: T,
    /// Step scale of the last accepted iteration.
    pub step_scale: T,
    /// Cost after each accepted iteration, starting with the initial cost.
    pub cost_trace: Vec<T>,
    /// Whether the Hessian solve needed Levenberg-style regularization.
    pub regularized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Detect,
    Refine,
}

/// One row of an estimation run's audit trail.
#[derive(Debug, Clone)]
pub struct TraceEntry<T> {
    pub kind: StepKind,
    pub k: usize,
    pub alpha: usize,
    pub cost: T,
    pub threshold: Option<T>,
    pub exceeded: Option<bool>,
}

/// Final estimate with its audit trail.
#[derive(Debug, Clone)]
pub struct EstimationResult<T> {
    pub gamma_hat: DoaVector<T>,
    pub k_hat: usize,
    pub trace: Vec<TraceEntry<T>>,
    pub converged: bool,
}

impl<T: Real> EstimationResult<T> {
    /// JSON rendering of the result and trace.
    pub fn to_json(&self) -> String {
        let gammas = self
            .gamma_hat
            .as_slice()
            .iter()
            .map(|g| format!("{g:?}"))
            .collect::<Vec<_>>()
            .join(",");
        let trace = self
            .trace
            .iter()
            .map(|t| {
                let kind = match t.kind {
                    StepKind::Detect => "detect",
                    StepKind::Refine => "refine",
                };
                let threshold = match &t.threshold {
                    Some(v) => format!("{v:?}"),
                    None => "null".to_string(),
                };
                let exceeded = match &t.exceeded {
                    Some(b) => b.to_string(),
                    None => "null".to_string(),
                };
                format!(
                    "{{\"step\":\"{kind}\",\"k\":{},\"alpha\":{},\"cost\":{:?},\"threshold\":{threshold},\"exceeded\":{exceeded}}}",
                    t.k, t.alpha, t.cost
                )
            })
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "{{\"gamma_hat\":[{gammas}],\"k_hat\":{},\"converged\":{},\"trace\":[{trace}]}}",
            self.k_hat, self.converged
        )
    }
}

/// Detection threshold `A = (sigma^2 / 2) F^{-1}(1 - P_FA)` for the
/// chi-square residual with `2 (M - K) n_idx` degrees of freedom.
///
/// The degrees of freedom are those of the full per-index residual sum;
/// applying them to the compressed cost is an approximation, valid because
/// the compression reproduces that sum to well within the test's
/// resolution at the orders used here.
pub fn detection_threshold<T: Real>(
    det: &DetectorConfig<T>,
    sensors: usize,
    k: usize,
    n_idx: usize,
) -> Result<T> {
    if k >= sensors {
        return Err(Error::InvalidArgument(
            "component count must stay below the sensor count",
        ));
    }
    if n_idx == 0 {
        return Err(Error::InvalidArgument("index count must be positive"));
    }
    let dof = 2 * (sensors - k) * n_idx;
    Ok(det.noise_var * real::<T>(0.5) * chi2_inv_cdf(T::one() - det.p_fa, dof)?)
}

/// Outcome of one detection step.
#[derive(Debug, Clone)]
pub enum Decision<T> {
    /// Residual under the threshold (or no candidate minimum found):
    /// the current vector is final.
    Stop {
        cost: T,
        threshold: T,
        minima_shortage: bool,
    },
    /// Residual exceeded the threshold; `gamma_new` is the deepest minimum
    /// of the fixed-component beamformer.
    Add { gamma_new: T, cost: T, threshold: T },
}

/// Tests the current residual and, when it exceeds the threshold, locates
/// the next candidate component by the DCT zero-padding search.
pub fn detect_step<T: Real>(
    corr: &CorrSet<T>,
    gamma_current: &DoaVector<T>,
    det: &DetectorConfig<T>,
    search: &SearchConfig<T>,
) -> Result<Decision<T>> {
    let cfg = corr.config();
    let cost = compressed_cost(corr, gamma_current)?;
    let threshold = detection_threshold(
        det,
        cfg.num_sensors(),
        gamma_current.len(),
        cfg.num_indices(),
    )?;
    if cost < threshold {
        return Ok(Decision::Stop {
            cost,
            threshold,
            minima_shortage: false,
        });
    }
    let ps = extended_beamformer_grid(corr, gamma_current, search)?;
    match locate_minima(&ps, 1, search) {
        Ok(minima) => Ok(Decision::Add {
            gamma_new: minima[0].gamma,
            cost,
            threshold,
        }),
        Err(_) => Ok(Decision::Stop {
            cost,
            threshold,
            minima_shortage: true,
        }),
    }
}

/// Solves a dense real system by Gaussian elimination with partial
/// pivoting; `None` when the pivot collapses.
fn solve_real<T: Real>(a: &[T], n: usize, b: &[T]) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() < real(1e-300) {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let upd = m[col * n + j] * f;
                m[r * n + j] -= upd;
            }
            let upd = x[col] * f;
            x[r] -= upd;
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in (col + 1)..n {
            acc -= m[col * n + j] * x[j];
        }
        x[col] = acc / m[col * n + col];
    }
    Some(x)
}

/// Back-substitution `R y = b` for upper-triangular `R` (thin-QR factor).
fn solve_upper<T: Real>(r: &CMatrix<T>, b: &[Complex<T>]) -> Vec<Complex<T>> {
    let k = r.cols();
    let mut y = b.to_vec();
    for i in (0..k).rev() {
        let mut acc = y[i];
        for j in (i + 1)..k {
            acc -= r[(i, j)] * y[j];
        }
        y[i] = acc / r[(i, i)];
    }
    y
}

/// Gradient and Gauss-Newton Hessian of the compressed cost at `gamma`.
///
/// Per abscissa, with `A = Q1 Rfac`:
///   gradient_k = -2 Re diag{ Rfac^{-1} [Q1^H R D - (Q1^H R Q1)(Q1^H D)] }_k
///   Hessian    =  2 Re{ (D^H D - W^H W)^T o (Rfac^{-1} S Rfac^{-H}) }
/// where `W = Q1^H D` and `S = Q1^H R Q1`. The Hessian is assembled from
/// its upper triangle, so the returned matrix is exactly symmetric.
pub fn mvp_gradient_hessian<T: Real>(
    corr: &CorrSet<T>,
    gamma: &DoaVector<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let k = gamma.len();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "gradient needs at least one component",
        ));
    }
    let cfg = corr.config();
    let mut grad = vec![T::zero(); k];
    let mut hess_c = vec![Complex::new(T::zero(), T::zero()); k * k];

    for p in 0..corr.order() {
        let rho = corr.abscissas()[p];
        let r_mat = &corr.matrices()[p];
        let a = steering_matrix(cfg, rho, gamma);
        let d = steering_derivative(cfg, rho, gamma);
        let f = thin_qr(&a)?;
        let q1h = f.q1.hermitian_transpose();
        let w = q1h.mul(&d); // K x K
        let c1 = q1h.mul(r_mat); // K x M
        let g_mat = c1.mul(&d); // K x K
        let s_mat = c1.mul(&f.q1); // K x K
        let x1 = g_mat.sub(&s_mat.mul(&w)); // Q1^H R P_perp D

        // Gradient: diag of Rfac^{-1} X1.
        for col in 0..k {
            let b = x1.column(col);
            let y = solve_upper(&f.rfac, &b);
            grad[col] -= real::<T>(2.0) * y[col].re;
        }

        // D^H P_perp D = D^H D - W^H W.
        let dhd = d.hermitian_transpose().mul(&d);
        let whw = w.hermitian_transpose().mul(&w);
        let dpd = dhd.sub(&whw);

        // Z = Rfac^{-1} S Rfac^{-H}: solve on columns, then on rows.
        let mut v = CMatrix::zeros(k, k);
        for col in 0..k {
            let y = solve_upper(&f.rfac, &s_mat.column(col));
            for row in 0..k {
                v[(row, col)] = y[row];
            }
        }
        let vh = v.hermitian_transpose();
        let mut z = CMatrix::zeros(k, k);
        for col in 0..k {
            let y = solve_upper(&f.rfac, &vh.column(col));
            for row in 0..k {
                z[(col, row)] = y[row].conj();
            }
        }

        for i in 0..k {
            for j in i..k {
                hess_c[i * k + j] += dpd[(j, i)] * z[(i, j)];
            }
        }
    }

    let mut hess = vec![T::zero(); k * k];
    for i in 0..k {
        for j in i..k {
            let v = real::<T>(2.0) * hess_c[i * k + j].re;
            hess[i * k + j] = v;
            hess[j * k + i] = v;
        }
    }
    Ok((grad, hess))
}

/// Refines `gamma_init` by damped Gauss-Newton iterations on the compressed
/// cost: full steps first, halving the scale until the cost decreases, and
/// stopping when the relative decrease drops below tolerance or under the
/// evaluation noise floor (a few ulps of the total trace, below which a
/// "decrease" is indistinguishable from rounding). A failed or
/// non-positive-definite Hessian solve is retried with a Levenberg-style
/// diagonal shift and flagged.
pub fn mvp_refine<T: Real>(
    corr: &CorrSet<T>,
    gamma_init: &DoaVector<T>,
    opts: &MvpOptions<T>,
) -> Result<MvpState<T>> {
    gamma_init.ensure_distinct(real(DISTINCT_TOL))?;
    let k = gamma_init.len();
    let mut gamma = gamma_init.clone();
    let mut cost = compressed_cost(corr, &gamma)?;
    let mut cost_trace = vec![cost];
    let mut iterations = 0usize;
    let mut step_scale = T::one();
    let mut regularized = false;

    if k == 0 {
        return Ok(MvpState {
            gamma,
            iterations,
            cost,
            step_scale,
            cost_trace,
            regularized,
        });
    }
    let noise_floor = corr.trace_sum().abs() * T::epsilon() * real(4.0);

    'outer: for _ in 0..opts.max_iter {
        let (grad, hess) = mvp_gradient_hessian(corr, &gamma)?;
        let mut direction = solve_real(&hess, k, &grad);
        if direction.is_none() {
            // Levenberg shift scaled to the Hessian trace.
            let tr: T = (0..k).map(|i| hess[i * k + i]).sum();
            let mut lambda =
                real::<T>(1e-8) * tr.abs().max(T::min_positive_value()) / real_from_usize::<T>(k);
            for _ in 0..12 {
                let mut shifted = hess.clone();
                for i in 0..k {
                    shifted[i * k + i] += lambda;
                }
                direction = solve_real(&shifted, k, &grad);
                if direction.is_some() {
                    regularized = true;
                    break;
                }
                lambda *= real(10.0);
            }
        }
        let Some(direction) = direction else {
            break;
        };

        let mut mu = T::one();
        for _halving in 0..=opts.max_halvings {
            let candidate: Vec<T> = gamma
                .as_slice()
                .iter()
                .zip(&direction)
                .map(|(g, d)| (*g - mu * *d).max(-T::one()).min(T::one()))
                .collect();
            let next = match DoaVector::new(candidate) {
                Ok(v) => v,
                Err(_) => {
                    mu *= real(0.5);
                    continue;
                }
            };
            let next_cost = match compressed_cost(corr, &next) {
                Ok(c) if c.is_finite() => c,
                _ => {
                    // Coincident or otherwise degenerate candidate.
                    mu *= real(0.5);
                    continue;
                }
            };
            if next_cost <= cost {
                let decrease = cost - next_cost;
                if decrease < opts.cost_tol * cost.abs().max(T::min_positive_value())
                    || decrease <= noise_floor
                {
                    // No significant reduction left.
                    break 'outer;
                }
                gamma = next;
                cost = next_cost;
                cost_trace.push(cost);
                iterations += 1;
                step_scale = mu;
                continue 'outer;
            }
            mu *= real(0.5);
        }
        // Exhausted the halving budget without a decrease.
        break;
    }

    Ok(MvpState {
        gamma,
        iterations,
        cost,
        step_scale,
        cost_trace,
        regularized,
    })
}

/// Full detection-estimation loop from the empty vector. Returns the
/// estimate sorted ascending with the audit trail; errors with
/// [`Error::ModelSaturated`] if the test still fires at `K = M - 1`.
pub fn run_detection_estimation<T: Real>(
    corr: &CorrSet<T>,
    det: &DetectorConfig<T>,
    search: &SearchConfig<T>,
    opts: &MvpOptions<T>,
) -> Result<EstimationResult<T>> {
    let sensors = corr.config().num_sensors();
    let mut gamma = DoaVector::empty();
    let mut trace = Vec::new();
    let converged;
    loop {
        match detect_step(corr, &gamma, det, search)? {
            Decision::Stop {
                cost,
                threshold,
                minima_shortage,
            } => {
                trace.push(TraceEntry {
                    kind: StepKind::Detect,
                    k: gamma.len(),
                    alpha: 0,
                    cost,
                    threshold: Some(threshold),
                    exceeded: Some(false),
                });
                converged = !minima_shortage;
                break;
            }
            Decision::Add {
                gamma_new,
                cost,
                threshold,
            } => {
                trace.push(TraceEntry {
                    kind: StepKind::Detect,
                    k: gamma.len(),
                    alpha: 0,
                    cost,
                    threshold: Some(threshold),
                    exceeded: Some(true),
                });
                if gamma.len() == sensors - 1 {
                    return Err(Error::ModelSaturated {
                        max_components: sensors - 1,
                    });
                }
                gamma = gamma.appended(gamma_new)?;
                let state = mvp_refine(corr, &gamma, opts)?;
                gamma = state.gamma;
                trace.push(TraceEntry {
                    kind: StepKind::Refine,
                    k: gamma.len(),
                    alpha: state.iterations,
                    cost: state.cost,
                    threshold: None,
                    exceeded: None,
                });
            }
        }
    }
    let k_hat = gamma.len();
    Ok(EstimationResult {
        gamma_hat: gamma.sorted(),
        k_hat,
        trace,
        converged,
    })
}

/// Exactly `k` add-and-refine rounds with no statistical test; the trace
/// still records the threshold comparison for inspection.
pub fn estimate_known_k<T: Real>(
    corr: &CorrSet<T>,
    k: usize,
    det: &DetectorConfig<T>,
    search: &SearchConfig<T>,
    opts: &MvpOptions<T>,
) -> Result<EstimationResult<T>> {
    let sensors = corr.config().num_sensors();
    if k >= sensors {
        return Err(Error::InvalidArgument(
            "component count must stay below the sensor count",
        ));
    }
    let mut gamma = DoaVector::empty();
    let mut trace = Vec::new();
    for round in 0..k {
        let cost = compressed_cost(corr, &gamma)?;
        let threshold =
            detection_threshold(det, sensors, gamma.len(), corr.config().num_indices())?;
        trace.push(TraceEntry {
            kind: StepKind::Detect,
            k: gamma.len(),
            alpha: 0,
            cost,
            threshold: Some(threshold),
            exceeded: Some(cost > threshold),
        });
        let ps = extended_beamformer_grid(corr, &gamma, search)?;
        let minima = locate_minima(&ps, 1, search).map_err(|_| Error::MinimaShortage {
            requested: k,
            found: round,
        })?;
        gamma = gamma.appended(minima[0].gamma)?;
        let state = mvp_refine(corr, &gamma, opts)?;
        gamma = state.gamma;
        trace.push(TraceEntry {
            kind: StepKind::Refine,
            k: gamma.len(),
            alpha: state.iterations,
            cost: state.cost,
            threshold: None,
            exceeded: None,
        });
    }
    let k_hat = gamma.len();
    Ok(EstimationResult {
        gamma_hat: gamma.sorted(),
        k_hat,
        trace,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::tests::reference_config;
    use crate::array_model::ArrayConfig;
    use crate::cost::{compress_cheb, cost_cheb};
    use crate::linalg::GaussianStream;
    use crate::signal_sim::tests::reference_scenario;
    use crate::signal_sim::{generate_snapshots, ScenarioConfig, ScenarioKind};

    fn det(noise_var: f64) -> DetectorConfig<f64> {
        DetectorConfig::new(0.01, noise_var).unwrap()
    }

    fn small_noise_config() -> ArrayConfig<f64> {
        let f_o = 1.0e9;
        ArrayConfig::half_wavelength_ula(4, f_o, 3e8, 64, 0.8 / (0.25 * f_o), -8, 8).unwrap()
    }

    #[test]
    fn threshold_closed_form_and_scaling() {
        // dof = 2 when M - K = 1 and a single index.
        let d = det(3.0);
        let a = detection_threshold(&d, 2, 1, 1).unwrap();
        let want = 3.0 / 2.0 * (-2.0 * 0.01f64.ln());
        assert!((a - want).abs() < 1e-6 * want);

        // Degrees-of-freedom arithmetic for the stock configuration.
        let d1 = det(1.0);
        let a1 = detection_threshold(&d1, 10, 3, 1638).unwrap();
        let direct = 0.5 * chi2_inv_cdf(0.99, 22932).unwrap();
        assert!((a1 - direct).abs() < 1e-9 * direct);

        // Linear in the noise variance.
        let d2 = det(2.0);
        let a2 = detection_threshold(&d2, 10, 3, 1638).unwrap();
        assert!((a2 - 2.0 * a1).abs() < 1e-9 * a2);

        assert!(detection_threshold(&d1, 4, 4, 10).is_err());
    }

    #[test]
    fn snr_clamp() {
        let d = det(1.0).with_snr_clamp(37.0);
        assert_eq!(d.effective_noise_var(30.0), 1.0);
        let high = d.effective_noise_var(47.0);
        assert!((high - 10.0).abs() < 1e-12);
    }

    #[test]
    fn detect_noiseless_single_source() {
        let cfg = reference_config();
        let sc = ScenarioConfig::new(
            ScenarioKind::Independent,
            vec![Complex::new(0.8, -0.3)],
            vec![0.0],
            DoaVector::new(vec![0.27]).unwrap(),
            0.2,
            0.8 / cfg.sample_period(),
            f64::INFINITY,
            71,
        )
        .unwrap();
        let snap = generate_snapshots(&sc, &cfg).unwrap();
        let corr = compress_cheb(&snap, 6).unwrap();
        // Threshold far below the data energy but above the residual left
        // by the order-6 compression.
        let d = det(1e-9 * snap.total_energy());
        let search = SearchConfig::default();

        match detect_step(&corr, &DoaVector::empty(), &d, &search).unwrap() {
            Decision::Add { gamma_new, .. } => {
                assert!(
                    (gamma_new - 0.27).abs() < 1e-3,
                    "pre-refinement location {gamma_new}"
                );
            }
            other => panic!("expected Add, got {other:?}"),
        }
        // At the true vector the residual is zero: stop.
        match detect_step(&corr, sc.gamma_true(), &d, &search).unwrap() {
            Decision::Stop {
                minima_shortage, ..
            } => assert!(!minima_shortage),
            other => panic!("expected Stop, got {other:?}"),
        }
    }

    #[test]
    fn false_alarm_rate_sanity() {
        // Small array, pure noise: the stop probability tracks 1 - P_FA.
        let cfg = small_noise_config();
        let trials = 400;
        let mut alarms = 0;
        let search = SearchConfig::new(16, 2).unwrap();
        for t in 0..trials {
            let sc = ScenarioConfig::new(
                ScenarioKind::Independent,
                vec![],
                vec![],
                DoaVector::empty(),
                0.2,
                0.25e9,
                0.0,
                9000 + t,
            )
            .unwrap();
            let snap = generate_snapshots(&sc, &cfg).unwrap();
            let corr = compress_cheb(&snap, 4).unwrap();
            let d = det(snap.noise_var());
            match detect_step(&corr, &DoaVector::empty(), &d, &search).unwrap() {
                Decision::Add { .. } => alarms += 1,
                Decision::Stop { .. } => {}
            }
        }
        let rate = alarms as f64 / trials as f64;
        // 3-sigma binomial band around 0.01 for 400 trials, plus slack.
        assert!(rate < 0.035, "false-alarm rate {rate}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = small_noise_config();
        let mut rng = GaussianStream::<f64>::new(72);
        let mut checked = 0;
        for trial in 0..40 {
            let sc = ScenarioConfig::new(
                ScenarioKind::Independent,
                vec![],
                vec![],
                DoaVector::empty(),
                0.2,
                0.25e9,
                0.0,
                7000 + trial,
            )
            .unwrap();
            let snap = generate_snapshots(&sc, &cfg).unwrap();
            let corr = compress_cheb(&snap, 5).unwrap();
            let g1 = rng.next_uniform() * 1.8 - 0.9;
            let g2 = rng.next_uniform() * 1.8 - 0.9;
            if (g1 - g2).abs() < 0.05 {
                continue;
            }
            let gamma = DoaVector::new(vec![g1, g2]).unwrap();
            let (grad, hess) = mvp_gradient_hessian(&corr, &gamma).unwrap();

            let h = 1e-5;
            let mut fd = [0.0; 2];
            for k in 0..2 {
                let mut up = vec![g1, g2];
                let mut dn = vec![g1, g2];
                up[k] += h;
                dn[k] -= h;
                let cu = cost_cheb(&corr, &DoaVector::new(up).unwrap()).unwrap();
                let cd = cost_cheb(&corr, &DoaVector::new(dn).unwrap()).unwrap();
                fd[k] = (cu - cd) / (2.0 * h);
            }
            let scale = fd.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-9);
            for k in 0..2 {
                assert!(
                    (grad[k] - fd[k]).abs() / scale < 1e-5,
                    "component {k}: analytic {} vs fd {}",
                    grad[k],
                    fd[k]
                );
            }
            // Exact symmetry by construction.
            assert_eq!(hess[1], hess[2]);
            checked += 1;
        }
        assert!(checked >= 20, "only {checked} random instances checked");
    }

    #[test]
    fn stationary_at_truth_and_positive_definite_nearby() {
        let cfg = reference_config();
        let sc = reference_scenario(f64::INFINITY, 73);
        let snap = generate_snapshots(&sc, &cfg).unwrap();
        // High order: the compression residual at the truth sits at the
        // floating-point floor, making the truth a genuine stationary point.
        let corr = compress_cheb(&snap, 16).unwrap();
        let (grad, _) = mvp_gradient_hessian(&corr, sc.gamma_true()).unwrap();
        let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        // Scale: cost magnitude times the phase-rate of the steering model.
        let omega = 2.0 * std::f64::consts::PI * cfg.freq_at(818.0) * cfg.delay(9);
        let scale = corr.trace_sum() * omega;
        assert!(
            gnorm <= 1e-8 * scale,
            "gradient norm {gnorm} vs scale {scale}"
        );

        // Slightly perturbed: Hessian positive definite (2x2 leading minors
        // of the 3x3 matrix via eigen-free checks).
        let gamma = DoaVector::new(vec![-0.71 + 1e-3, -0.63 - 1e-3, 0.27 + 1e-3]).unwrap();
        let (_, h) = mvp_gradient_hessian(&corr, &gamma).unwrap();
        let det1 = h[0];
        let det2 = h[0] * h[4] - h[1] * h[3];
        let det3 = h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6])
            + h[2] * (h[3] * h[7] - h[4] * h[6]);
        assert!(
            det1 > 0.0 && det2 > 0.0 && det3 > 0.0,
            "not positive definite: {h:?}"
        );
    }

    #[test]
    fn refine_stationary_start_stops_immediately() {
        let cfg = reference_config();
        let sc = reference_scenario(f64::INFINITY, 74);
        let snap = generate_snapshots(&sc, &cfg).unwrap();
        let corr = compress_cheb(&snap, 16).unwrap();
        let state = mvp_refine(&corr, sc.gamma_true(), &MvpOptions::default()).unwrap();
        assert_eq!(
            state.iterations, 0,
            "no significant steps from a stationary point"
        );
        assert_eq!(state.gamma, *sc.gamma_true());
    }

    #[test]
    fn refine_recovers_perturbed_truth() {
        let cfg = reference_config();
        let sc = reference_scenario(f64::INFINITY, 75);
        let snap = generate_snapshots(&sc, &cfg).unwrap();
        let corr = compress_cheb(&snap, 8).unwrap();
        let start = DoaVector::new(vec![-0.71 + 0.01, -0.63 + 0.01, 0.27 + 0.01]).unwrap();
        let state = mvp_refine(&corr, &start, &MvpOptions::default()).unwrap();
        assert!(
            state.iterations <= 20,
            "took {} iterations",
            state.iterations
        );
        for (got, want) in state
            .gamma
            .sorted()
            .as_slice()
            .iter()
            .zip([-0.71, -0.63, 0.27])
        {
            assert!((got - want).abs() <= 1e-6, "{got} vs {want}");
        }
        // Cost nonincreasing along the accepted trace.
        for w in state.cost_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn full_loop_noiseless_three_sources() {
        let cfg = reference_config();
        let sc = reference_scenario(f64::INFINITY, 76);
        let snap = generate_snapshots(&sc, &cfg).unwrap();
        let corr = compress_cheb(&snap, 8).unwrap();
        // Noiseless data: any positive variance keeps the test strict until
        // the residual actually vanishes.
        let d = det(1e-7 * snap.total_energy() / 16380.0);
        let result =
            run_detection_estimation(&corr, &d, &SearchConfig::default(), &MvpOptions::default())
                .unwrap();
        assert_eq!(result.k_hat, 3);
        assert!(result.converged);
        for (got, want) in result.gamma_hat.as_slice().iter().zip([-0.71, -0.63, 0.27]) {
            assert!((got - want).abs() <= 1e-6, "{got} vs {want}");
        }
        assert_eq!(
            result.k_hat,
            result
                .trace
                .iter()
                .filter(|t| t.kind == StepKind::Refine)
                .count()
        );
        // JSON rendering stays parseable-ish: spot-check the shape.
        let json = result.to_json();
        assert!(json.starts_with("{\"gamma_hat\":["));
        assert!(json.contains("\"k_hat\":3"));
    }

    #[test]
    fn known_k_variants() {
        let cfg = reference_config();
        let sc = reference_scenario(f64::INFINITY, 77);
        let snap = generate_snapshots(&sc, &cfg).unwrap();
        let corr = compress_cheb(&snap, 8).unwrap();
        let d = det(1.0);
        let search = SearchConfig::default();
        let opts = MvpOptions::default();

        let empty = estimate_known_k(&corr, 0, &d, &search, &opts).unwrap();
        assert_eq!(empty.k_hat, 0);
        assert!(empty.gamma_hat.is_empty());

        let three = estimate_known_k(&corr, 3, &d, &search, &opts).unwrap();
        for (got, want) in three.gamma_hat.as_slice().iter().zip([-0.71, -0.63, 0.27]) {
            assert!((got - want).abs() <= 1e-6);
        }
        assert!(estimate_known_k(&corr, 10, &d, &search, &opts).is_err());
    }

    #[test]
    fn known_k_single_matches_detection_first_component() {
        let cfg = reference_config();
        let sc = ScenarioConfig::new(
            ScenarioKind::Independent,
            vec![Complex::new(0.9, 0.1)],
            vec![0.0],
            DoaVector::new(vec![-0.44]).unwrap(),
            0.2,
            0.8 / cfg.sample_period(),
            f64::INFINITY,
            78,
        )
        .unwrap();
        let snap = generate_snapshots(&sc, &cfg).unwrap();
        let corr = compress_cheb(&snap, 8).unwrap();
        let d = det(1e-6 * snap.total_energy() / 16380.0);
        let search = SearchConfig::default();
        let opts = MvpOptions::default();
        let known = estimate_known_k(&corr, 1, &d, &search, &opts).unwrap();
        let detected = run_detection_estimation(&corr, &d, &search, &opts).unwrap();
        assert_eq!(detected.k_hat, 1);
        let a = known.gamma_hat.as_slice()[0];
        let b = detected.gamma_hat.as_slice()[0];
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        assert!((a - -0.44).abs() < 1e-6);
    }

    #[test]
    fn permutation_invariance() {
        let cfg = reference_config();
        let sc = reference_scenario(20.0, 79);
        let snap = generate_snapshots(&sc, &cfg).unwrap();
        let corr = compress_cheb(&snap, 6).unwrap();
        let fwd = DoaVector::new(vec![-0.71, -0.63, 0.27]).unwrap();
        let rev = DoaVector::new(vec![0.27, -0.71, -0.63]).unwrap();
        let c1 = cost_cheb(&corr, &fwd).unwrap();
        let c2 = cost_cheb(&corr, &rev).unwrap();
        assert!((c1 - c2).abs() <= 1e-12 * c1.abs().max(1.0));

        let (g1, _) = mvp_gradient_hessian(&corr, &fwd).unwrap();
        let (g2, _) = mvp_gradient_hessian(&corr, &rev).unwrap();
        // Same gradient set under the permutation [2, 0, 1] of components.
        let remapped = [g2[1], g2[2], g2[0]];
        for (a, b) in g1.iter().zip(remapped) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn coincident_parameters_rejected() {
        let cfg = small_noise_config();
        let sc = ScenarioConfig::new(
            ScenarioKind::Independent,
            vec![],
            vec![],
            DoaVector::empty(),
            0.2,
            0.25e9,
            0.0,
            80,
        )
        .unwrap();
        let snap = generate_snapshots(&sc, &cfg).unwrap();
        let corr = compress_cheb(&snap, 4).unwrap();
        let coincident = DoaVector::new(vec![0.3, 0.3 + 1e-12]).unwrap();
        assert!(mvp_refine(&corr, &coincident, &MvpOptions::default()).is_err());
    }
}
