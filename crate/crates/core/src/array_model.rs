//! Deterministic array geometry: steering matrices, their derivatives in
//! the arrival parameter, orthogonal-complement projectors and normalized
//! signatures.
//!
//! The arrival parameter `gamma` is the sine of the angle of arrival. A
//! steering entry at frequency index `r` (real-valued indices are allowed,
//! since interpolation abscissas fall between DFT bins) is
//! `exp(-j 2 pi (f_o + r/(N T)) tau_m gamma_k) b_m(gamma_k)` with `tau_m`
//! the sensor delay from the reference point and `b_m` the sensor pattern.

use std::sync::Arc;

use num_complex::Complex;

use crate::chebyshev::Interval;
use crate::error::{Error, Result};
use crate::linalg::{thin_qr, CMatrix};
use crate::num::{cis, real, real_from_usize, Real};

/// Real-valued sensor pattern `b_m(gamma)` and its derivative.
#[derive(Clone)]
pub enum Pattern<T> {
    /// Unit gain in every direction; derivative zero.
    Isotropic,
    /// Caller-supplied pattern returning `(value, derivative)` at `gamma`.
    Custom(Arc<dyn Fn(T) -> (T, T) + Send + Sync>),
}

impl<T: Real> Pattern<T> {
    pub fn value(&self, gamma: T) -> T {
        match self {
            Pattern::Isotropic => T::one(),
            Pattern::Custom(f) => f(gamma).0,
        }
    }

    pub fn derivative(&self, gamma: T) -> T {
        match self {
            Pattern::Isotropic => T::zero(),
            Pattern::Custom(f) => f(gamma).1,
        }
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self, Pattern::Isotropic)
    }
}

impl<T> std::fmt::Debug for Pattern<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pattern::Isotropic => write!(f, "Isotropic"),
            Pattern::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Sensor geometry, carrier and sampling constants, and the significant
/// frequency-index range `[r1, r2]`.
#[derive(Debug, Clone)]
pub struct ArrayConfig<T> {
    positions: Vec<T>,
    patterns: Vec<Pattern<T>>,
    carrier_hz: T,
    velocity: T,
    dft_len: usize,
    sample_period: T,
    r1: i64,
    r2: i64,
}

impl<T: Real> ArrayConfig<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        positions: Vec<T>,
        patterns: Vec<Pattern<T>>,
        carrier_hz: T,
        velocity: T,
        dft_len: usize,
        sample_period: T,
        r1: i64,
        r2: i64,
    ) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidArgument("array needs at least two sensors"));
        }
        if patterns.len() != positions.len() {
            return Err(Error::InvalidArgument("one pattern per sensor required"));
        }
        if !(carrier_hz > T::zero()) {
            return Err(Error::InvalidArgument("carrier frequency must be positive"));
        }
        if !(velocity > T::zero()) {
            return Err(Error::InvalidArgument(
                "propagation velocity must be positive",
            ));
        }
        if !(sample_period > T::zero()) {
            return Err(Error::InvalidArgument("sampling period must be positive"));
        }
        if dft_len == 0 {
            return Err(Error::InvalidArgument("DFT length must be positive"));
        }
        if r1 >= r2 {
            return Err(Error::InvalidArgument(
                "frequency index range requires r1 < r2",
            ));
        }
        Ok(Self {
            positions,
            patterns,
            carrier_hz,
            velocity,
            dft_len,
            sample_period,
            r1,
            r2,
        })
    }

    /// Uniform linear array with half-wavelength spacing at the carrier,
    /// first sensor at the reference point, isotropic patterns.
    pub fn half_wavelength_ula(
        sensors: usize,
        carrier_hz: T,
        velocity: T,
        dft_len: usize,
        sample_period: T,
        r1: i64,
        r2: i64,
    ) -> Result<Self> {
        let spacing = velocity / (real::<T>(2.0) * carrier_hz);
        let positions = (0..sensors)
            .map(|m| real_from_usize::<T>(m) * spacing)
            .collect();
        let patterns = vec![Pattern::Isotropic; sensors];
        Self::new(
            positions,
            patterns,
            carrier_hz,
            velocity,
            dft_len,
            sample_period,
            r1,
            r2,
        )
    }

    pub fn num_sensors(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn patterns(&self) -> &[Pattern<T>] {
        &self.patterns
    }

    pub fn carrier_hz(&self) -> T {
        self.carrier_hz
    }

    pub fn velocity(&self) -> T {
        self.velocity
    }

    pub fn dft_len(&self) -> usize {
        self.dft_len
    }

    pub fn sample_period(&self) -> T {
        self.sample_period
    }

    pub fn r1(&self) -> i64 {
        self.r1
    }

    pub fn r2(&self) -> i64 {
        self.r2
    }

    /// Number of significant frequency indices, `r2 - r1 + 1`.
    pub fn num_indices(&self) -> usize {
        (self.r2 - self.r1 + 1) as usize
    }

    /// Delay from the reference point to sensor `m`, `d_m / c`.
    pub fn delay(&self, m: usize) -> T {
        self.positions[m] / self.velocity
    }

    /// Physical frequency of (possibly fractional) index `r`:
    /// `f_o + r / (N T)`.
    pub fn freq_at(&self, r: T) -> T {
        self.carrier_hz + r / (real_from_usize::<T>(self.dft_len) * self.sample_period)
    }

    /// The index range `[r1, r2]` as an interpolation interval.
    pub fn index_interval(&self) -> Interval<T> {
        Interval::new(real::<T>(self.r1 as f64), real::<T>(self.r2 as f64))
            .expect("r1 < r2 is a construction invariant")
    }

    pub fn all_isotropic(&self) -> bool {
        self.patterns.iter().all(Pattern::is_isotropic)
    }
}

/// Vector of arrival-parameter values, each in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaVector<T>(Vec<T>);

impl<T: Real> DoaVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|g| g.abs() > T::one()) {
            return Err(Error::InvalidArgument(
                "arrival parameters must lie in [-1, 1]",
            ));
        }
        Ok(Self(values))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    /// A copy with `gamma` appended.
    pub fn appended(&self, gamma: T) -> Result<Self> {
        let mut v = self.0.clone();
        v.push(gamma);
        Self::new(v)
    }

    /// Values sorted ascending.
    pub fn sorted(&self) -> Self {
        let mut v = self.0.clone();
        v.sort_by(|a, b| a.partial_cmp(b).expect("arrival parameters are finite"));
        Self(v)
    }

    /// Errors when two entries coincide within `tol`.
    pub fn ensure_distinct(&self, tol: T) -> Result<()> {
        for i in 0..self.0.len() {
            for j in (i + 1)..self.0.len() {
                if (self.0[i] - self.0[j]).abs() < tol {
                    return Err(Error::InvalidArgument(
                        "arrival parameters must be pairwise distinct",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Steering matrix `A(r, gamma)`, M x K.
pub fn steering_matrix<T: Real>(cfg: &ArrayConfig<T>, r: T, gamma: &DoaVector<T>) -> CMatrix<T> {
    let freq = cfg.freq_at(r);
    let two_pi = T::PI() + T::PI();
    CMatrix::from_fn(cfg.num_sensors(), gamma.len(), |m, k| {
        let g = gamma.as_slice()[k];
        let phase = -two_pi * freq * cfg.delay(m) * g;
        cis(phase) * cfg.patterns()[m].value(g)
    })
}

/// Entrywise derivative of the steering matrix in its own column parameter:
/// `D[m,k] = d A[m,k] / d gamma_k`.
pub fn steering_derivative<T: Real>(
    cfg: &ArrayConfig<T>,
    r: T,
    gamma: &DoaVector<T>,
) -> CMatrix<T> {
    let freq = cfg.freq_at(r);
    let two_pi = T::PI() + T::PI();
    CMatrix::from_fn(cfg.num_sensors(), gamma.len(), |m, k| {
        let g = gamma.as_slice()[k];
        let omega = two_pi * freq * cfg.delay(m);
        let pat = &cfg.patterns()[m];
        let factor = Complex::new(pat.derivative(g), -omega * pat.value(g));
        cis(-omega * g) * factor
    })
}

/// Orthogonal-complement projector `I - A A^+`, built from the thin QR of
/// `A` as `I - Q1 Q1^H`; the pseudo-inverse is never formed.
pub fn projection_orth<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let m = a.rows();
    if a.cols() == 0 {
        return Ok(CMatrix::identity(m));
    }
    let f = thin_qr(a)?;
    let mut p = CMatrix::identity(m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..f.q1.cols() {
                acc += f.q1[(i, k)] * f.q1[(j, k)].conj();
            }
            p[(i, j)] -= acc;
        }
    }
    Ok(p)
}

/// Unit-norm steering column at `(rho, gamma)`.
pub fn normalized_signature<T: Real>(
    cfg: &ArrayConfig<T>,
    rho: T,
    gamma: T,
) -> Result<Vec<Complex<T>>> {
    let single = DoaVector::new(vec![gamma])?;
    let a = steering_matrix(cfg, rho, &single);
    let col = a.column(0);
    let norm = col.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    if !(norm > T::zero()) {
        return Err(Error::InvalidArgument("steering column has zero norm"));
    }
    Ok(col.into_iter().map(|z| z / norm).collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::GaussianStream;

    /// Reference config used across tests: 10-sensor half-wavelength ULA at
    /// 2.4 GHz, N = 2048, a tenth-of-carrier band (T chosen so B T = 0.8
    /// with B = 0.1 f_o) and the stock index range.
    pub(crate) fn reference_config() -> ArrayConfig<f64> {
        let f_o = 2.4e9;
        let b = 0.1 * f_o;
        ArrayConfig::half_wavelength_ula(10, f_o, 2.99792458e8, 2048, 0.8 / b, -819, 818).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ArrayConfig::<f64>::half_wavelength_ula(1, 1e9, 3e8, 64, 1e-9, -5, 5).is_err());
        assert!(ArrayConfig::<f64>::half_wavelength_ula(4, 1e9, 3e8, 64, 1e-9, 5, 5).is_err());
        assert!(ArrayConfig::<f64>::half_wavelength_ula(4, -1e9, 3e8, 64, 1e-9, -5, 5).is_err());
        assert!(ArrayConfig::<f64>::half_wavelength_ula(4, 1e9, 3e8, 64, -1e-9, -5, 5).is_err());
    }

    #[test]
    fn doa_vector_validation() {
        assert!(DoaVector::new(vec![0.3, -1.0, 1.0]).is_ok());
        assert!(DoaVector::new(vec![1.2]).is_err());
        let v = DoaVector::new(vec![0.1, 0.1 + 5e-10]).unwrap();
        assert!(v.ensure_distinct(1e-9).is_err());
        assert!(v.ensure_distinct(1e-10).is_ok());
    }

    #[test]
    fn steering_broadside_and_endfire() {
        let cfg = reference_config();
        let gamma = DoaVector::new(vec![0.0]).unwrap();
        let a = steering_matrix(&cfg, 300.0, &gamma);
        for m in 0..10 {
            assert!((a[(m, 0)] - Complex::new(1.0, 0.0)).norm() < 1e-15);
        }

        // Two sensors, half wavelength apart, endfire: second entry is -1.
        let cfg2 =
            ArrayConfig::half_wavelength_ula(2, 2.4e9, 2.99792458e8, 2048, 1e-9, -10, 10).unwrap();
        let gamma = DoaVector::new(vec![1.0]).unwrap();
        let a = steering_matrix(&cfg2, 0.0, &gamma);
        assert!((a[(0, 0)] - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!((a[(1, 0)] - Complex::new(-1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn steering_matches_scalar_formula() {
        // Independent elementwise evaluation at the band edge.
        let cfg = reference_config();
        let gamma = DoaVector::new(vec![-0.71]).unwrap();
        let a = steering_matrix(&cfg, 818.0, &gamma);
        let freq = 2.4e9 + 818.0 / (2048.0 * cfg.sample_period());
        for m in 0..10 {
            let tau = cfg.positions()[m] / 2.99792458e8;
            let phase = -2.0 * std::f64::consts::PI * freq * tau * -0.71;
            let want = Complex::new(phase.cos(), phase.sin());
            assert!((a[(m, 0)] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_reference_values() {
        let cfg = reference_config();
        let gamma = DoaVector::new(vec![0.0]).unwrap();
        let r = 100.0;
        let d = steering_derivative(&cfg, r, &gamma);
        // Sensor at the reference point has zero delay, hence zero derivative.
        assert!(d[(0, 0)].norm() == 0.0);
        let freq = cfg.freq_at(r);
        for m in 0..10 {
            let want = Complex::new(0.0, -2.0 * std::f64::consts::PI * freq * cfg.delay(m));
            assert!((d[(m, 0)] - want).norm() < 1e-10 * want.norm().max(1.0));
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        let cfg = reference_config();
        let mut rng = GaussianStream::<f64>::new(21);
        for _ in 0..20 {
            let g1 = rng.next_uniform() * 1.8 - 0.9;
            let g2 = rng.next_uniform() * 1.8 - 0.9;
            let r = rng.next_uniform() * 1600.0 - 800.0;
            let h = 1e-6;
            let gamma = DoaVector::new(vec![g1, g2]).unwrap();
            let d = steering_derivative(&cfg, r, &gamma);
            for k in 0..2 {
                let mut lo = vec![g1, g2];
                let mut hi = vec![g1, g2];
                lo[k] -= h;
                hi[k] += h;
                let a_lo = steering_matrix(&cfg, r, &DoaVector::new(lo).unwrap());
                let a_hi = steering_matrix(&cfg, r, &DoaVector::new(hi).unwrap());
                for m in 0..10 {
                    let fd = (a_hi[(m, k)] - a_lo[(m, k)]) / (2.0 * h);
                    let denom = d[(m, k)].norm().max(1e-12);
                    assert!(
                        (fd - d[(m, k)]).norm() / denom < 1e-6,
                        "m={m} k={k}: fd={fd} analytic={}",
                        d[(m, k)]
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_with_custom_pattern() {
        // b(g) = 1 + g^2 / 2 checks the pattern-derivative term.
        let f_o = 1.0e9;
        let pat: Pattern<f64> = Pattern::Custom(Arc::new(|g| (1.0 + 0.5 * g * g, g)));
        let cfg = ArrayConfig::new(
            vec![0.0, 0.15],
            vec![pat.clone(), pat],
            f_o,
            3e8,
            256,
            1e-9,
            -100,
            100,
        )
        .unwrap();
        let gamma = DoaVector::new(vec![0.4]).unwrap();
        let d = steering_derivative(&cfg, 10.0, &gamma);
        let a_lo = steering_matrix(&cfg, 10.0, &DoaVector::new(vec![0.4 - 1e-6]).unwrap());
        let a_hi = steering_matrix(&cfg, 10.0, &DoaVector::new(vec![0.4 + 1e-6]).unwrap());
        for m in 0..2 {
            let fd = (a_hi[(m, 0)] - a_lo[(m, 0)]) / 2e-6;
            assert!((fd - d[(m, 0)]).norm() < 1e-5 * fd.norm().max(1.0));
        }
    }

    #[test]
    fn projector_properties() {
        let cfg = reference_config();
        // Square invertible A spans everything: projector is zero.
        let mut rng = GaussianStream::<f64>::new(22);
        let a = CMatrix::from_fn(4, 4, |_, _| rng.next_complex());
        let p = projection_orth(&a).unwrap();
        assert!(p.frobenius_norm() < 1e-10 * a.frobenius_norm());

        // Single unit column: I - v v^H.
        let v = normalized_signature(&cfg, 0.0, 0.27).unwrap();
        let a = CMatrix::from_fn(10, 1, |i, _| v[i]);
        let p = projection_orth(&a).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j {
                    Complex::new(1.0, 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                } - v[i] * v[j].conj();
                assert!((p[(i, j)] - want).norm() < 1e-12);
            }
        }

        // Random tall matrix: annihilation and idempotence.
        let a = CMatrix::from_fn(10, 3, |_, _| rng.next_complex());
        let p = projection_orth(&a).unwrap();
        assert!(p.mul(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        assert!(p.mul(&p).sub(&p).frobenius_norm() <= 1e-10);
        assert!(p.sub(&p.hermitian_transpose()).frobenius_norm() <= 1e-12);
    }

    #[test]
    fn projector_smooth_in_frequency() {
        // Coarse smoothness bound: finite difference in r stays within ten
        // times 2 pi max(tau) / (N T) times M.
        let cfg = reference_config();
        let gamma = DoaVector::new(vec![-0.71, 0.27]).unwrap();
        let tau_max = cfg.delay(9);
        let bound =
            10.0 * 2.0 * std::f64::consts::PI * tau_max / (2048.0 * cfg.sample_period()) * 10.0;
        for r in [-700.0, 0.0, 600.0] {
            let p0 = projection_orth(&steering_matrix(&cfg, r, &gamma)).unwrap();
            let p1 = projection_orth(&steering_matrix(&cfg, r + 1.0, &gamma)).unwrap();
            let diff = p1.sub(&p0).max_abs_entry();
            assert!(diff <= bound, "diff {diff} exceeds bound {bound} at r={r}");
        }
    }

    #[test]
    fn single_wave_projector_identity() {
        // For one isotropic wave, I - a_hat a_hat^H equals the QR-based
        // projector essentially exactly.
        let cfg = reference_config();
        let rho = -123.45;
        let g = 0.27;
        let a_hat = normalized_signature(&cfg, rho, g).unwrap();
        let a = steering_matrix(&cfg, rho, &DoaVector::new(vec![g]).unwrap());
        let p = projection_orth(&a).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let eye = if i == j {
                    Complex::new(1.0, 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
                let want = eye - a_hat[i] * a_hat[j].conj();
                assert!((p[(i, j)] - want).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn signature_unit_norm() {
        let cfg = reference_config();
        // Isotropic patterns give modulus 1/sqrt(M) entries.
        let v = normalized_signature(&cfg, 0.0, 0.27).unwrap();
        for z in &v {
            assert!((z.norm() - (1.0 / 10.0f64.sqrt())).abs() < 1e-14);
        }
        let mut rng = GaussianStream::<f64>::new(23);
        for _ in 0..100 {
            let rho = rng.next_uniform() * 1637.0 - 819.0;
            let g = rng.next_uniform() * 2.0 - 1.0;
            let v = normalized_signature(&cfg, rho, g).unwrap();
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-14);
        }
        // Composition against the steering column.
        let a = steering_matrix(&cfg, 0.0, &DoaVector::new(vec![0.27]).unwrap());
        let v = normalized_signature(&cfg, 0.0, 0.27).unwrap();
        for m in 0..10 {
            assert!((a[(m, 0)] / 10.0f64.sqrt() - v[m]).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_pattern_signature_rejected() {
        let zero_pat: Pattern<f64> = Pattern::Custom(Arc::new(|_| (0.0, 0.0)));
        let cfg = ArrayConfig::new(
            vec![0.0, 0.1],
            vec![zero_pat.clone(), zero_pat],
            1e9,
            3e8,
            64,
            1e-9,
            -10,
            10,
        )
        .unwrap();
        assert!(normalized_signature(&cfg, 0.0, 0.3).is_err());
    }
}
