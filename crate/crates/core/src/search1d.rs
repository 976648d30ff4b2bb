//! One-dimensional arrival-parameter searches.
//!
//! A second Chebyshev interpolation layer runs over gamma in [-1, 1]: the
//! compressed cost (or the incoherent MUSIC pseudo-spectrum) is sampled at
//! `Q` nodes, fitted, oversampled by DCT zero-padding, and its local minima
//! refined by Newton iterations on the interpolant. No cost-function
//! evaluations happen beyond the `Q` node samples.

use num_complex::Complex;

use crate::array_model::{normalized_signature, steering_matrix, DoaVector};
use crate::chebyshev::{
    cheb_derivative, cheb_fit, cheb_oversample, ChebGrid, ChebSeries, Interval,
};
use crate::cost::{CompressionKind, CorrSet};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, thin_qr, CMatrix};
use crate::num::{real, real_from_usize, Real};

/// Parameters of the gamma search.
#[derive(Debug, Clone)]
pub struct SearchConfig<T> {
    q: usize,
    oversample_factor: usize,
    gamma_interval: Interval<T>,
    newton_tol: T,
    newton_max_iter: usize,
}

impl<T: Real> SearchConfig<T> {
    pub fn new(q: usize, oversample_factor: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidArgument("search order must be at least 2"));
        }
        if oversample_factor < 2 {
            return Err(Error::InvalidArgument(
                "oversample factor must be at least 2",
            ));
        }
        Ok(Self {
            q,
            oversample_factor,
            gamma_interval: Interval::unit(),
            newton_tol: real(1e-12),
            newton_max_iter: 30,
        })
    }

    pub fn with_interval(mut self, interval: Interval<T>) -> Self {
        self.gamma_interval = interval;
        self
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn oversample_factor(&self) -> usize {
        self.oversample_factor
    }

    pub fn gamma_interval(&self) -> Interval<T> {
        self.gamma_interval
    }
}

impl<T: Real> Default for SearchConfig<T> {
    /// Order 50, oversampled by factor 2, on [-1, 1].
    fn default() -> Self {
        Self::new(50, 2).expect("stock parameters are valid")
    }
}

/// Sampled search function over gamma: node values and their Chebyshev fit.
#[derive(Debug, Clone)]
pub struct PseudoSpectrum<T> {
    grid: ChebGrid<T>,
    series: ChebSeries<T>,
}

impl<T: Real> PseudoSpectrum<T> {
    fn from_samples(interval: Interval<T>, samples: Vec<T>) -> Result<Self> {
        let values = samples
            .into_iter()
            .map(|v| Complex::new(v, T::zero()))
            .collect();
        let grid = ChebGrid::new(interval, values)?;
        let series = cheb_fit(&grid);
        Ok(Self { grid, series })
    }

    pub fn grid(&self) -> &ChebGrid<T> {
        &self.grid
    }

    pub fn series(&self) -> &ChebSeries<T> {
        &self.series
    }

    /// Interpolant value at `gamma` (real part; the samples are real).
    pub fn eval(&self, gamma: T) -> T {
        self.series.eval(gamma).re
    }

    /// `(gamma, value)` rows at the oversampled resolution, for export.
    pub fn oversampled_rows(&self, factor: usize) -> Result<Vec<(T, T)>> {
        let up = cheb_oversample(&self.grid, factor.max(2) * self.grid.order())?;
        Ok(up
            .nodes()
            .into_iter()
            .zip(up.values().iter().map(|v| v.re))
            .collect())
    }

    /// CSV rendering (`gamma,value` rows) at the oversampled resolution.
    pub fn to_csv(&self, factor: usize) -> Result<String> {
        let mut out = String::from("gamma,value\n");
        for (g, v) in self.oversampled_rows(factor)? {
            out.push_str(&format!("{g:?},{v:?}\n"));
        }
        Ok(out)
    }
}

/// A located minimum of a pseudo-spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<T> {
    pub gamma: T,
    pub value: T,
}

/// Fewer minima than requested; carries the ones that were found (refined),
/// so the caller can decide what to do with them.
#[derive(Debug, Clone)]
pub struct MinimaShortage<T> {
    pub requested: usize,
    pub found: Vec<Minimum<T>>,
}

impl<T: Real> std::fmt::Display for MinimaShortage<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "requested {} minima, found {}",
            self.requested,
            self.found.len()
        )
    }
}

impl<T: Real> std::error::Error for MinimaShortage<T> {}

impl<T: Real> From<MinimaShortage<T>> for Error {
    fn from(s: MinimaShortage<T>) -> Error {
        Error::MinimaShortage {
            requested: s.requested,
            found: s.found.len(),
        }
    }
}

/// Per-abscissa state reused across the `Q` node samples: the thin-QR basis
/// of the fixed steering matrix and the residual trace it leaves.
struct FixedComponentState<T> {
    basis: Option<CMatrix<T>>,
    residual_trace: T,
}

fn fixed_component_states<T: Real>(
    corr: &CorrSet<T>,
    gamma_o: &DoaVector<T>,
) -> Result<Vec<FixedComponentState<T>>> {
    let cfg = corr.config();
    let mut states = Vec::with_capacity(corr.order());
    for p in 0..corr.order() {
        let r_mat = &corr.matrices()[p];
        if gamma_o.is_empty() {
            states.push(FixedComponentState {
                basis: None,
                residual_trace: corr.traces()[p],
            });
            continue;
        }
        let a = steering_matrix(cfg, corr.abscissas()[p], gamma_o);
        let f = thin_qr(&a)?;
        let mut removed = T::zero();
        for c in 0..f.q1.cols() {
            let qc = f.q1.column(c);
            let rq = r_mat.mul_vec(&qc);
            removed += qc
                .iter()
                .zip(&rq)
                .map(|(a, b)| (a.conj() * b).re)
                .sum::<T>();
        }
        states.push(FixedComponentState {
            basis: Some(f.q1),
            residual_trace: corr.traces()[p] - removed,
        });
    }
    Ok(states)
}

fn extended_sample<T: Real>(
    corr: &CorrSet<T>,
    states: &[FixedComponentState<T>],
    gamma: T,
) -> Result<T> {
    let cfg = corr.config();
    let mut total = T::zero();
    for ((state, &rho), r_mat) in states.iter().zip(corr.abscissas()).zip(corr.matrices()) {
        let a_hat = normalized_signature(cfg, rho, gamma)?;
        // a_hat^H Pfix R a_hat with Pfix = I - Q Q^H (identity when empty).
        let w = r_mat.mul_vec(&a_hat);
        let mut removed: Complex<T> = a_hat.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
        if let Some(q1) = &state.basis {
            let u = q1.adjoint_mul_vec(&a_hat);
            let v = q1.adjoint_mul_vec(&w);
            let cross: Complex<T> = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            removed -= cross;
        }
        total = total + state.residual_trace - removed.re;
    }
    Ok(total)
}

/// The compressed cost restricted to a single wave, sampled at the `Q`
/// search nodes: `L(g_q) = sum_p [tr R_p - a_hat_{p,q}^H R_p a_hat_{p,q}]`.
pub fn beamformer_grid<T: Real>(
    corr: &CorrSet<T>,
    search: &SearchConfig<T>,
) -> Result<PseudoSpectrum<T>> {
    extended_beamformer_grid(corr, &DoaVector::empty(), search)
}

/// Beamformer with fixed components `gamma_o`: each correlation matrix is
/// pre-multiplied by the fixed-component annihilator, so samples trace how
/// much residual a candidate wave at `gamma` would explain on top of
/// `gamma_o`. A candidate coinciding with a fixed component is damped back
/// to the fixed-only cost rather than producing a spurious deep minimum.
pub fn extended_beamformer_grid<T: Real>(
    corr: &CorrSet<T>,
    gamma_o: &DoaVector<T>,
    search: &SearchConfig<T>,
) -> Result<PseudoSpectrum<T>> {
    gamma_o.ensure_distinct(real(1e-9))?;
    let states = fixed_component_states(corr, gamma_o)?;
    let interval = search.gamma_interval;
    let grid = crate::chebyshev::cheb_nodes(search.q, interval)?;
    let samples = grid
        .into_iter()
        .map(|g| extended_sample(corr, &states, g))
        .collect::<Result<Vec<T>>>()?;
    PseudoSpectrum::from_samples(interval, samples)
}

/// Direct (non-interpolated) value of the extended-beamformer sample at an
/// arbitrary `gamma`; the grid above consists of exactly these values at
/// the search nodes.
pub fn extended_beamformer_value<T: Real>(
    corr: &CorrSet<T>,
    gamma_o: &DoaVector<T>,
    gamma: T,
) -> Result<T> {
    let states = fixed_component_states(corr, gamma_o)?;
    extended_sample(corr, &states, gamma)
}

/// Incoherent-MUSIC pseudo-spectrum over a bin compression: per bin, the
/// top-`k` eigenvectors of `R_{b,p}` span the signal subspace, and the
/// sample at a node is `sum_p (k - ||U_p^H a_hat_{p,q}||^2)`.
pub fn music_pseudospectrum_grid<T: Real>(
    bin_corr: &CorrSet<T>,
    k: usize,
    search: &SearchConfig<T>,
) -> Result<PseudoSpectrum<T>> {
    if bin_corr.kind() != CompressionKind::Bin {
        return Err(Error::InvalidArgument(
            "incoherent MUSIC needs a bin-compressed set",
        ));
    }
    let cfg = bin_corr.config();
    if k == 0 || k >= cfg.num_sensors() {
        return Err(Error::InvalidArgument(
            "subspace dimension must satisfy 1 <= K < M",
        ));
    }
    let subspaces: Vec<CMatrix<T>> = bin_corr
        .matrices()
        .iter()
        .map(|r_mat| hermitian_eig(r_mat, k).map(|(_, u)| u))
        .collect::<Result<_>>()?;
    let interval = search.gamma_interval;
    let nodes = crate::chebyshev::cheb_nodes(search.q, interval)?;
    let kf = real_from_usize::<T>(k);
    let samples = nodes
        .into_iter()
        .map(|g| {
            let mut acc = T::zero();
            for (p, u) in subspaces.iter().enumerate() {
                let a_hat = normalized_signature(cfg, bin_corr.abscissas()[p], g)?;
                let proj = u.adjoint_mul_vec(&a_hat);
                let power: T = proj.iter().map(|z| z.norm_sqr()).sum();
                acc += kf - power;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<T>>>()?;
    PseudoSpectrum::from_samples(interval, samples)
}

fn golden_section<T: Real>(f: &impl Fn(T) -> T, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let inv_phi = real::<T>(0.618_033_988_749_894_9);
    let mut x1 = hi - (hi - lo) * inv_phi;
    let mut x2 = lo + (hi - lo) * inv_phi;
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol.max(T::epsilon() * hi.abs().max(T::one())) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - (hi - lo) * inv_phi;
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + (hi - lo) * inv_phi;
            f2 = f(x2);
        }
    }
    let mid = (lo + hi) * real(0.5);
    (mid, f(mid))
}

/// Locates the `count` deepest interior local minima of a pseudo-spectrum.
///
/// The node grid is oversampled by DCT zero-padding to
/// `oversample_factor * Q` samples, interior local minima of the sample
/// sequence are collected (plateau ties broken toward the smallest
/// `|gamma|`), and each is refined by safeguarded Newton steps on the
/// interpolant within its bracketing cell; the refinement never increases
/// the interpolant value and falls back to golden-section when the local
/// curvature is not positive. Results are sorted by depth.
pub fn locate_minima<T: Real>(
    ps: &PseudoSpectrum<T>,
    count: usize,
    search: &SearchConfig<T>,
) -> std::result::Result<Vec<Minimum<T>>, MinimaShortage<T>> {
    assert!(count >= 1, "requested minima count must be positive");
    let r = search.oversample_factor * ps.grid.order();
    let up = cheb_oversample(&ps.grid, r).expect("oversample factor >= 2 guarantees R > Q");
    let nodes = up.nodes();
    let values: Vec<T> = up.values().iter().map(|v| v.re).collect();

    // Interior local minima, with plateau runs reduced to one candidate.
    let mut candidates: Vec<usize> = Vec::new();
    let mut i = 1usize;
    while i + 1 < values.len() {
        if values[i] > values[i - 1] {
            i += 1;
            continue;
        }
        // Walk a (rare) plateau of equal values.
        let start = i;
        let mut end = i;
        while end + 1 < values.len() && values[end + 1] == values[start] {
            end += 1;
        }
        let left_higher = values[start - 1] > values[start];
        let right_higher = end + 1 < values.len() && values[end + 1] > values[start];
        if left_higher && right_higher {
            let best = (start..=end)
                .min_by(|&a, &b| {
                    nodes[a]
                        .abs()
                        .partial_cmp(&nodes[b].abs())
                        .expect("nodes are finite")
                })
                .expect("plateau is nonempty");
            candidates.push(best);
        }
        i = end + 1;
    }

    candidates.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("values are finite")
            .then(
                nodes[a]
                    .abs()
                    .partial_cmp(&nodes[b].abs())
                    .expect("nodes are finite"),
            )
    });

    let d1 = cheb_derivative(&ps.series);
    let d2 = cheb_derivative(&d1);
    let f = |x: T| ps.series.eval(x).re;

    let refined: Vec<Minimum<T>> = candidates
        .iter()
        .take(count)
        .map(|&idx| {
            let lo = nodes[idx - 1];
            let hi = nodes[idx + 1];
            let mut x = nodes[idx];
            let mut fx = values[idx];
            for _ in 0..search.newton_max_iter {
                let g1 = d1.eval(x).re;
                let g2 = d2.eval(x).re;
                if g2 <= T::zero() {
                    let (gx, gv) = golden_section(&f, lo, hi, search.newton_tol);
                    if gv <= fx {
                        x = gx;
                        fx = gv;
                    }
                    break;
                }
                let mut step = -g1 / g2;
                let mut xn = (x + step).max(lo).min(hi);
                let mut fxn = f(xn);
                let mut halvings = 0;
                while fxn > fx && halvings < 40 {
                    step *= real(0.5);
                    xn = (x + step).max(lo).min(hi);
                    fxn = f(xn);
                    halvings += 1;
                }
                if fxn > fx {
                    break;
                }
                let moved = (xn - x).abs();
                x = xn;
                fx = fxn;
                if moved <= search.newton_tol {
                    break;
                }
            }
            Minimum {
                gamma: x,
                value: fx,
            }
        })
        .collect();

    if refined.len() < count {
        return Err(MinimaShortage {
            requested: count,
            found: refined,
        });
    }
    let mut out = refined;
    out.sort_by(|a, b| a.value.partial_cmp(&b.value).expect("values are finite"));
    Ok(out)
}
