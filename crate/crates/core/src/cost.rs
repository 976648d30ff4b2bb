//! DML cost functions and the correlation-matrix compressions feeding them.
//!
//! The exact cost sums one projector residual per frequency index, which is
//! thousands of terms. Interpolating that projector across frequency with
//! `P` cardinal weights turns the sum into `P` narrowband-like terms
//! `tr{P_perp(rho_p, gamma) R_p}` over weighted correlation matrices
//! `R_p = sum_r phi_p(r) x_r x_r^H`. The piecewise-constant baseline does
//! the same with spectral bins; it needs far more terms for the same error.

use num_complex::Complex;

use crate::array_model::{projection_orth, steering_matrix, ArrayConfig, DoaVector};
use crate::chebyshev::{cheb_nodes, cheb_weights};
use crate::error::{Error, Result};
use crate::linalg::{thin_qr, CMatrix};
use crate::num::{real, real_from_usize, Real};
use crate::signal_sim::SnapshotSet;

/// Which interpolator produced a correlation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompressionKind {
    Chebyshev,
    Bin,
}

/// Compressed data: one `M x M` correlation matrix per interpolation
/// abscissa. Chebyshev-kind matrices are Hermitian (the weights are real)
/// but not necessarily positive semidefinite; bin-kind matrices are both.
#[derive(Debug, Clone)]
pub struct CorrSet<T> {
    kind: CompressionKind,
    cfg: ArrayConfig<T>,
    abscissas: Vec<T>,
    matrices: Vec<CMatrix<T>>,
    traces: Vec<T>,
}

impl<T: Real> CorrSet<T> {
    pub fn kind(&self) -> CompressionKind {
        self.kind
    }

    /// Number of interpolation terms (`P` or `P_b`).
    pub fn order(&self) -> usize {
        self.matrices.len()
    }

    pub fn config(&self) -> &ArrayConfig<T> {
        &self.cfg
    }

    pub fn abscissas(&self) -> &[T] {
        &self.abscissas
    }

    pub fn matrices(&self) -> &[CMatrix<T>] {
        &self.matrices
    }

    /// Real traces `tr R_p`, cached at construction.
    pub fn traces(&self) -> &[T] {
        &self.traces
    }

    /// `sum_p tr R_p`, the cost of the empty parameter vector.
    pub fn trace_sum(&self) -> T {
        self.traces.iter().copied().sum()
    }

    /// Eigenvalues of one correlation matrix, descending; diagnostic hook
    /// for inspecting how far the compressed matrices are from admitting a
    /// signal/noise subspace split.
    pub fn matrix_eigenvalues(&self, p: usize) -> Result<Vec<T>> {
        let m = &self.matrices[p];
        Ok(crate::linalg::hermitian_eig(m, m.rows())?.0)
    }
}

/// Accumulates Hermitian sums `sum w x x^H` in the upper triangle only,
/// mirroring at the end so the result is exactly Hermitian.
struct HermitianAccumulator<T> {
    dim: usize,
    upper: Vec<Complex<T>>,
}

impl<T: Real> HermitianAccumulator<T> {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            upper: vec![Complex::new(T::zero(), T::zero()); dim * (dim + 1) / 2],
        }
    }

    #[inline]
    fn add_scaled_outer(&mut self, x: &[Complex<T>], w: T) {
        let mut idx = 0;
        for i in 0..self.dim {
            let xi_conj_w = x[i].conj() * w;
            for xj in &x[i..self.dim] {
                self.upper[idx] += xi_conj_w * xj;
                idx += 1;
            }
        }
    }

    fn into_matrix(self) -> CMatrix<T> {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        let mut idx = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                // Accumulated conj(x_i) x_j is the (j, i) entry of x x^H.
                m[(j, i)] = self.upper[idx];
                m[(i, j)] = self.upper[idx].conj();
                idx += 1;
            }
        }
        m
    }
}

/// Chebyshev compression: `R_p = sum_r phi_p(r) x_r x_r^H` over the
/// cardinal weights on `[r1, r2]`, with abscissas at the mapped nodes.
pub fn compress_cheb<T: Real>(snapshots: &SnapshotSet<T>, p: usize) -> Result<CorrSet<T>> {
    if p == 0 {
        return Err(Error::InvalidArgument("compression order must be positive"));
    }
    let cfg = snapshots.config().clone();
    let interval = cfg.index_interval();
    let m = cfg.num_sensors();
    let mut acc: Vec<HermitianAccumulator<T>> =
        (0..p).map(|_| HermitianAccumulator::new(m)).collect();
    for (j, r) in (cfg.r1()..=cfg.r2()).enumerate() {
        let x = snapshots.data().column(j);
        let w = cheb_weights(p, interval, real(r as f64))?;
        for (q, &wq) in w.iter().enumerate() {
            if wq != T::zero() {
                acc[q].add_scaled_outer(&x, wq);
            }
        }
    }
    let matrices: Vec<CMatrix<T>> = acc
        .into_iter()
        .map(HermitianAccumulator::into_matrix)
        .collect();
    let traces = matrices.iter().map(|r| r.trace().re).collect();
    Ok(CorrSet {
        kind: CompressionKind::Chebyshev,
        abscissas: cheb_nodes(p, interval)?,
        cfg,
        matrices,
        traces,
    })
}

/// Bin index of integer offset `j = r - r1` for `p_b` right-open bins of
/// width `(r2 - r1)/p_b`. Exact in integer arithmetic. The top edge `r2`
/// lands in bin `p_b`; it is folded into the last bin when the width is
/// non-integer (otherwise it stays uncovered).
fn bin_index(j: i64, span: i64, p_b: usize) -> Option<usize> {
    let idx = (j * p_b as i64) / span;
    if idx < p_b as i64 {
        Some(idx as usize)
    } else if span % p_b as i64 != 0 {
        Some(p_b - 1)
    } else {
        None
    }
}

/// Bin compression: `R_{b,p} = sum_{r in I_p} x_r x_r^H` over right-open
/// bins, abscissas at the bin midpoints.
pub fn compress_bin<T: Real>(snapshots: &SnapshotSet<T>, p_b: usize) -> Result<CorrSet<T>> {
    if p_b == 0 {
        return Err(Error::InvalidArgument("bin count must be positive"));
    }
    let cfg = snapshots.config().clone();
    let m = cfg.num_sensors();
    let span = cfg.r2() - cfg.r1();
    let width = real::<T>(span as f64) / real_from_usize::<T>(p_b);
    let mut acc: Vec<HermitianAccumulator<T>> =
        (0..p_b).map(|_| HermitianAccumulator::new(m)).collect();
    for (j, _r) in (cfg.r1()..=cfg.r2()).enumerate() {
        if let Some(idx) = bin_index(j as i64, span, p_b) {
            let x = snapshots.data().column(j);
            acc[idx].add_scaled_outer(&x, T::one());
        }
    }
    let matrices: Vec<CMatrix<T>> = acc
        .into_iter()
        .map(HermitianAccumulator::into_matrix)
        .collect();
    let traces = matrices.iter().map(|r| r.trace().re).collect();
    let abscissas = (0..p_b)
        .map(|p| real::<T>(cfg.r1() as f64) + (real_from_usize::<T>(p) + real(0.5)) * width)
        .collect();
    Ok(CorrSet {
        kind: CompressionKind::Bin,
        abscissas,
        cfg,
        matrices,
        traces,
    })
}

/// `tr{P_perp(rho, gamma) R}` evaluated from the thin QR of the steering
/// matrix as `tr R - tr(Q1^H R Q1)`; neither the projector nor the
/// pseudo-inverse is formed.
fn residual_trace<T: Real>(
    cfg: &ArrayConfig<T>,
    rho: T,
    gamma: &DoaVector<T>,
    r_mat: &CMatrix<T>,
    trace: T,
) -> Result<T> {
    if gamma.is_empty() {
        return Ok(trace);
    }
    let a = steering_matrix(cfg, rho, gamma);
    let f = thin_qr(&a)?;
    let k = gamma.len();
    let m = cfg.num_sensors();
    // diag of Q1^H R Q1, summed.
    let mut removed = Complex::new(T::zero(), T::zero());
    for c in 0..k {
        let qc = f.q1.column(c);
        let rq = r_mat.mul_vec(&qc);
        let mut dot = Complex::new(T::zero(), T::zero());
        for i in 0..m {
            dot += qc[i].conj() * rq[i];
        }
        removed += dot;
    }
    let value = trace - removed.re;
    debug_assert!(
        removed.im.abs() <= real::<T>(1e-10) * removed.re.abs().max(T::one()),
        "imaginary residue in a Hermitian quadratic form"
    );
    Ok(value)
}

/// Exact DML cost `sum_r ||P_perp(r, gamma) x_r||^2`.
///
/// One QR per frequency index: this is the reference oracle for the
/// compressed costs, not something to call inside search loops.
pub fn cost_exact<T: Real>(snapshots: &SnapshotSet<T>, gamma: &DoaVector<T>) -> Result<T> {
    let cfg = snapshots.config();
    let mut total = T::zero();
    for (j, r) in (cfg.r1()..=cfg.r2()).enumerate() {
        let x = snapshots.data().column(j);
        if gamma.is_empty() {
            total += x.iter().map(|z| z.norm_sqr()).sum::<T>();
            continue;
        }
        let a = steering_matrix(cfg, real(r as f64), gamma);
        let f = thin_qr(&a)?;
        // Residual vector x - Q1 (Q1^H x), squared. Subtracting projected
        // energy from total energy instead would cancel to the rounding
        // floor at a perfect fit.
        let proj = f.q1.adjoint_mul_vec(&x);
        let recon = f.q1.mul_vec(&proj);
        total += x.iter().zip(&recon).map(|(a, b)| (a - b).norm_sqr()).sum::<T>();
    }
    Ok(total)
}

/// Compressed cost `sum_p tr{P_perp(rho_p, gamma) R_p}` for either kind.
pub fn compressed_cost<T: Real>(corr: &CorrSet<T>, gamma: &DoaVector<T>) -> Result<T> {
    let mut total = T::zero();
    for p in 0..corr.order() {
        total += residual_trace(
            &corr.cfg,
            corr.abscissas[p],
            gamma,
            &corr.matrices[p],
            corr.traces[p],
        )?;
    }
    Ok(total)
}

/// Chebyshev-compressed DML cost; errors if the set is bin-compressed.
pub fn cost_cheb<T: Real>(corr: &CorrSet<T>, gamma: &DoaVector<T>) -> Result<T> {
    if corr.kind != CompressionKind::Chebyshev {
        return Err(Error::InvalidArgument(
            "cost_cheb needs a Chebyshev-compressed set",
        ));
    }
    compressed_cost(corr, gamma)
}

/// Bin-compressed DML cost; errors if the set is Chebyshev-compressed.
pub fn cost_bin<T: Real>(corr: &CorrSet<T>, gamma: &DoaVector<T>) -> Result<T> {
    if corr.kind != CompressionKind::Bin {
        return Err(Error::InvalidArgument(
            "cost_bin needs a bin-compressed set",
        ));
    }
    compressed_cost(corr, gamma)
}

/// Projector interpolation error across the band for one order.
#[derive(Debug, Clone)]
pub struct ErrorSweep<T> {
    per_index: Vec<(i64, T)>,
    max_error: T,
}

impl<T: Real> ErrorSweep<T> {
    /// `(r, error)` pairs, one per integer frequency index.
    pub fn per_index(&self) -> &[(i64, T)] {
        &self.per_index
    }

    pub fn max_error(&self) -> T {
        self.max_error
    }

    /// Maximum error in decibels (`-inf` for an exactly zero error).
    pub fn max_error_db(&self) -> T {
        amplitude_db(self.max_error)
    }
}

/// `20 log10 |e|`, with `-inf` at zero.
pub fn amplitude_db<T: Real>(e: T) -> T {
    if e == T::zero() {
        T::neg_infinity()
    } else {
        real::<T>(20.0) * e.log10()
    }
}

/// Sweeps the projector interpolation error over every integer index in
/// `[r1, r2]`: the error at `r` is the largest elementwise modulus of the
/// difference between `P_perp(r, gamma)` and its order-`order` interpolation
/// (Chebyshev cardinal weights or the piecewise-constant bin rule).
pub fn interp_error_sweep<T: Real>(
    cfg: &ArrayConfig<T>,
    gamma: &DoaVector<T>,
    kind: CompressionKind,
    order: usize,
) -> Result<ErrorSweep<T>> {
    if order == 0 {
        return Err(Error::InvalidArgument(
            "interpolation order must be positive",
        ));
    }
    let interval = cfg.index_interval();
    let span = cfg.r2() - cfg.r1();
    let abscissas: Vec<T> = match kind {
        CompressionKind::Chebyshev => cheb_nodes(order, interval)?,
        CompressionKind::Bin => {
            let width = real::<T>(span as f64) / real_from_usize::<T>(order);
            (0..order)
                .map(|p| real::<T>(cfg.r1() as f64) + (real_from_usize::<T>(p) + real(0.5)) * width)
                .collect()
        }
    };
    let node_projectors: Vec<CMatrix<T>> = abscissas
        .iter()
        .map(|&rho| projection_orth(&steering_matrix(cfg, rho, gamma)))
        .collect::<Result<_>>()?;

    let m = cfg.num_sensors();
    let mut per_index = Vec::with_capacity(cfg.num_indices());
    let mut max_error = T::zero();
    for r in cfg.r1()..=cfg.r2() {
        let truth = projection_orth(&steering_matrix(cfg, real(r as f64), gamma))?;
        let mut approx = CMatrix::zeros(m, m);
        match kind {
            CompressionKind::Chebyshev => {
                let w = cheb_weights(order, interval, real(r as f64))?;
                for (p, &wp) in w.iter().enumerate() {
                    if wp == T::zero() {
                        continue;
                    }
                    for i in 0..m {
                        for j in 0..m {
                            approx[(i, j)] += node_projectors[p][(i, j)] * wp;
                        }
                    }
                }
            }
            CompressionKind::Bin => {
                let idx = bin_index(r - cfg.r1(), span, order).unwrap_or(order - 1);
                approx = node_projectors[idx].clone();
            }
        }
        let err = truth.sub(&approx).max_abs_entry();
        max_error = max_error.max(err);
        per_index.push((r, err));
    }
    Ok(ErrorSweep {
        per_index,
        max_error,
    })
}
