//! Dense complex linear algebra and statistics primitives: thin Householder
//! QR, Hermitian eigendecomposition, the chi-square inverse CDF and a
//! seeded complex-Gaussian stream.
//!
//! Matrices here are small (sensor-count sized), so everything is direct
//! dense arithmetic with no blocking.

mod chi2;
mod rng;

pub use chi2::{chi2_cdf, chi2_inv_cdf};
pub use rng::GaussianStream;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::{czero, real, Real};

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn hermitian_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matrix product");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == czero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(
            self.cols,
            v.len(),
            "dimension mismatch in matrix-vector product"
        );
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// `A^H v` without forming the adjoint.
    pub fn adjoint_mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.rows, v.len(), "dimension mismatch in adjoint product");
        let mut out = vec![czero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += self[(i, j)].conj() * vi;
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: T) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest elementwise modulus.
    pub fn max_abs_entry(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin QR factors: `A = Q1 * Rfac` with `Q1` (M x K) orthonormal columns
/// and `Rfac` (K x K) upper triangular with nonnegative real diagonal.
#[derive(Debug, Clone)]
pub struct QRFactors<T> {
    pub q1: CMatrix<T>,
    pub rfac: CMatrix<T>,
}

/// Relative diagonal tolerance below which a column is declared dependent.
pub const QR_RANK_TOL: f64 = 1e-12;

/// Thin Householder QR of a full-column-rank M x K matrix (M >= K).
///
/// Rank deficiency (`|Rfac[k,k]| < 1e-12 * ||A||_F`) is reported with the
/// offending column index so callers can surface degenerate inputs such as
/// coincident arrival parameters.
pub fn thin_qr<T: Real>(a: &CMatrix<T>) -> Result<QRFactors<T>> {
    let (m, k) = (a.rows(), a.cols());
    if m < k {
        return Err(Error::InvalidArgument(
            "thin QR needs at least as many rows as columns",
        ));
    }
    if k == 0 {
        return Ok(QRFactors {
            q1: CMatrix::zeros(m, 0),
            rfac: CMatrix::zeros(0, 0),
        });
    }
    let norm_a = a.frobenius_norm();
    let rank_tol = real::<T>(QR_RANK_TOL) * norm_a;

    let mut w = a.clone();
    // Unit reflector vectors; v[j] has length m - j.
    let mut reflectors: Vec<Vec<Complex<T>>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v: Vec<Complex<T>> = (j..m).map(|i| w[(i, j)]).collect();
        let sigma = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if sigma <= rank_tol {
            return Err(Error::SingularMatrix { column: j });
        }
        let alpha = v[0];
        let phase = if alpha.norm() > T::zero() {
            alpha / alpha.norm()
        } else {
            Complex::new(T::one(), T::zero())
        };
        let beta = -phase * sigma;
        v[0] = alpha - beta;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if vnorm > T::zero() {
            for z in v.iter_mut() {
                *z /= vnorm;
            }
            // Apply H = I - 2 v v^H to the trailing block.
            for c in j..k {
                let dot: Complex<T> = v
                    .iter()
                    .enumerate()
                    .map(|(i, z)| z.conj() * w[(j + i, c)])
                    .sum();
                let two_dot = dot * real::<T>(2.0);
                for (i, z) in v.iter().enumerate() {
                    let upd = z * two_dot;
                    w[(j + i, c)] -= upd;
                }
            }
        }
        reflectors.push(v);
        if w[(j, j)].norm() < rank_tol {
            return Err(Error::SingularMatrix { column: j });
        }
    }

    let mut rfac = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            rfac[(i, j)] = w[(i, j)];
        }
    }

    // Q1 = H_0 ... H_{k-1} [I_k; 0], applying reflectors in reverse.
    let mut q1 = CMatrix::zeros(m, k);
    for i in 0..k {
        q1[(i, i)] = Complex::new(T::one(), T::zero());
    }
    for j in (0..k).rev() {
        let v = &reflectors[j];
        for c in 0..k {
            let dot: Complex<T> = v
                .iter()
                .enumerate()
                .map(|(i, z)| z.conj() * q1[(j + i, c)])
                .sum();
            let two_dot = dot * real::<T>(2.0);
            for (i, z) in v.iter().enumerate() {
                let upd = z * two_dot;
                q1[(j + i, c)] -= upd;
            }
        }
    }

    // Normalize column phases so the diagonal of Rfac is real nonnegative.
    for j in 0..k {
        let d = rfac[(j, j)];
        let mag = d.norm();
        if mag > T::zero() {
            let u = d.conj() / mag;
            for c in j..k {
                rfac[(j, c)] *= u;
            }
            let uc = u.conj();
            for i in 0..m {
                q1[(i, j)] *= uc;
            }
        }
    }

    Ok(QRFactors { q1, rfac })
}

/// Top-`k` eigenpairs of a Hermitian matrix, eigenvalues descending.
///
/// The input is symmetrized internally; a cyclic complex Jacobi iteration
/// drives the off-diagonal mass to machine precision, which is plenty for
/// the sensor-count-sized matrices this crate works with.
pub fn hermitian_eig<T: Real>(h: &CMatrix<T>, k: usize) -> Result<(Vec<T>, CMatrix<T>)> {
    let n = h.rows();
    if h.cols() != n {
        return Err(Error::InvalidArgument(
            "eigendecomposition needs a square matrix",
        ));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument("eigenpair count must be in 1..=dim"));
    }

    // Symmetrized working copy.
    let mut s: CMatrix<T> =
        CMatrix::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * real::<T>(0.5));
    let mut v = CMatrix::<T>::identity(n);
    let scale = s.frobenius_norm().max(T::min_positive_value());
    let stop = scale * T::epsilon() * real(50.0);

    for _sweep in 0..60 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += s[(i, j)].norm_sqr();
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[(p, q)];
                let mag = apq.norm();
                if mag <= scale * T::epsilon() * real(1e-2) {
                    continue;
                }
                let app = s[(p, p)].re;
                let aqq = s[(q, q)].re;
                let u = apq / mag;
                let tau = (aqq - app) / (mag + mag);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let sn = t * c;
                // Columns: col_p <- c col_p - s conj(u) col_q ; col_q <- s col_p + c conj(u) col_q
                let uc = u.conj();
                for i in 0..n {
                    let sip = s[(i, p)];
                    let siq = s[(i, q)];
                    s[(i, p)] = sip * c - siq * uc * sn;
                    s[(i, q)] = sip * sn + siq * uc * c;
                }
                // Rows: row_p <- c row_p - s u row_q ; row_q <- s row_p + c u row_q
                for j in 0..n {
                    let spj = s[(p, j)];
                    let sqj = s[(q, j)];
                    s[(p, j)] = spj * c - sqj * u * sn;
                    s[(q, j)] = spj * sn + sqj * u * c;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * uc * sn;
                    v[(i, q)] = vip * sn + viq * uc * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigs: Vec<T> = (0..n).map(|i| s[(i, i)].re).collect();
    order.sort_by(|&a, &b| {
        eigs[b]
            .partial_cmp(&eigs[a])
            .expect("eigenvalues are finite")
    });

    let values: Vec<T> = order.iter().take(k).map(|&i| eigs[i]).collect();
    let vectors = CMatrix::from_fn(n, k, |i, j| v[(i, order[j])]);
    Ok((values, vectors))
}
