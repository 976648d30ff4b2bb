//! Chebyshev interpolation machinery: nodes, DCT-based coefficient fits,
//! cardinal weight functions and DCT zero-padding oversampling.
//!
//! An order-`P` interpolant of `g` on `[a, b]` is written either as a
//! coefficient series `sum_k c_k T_k(y(x))` ([`ChebSeries`]) or through the
//! cardinal weights `sum_p phi_p(x) g(x_p)` over the mapped Chebyshev nodes
//! `x_p` ([`cheb_weights`]). Both views agree; the series form is what the
//! DCT produces and what Clenshaw evaluation and oversampling consume.
//!
//! Transform conventions: [`dct2`] and [`dct3`] are unnormalized; every
//! scale factor lives in the callers so the transforms stay reusable. The
//! round trip satisfies `dct3(dct2(v))[p] = (N/2) v[p] + (1/2) sum(v)`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::{czero, real, real_from_usize, Real};

/// Closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    a: T,
    b: T,
}

impl<T: Real> Interval<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidArgument("interval requires a < b"));
        }
        Ok(Self { a, b })
    }

    /// The canonical interval `[-1, 1]`.
    pub fn unit() -> Self {
        Self {
            a: -T::one(),
            b: T::one(),
        }
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn mid(&self) -> T {
        (self.a + self.b) / real(2.0)
    }

    pub fn half_width(&self) -> T {
        (self.b - self.a) / real(2.0)
    }

    /// Linear map of `[a, b]` onto `[-1, 1]`: `y(x) = (2x - a - b)/(b - a)`.
    pub fn to_unit(&self, x: T) -> T {
        (x + x - self.a - self.b) / (self.b - self.a)
    }

    /// Inverse of [`Interval::to_unit`].
    pub fn from_unit(&self, y: T) -> T {
        self.half_width() * y + self.mid()
    }

    pub fn contains(&self, x: T) -> bool {
        self.a <= x && x <= self.b
    }
}

/// Roots of the order-`p` Chebyshev polynomial on the unit interval,
/// `y_q = -cos(pi (q - 1/2) / P)` for `q = 1..=P`, in increasing order.
fn unit_nodes<T: Real>(p: usize) -> Vec<T> {
    let pf = real_from_usize::<T>(p);
    (0..p)
        .map(|q| -((T::PI() * (real_from_usize::<T>(q) + real(0.5)) / pf).cos()))
        .collect()
}

/// Mapped Chebyshev nodes `x_q` with `y(x_q)` the order-`p` Chebyshev roots.
///
/// The nodes are strictly increasing and lie strictly inside the interval.
pub fn cheb_nodes<T: Real>(p: usize, interval: Interval<T>) -> Result<Vec<T>> {
    if p == 0 {
        return Err(Error::InvalidArgument("node count must be positive"));
    }
    Ok(unit_nodes(p)
        .into_iter()
        .map(|y| interval.from_unit(y))
        .collect())
}

/// Unnormalized type-2 DCT: `C_k = sum_{p=1..N} v_p cos(pi k (p - 1/2) / N)`.
///
/// Direct summation; the transform sizes used by this crate are small
/// (tens to a few hundred), well below where a fast scheme pays off.
pub fn dct2<T: Real>(v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("dct2 input must be nonempty"));
    }
    let n = v.len();
    let nf = real_from_usize::<T>(n);
    Ok((0..n)
        .map(|k| {
            let kf = real_from_usize::<T>(k);
            let mut acc = czero();
            for (p, vp) in v.iter().enumerate() {
                let angle = T::PI() * kf * (real_from_usize::<T>(p) + real(0.5)) / nf;
                acc += vp * angle.cos();
            }
            acc
        })
        .collect())
}

/// Unnormalized type-3 DCT: `D_p = sum_{k=0..N-1} C_k cos(pi k (p - 1/2) / N)`.
///
/// Inverse of [`dct2`] up to scale: `dct3(dct2(v))[p] = (N/2) v[p] + (1/2) sum(v)`,
/// so `v[p] = (2/N) (dct3(dct2(v))[p] - dct2(v)[0] / 2)`.
pub fn dct3<T: Real>(c: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if c.is_empty() {
        return Err(Error::InvalidArgument("dct3 input must be nonempty"));
    }
    let n = c.len();
    let nf = real_from_usize::<T>(n);
    Ok((0..n)
        .map(|p| {
            let pf = real_from_usize::<T>(p) + real(0.5);
            let mut acc = czero();
            for (k, ck) in c.iter().enumerate() {
                let angle = T::PI() * real_from_usize::<T>(k) * pf / nf;
                acc += ck * angle.cos();
            }
            acc
        })
        .collect())
}

/// Samples of a function at the order-`P` mapped Chebyshev nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid<T> {
    interval: Interval<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> ChebGrid<T> {
    /// Wraps node samples; `values[q]` must be the sample at the `q`th
    /// (increasing) node of [`cheb_nodes`].
    pub fn new(interval: Interval<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one sample"));
        }
        Ok(Self { interval, values })
    }

    /// Samples `f` at the order-`p` nodes.
    pub fn from_fn(
        interval: Interval<T>,
        p: usize,
        mut f: impl FnMut(T) -> Complex<T>,
    ) -> Result<Self> {
        let values = cheb_nodes(p, interval)?.into_iter().map(&mut f).collect();
        Ok(Self { interval, values })
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn interval(&self) -> Interval<T> {
        self.interval
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn nodes(&self) -> Vec<T> {
        cheb_nodes(self.order(), self.interval).expect("grid order is positive")
    }
}

/// Chebyshev coefficient series `sum_k coeffs[k] T_k(y(x))` on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries<T> {
    interval: Interval<T>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> ChebSeries<T> {
    pub fn new(interval: Interval<T>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "series needs at least one coefficient",
            ));
        }
        Ok(Self { interval, coeffs })
    }

    pub fn interval(&self) -> Interval<T> {
        self.interval
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn eval(&self, x: T) -> Complex<T> {
        cheb_eval(self, x)
    }
}

/// Interpolation coefficients of a node grid,
/// `c_k = ((2 - delta_k)/P) sum_p g(x_{P-p+1}) cos(pi k (p - 1/2) / P)`.
///
/// The sample vector is index-reversed before the [`dct2`] call: the DCT
/// kernel runs over the decreasing-angle nodes while the grid stores values
/// at increasing abscissas. Dropping the reversal flips odd coefficients.
pub fn cheb_fit<T: Real>(grid: &ChebGrid<T>) -> ChebSeries<T> {
    let p = grid.order();
    let reversed: Vec<Complex<T>> = grid.values.iter().rev().cloned().collect();
    let mut coeffs = dct2(&reversed).expect("grid is nonempty");
    let pf = real_from_usize::<T>(p);
    let one_over = T::one() / pf;
    let two_over = real::<T>(2.0) / pf;
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= if k == 0 { one_over } else { two_over };
    }
    ChebSeries {
        interval: grid.interval,
        coeffs,
    }
}

/// Evaluates a series by Clenshaw backward recurrence.
///
/// `x` outside the interval is evaluated as-is (extrapolation); callers that
/// care flag it themselves.
pub fn cheb_eval<T: Real>(series: &ChebSeries<T>, x: T) -> Complex<T> {
    let y = series.interval.to_unit(x);
    let two_y = y + y;
    let mut b1 = czero::<T>();
    let mut b2 = czero::<T>();
    for ck in series.coeffs.iter().skip(1).rev() {
        let next = b1 * two_y - b2 + ck;
        b2 = b1;
        b1 = next;
    }
    series.coeffs[0] + b1 * y - b2
}

/// Tolerance below which `|y(x) - y_p|` is treated as a node hit and the
/// exact cardinal value is returned, avoiding the 0/0 in the weight formula.
pub const NODE_SWITCH_TOL: f64 = 1e-9;

/// Cardinal interpolation weights `phi_p(x)`, the degree-`P-1` polynomials
/// with `phi_p(x_q) = delta_pq`, so that the interpolant of `g` is
/// `sum_p phi_p(x) g(x_p)`.
///
/// Evaluated in the normalized barycentric form, which is algebraically
/// identical to the ratio `T_P(y) / (P U_{P-1}(y_p) (y - y_p))` but stays
/// accurate near the nodes and sums to one at working precision. Within
/// [`NODE_SWITCH_TOL`] of a node the exact 0/1 cardinal values are returned.
pub fn cheb_weights<T: Real>(p: usize, interval: Interval<T>, x: T) -> Result<Vec<T>> {
    if p == 0 {
        return Err(Error::InvalidArgument("weight count must be positive"));
    }
    let y = interval.to_unit(x);
    let nodes = unit_nodes::<T>(p);
    let switch = real::<T>(NODE_SWITCH_TOL);
    if let Some(hit) = nodes.iter().position(|&yp| (y - yp).abs() < switch) {
        let mut w = vec![T::zero(); p];
        w[hit] = T::one();
        return Ok(w);
    }
    let pf = real_from_usize::<T>(p);
    // Barycentric weights for first-kind Chebyshev roots: (-1)^p sin(pi (p-1/2)/P).
    let mut terms: Vec<T> = (0..p)
        .map(|q| {
            let s = (T::PI() * (real_from_usize::<T>(q) + real(0.5)) / pf).sin();
            let signed = if q % 2 == 0 { s } else { -s };
            signed / (y - nodes[q])
        })
        .collect();
    let total: T = terms.iter().copied().sum();
    for t in terms.iter_mut() {
        *t /= total;
    }
    Ok(terms)
}

/// Resamples an order-`P` grid onto the order-`R` node set (`R > P`) by the
/// DCT zero-padding method: fit the coefficients, pad with zeros to length
/// `R`, and run one [`dct3`].
///
/// The result equals pointwise [`cheb_eval`] of the fitted interpolant at
/// the `R` new nodes.
pub fn cheb_oversample<T: Real>(grid: &ChebGrid<T>, r: usize) -> Result<ChebGrid<T>> {
    let p = grid.order();
    if r <= p {
        return Err(Error::InvalidArgument(
            "oversampled order must exceed the grid order",
        ));
    }
    let series = cheb_fit(grid);
    let mut padded = series.coeffs;
    padded.resize(r, czero());
    let mut values = dct3(&padded).expect("padded coefficients are nonempty");
    // dct3 emits samples at decreasing-abscissa nodes, mirroring cheb_fit.
    values.reverse();
    Ok(ChebGrid {
        interval: grid.interval,
        values,
    })
}

/// Series of the derivative on the same interval (chain-rule factor
/// `2/(b - a)` included).
pub fn cheb_derivative<T: Real>(series: &ChebSeries<T>) -> ChebSeries<T> {
    let n = series.coeffs.len();
    let scale = real::<T>(2.0) / (series.interval.b() - series.interval.a());
    if n == 1 {
        return ChebSeries {
            interval: series.interval,
            coeffs: vec![czero()],
        };
    }
    let mut d = vec![czero::<T>(); n - 1];
    for k in (1..n).rev() {
        let carry = if k + 1 < n - 1 { d[k + 1] } else { czero() };
        d[k - 1] = carry + series.coeffs[k] * real_from_usize::<T>(2 * k);
    }
    d[0] *= real::<T>(0.5);
    for dk in d.iter_mut() {
        *dk *= scale;
    }
    ChebSeries {
        interval: series.interval,
        coeffs: d,
    }
}
