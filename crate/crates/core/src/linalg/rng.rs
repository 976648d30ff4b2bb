//! Seeded random-number stream for reproducible simulation.
//!
//! A self-contained xoshiro256++ generator (seeded through SplitMix64)
//! keeps Monte-Carlo runs bit-stable across builds: the draw sequence is
//! pinned by this file alone, not by an external crate version.

use num_complex::Complex;

use crate::num::{real, Real};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic stream of uniforms and standard complex Gaussians.
///
/// Complex draws have independent real and imaginary parts of variance 1/2
/// each, so the complex variance is one.
#[derive(Debug, Clone)]
pub struct GaussianStream<T> {
    s: [u64; 4],
    _marker: std::marker::PhantomData<T>,
}

impl<T: Real> GaussianStream<T> {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self {
            s,
            _marker: std::marker::PhantomData,
        }
    }

    /// Independent stream for one Monte-Carlo trial, derived by seed mixing
    /// so trials can run in any order (or in parallel) and stay reproducible.
    pub fn for_trial(master_seed: u64, trial: u64) -> Self {
        let mut sm = master_seed ^ trial.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA);
        Self::new(splitmix64(&mut sm))
    }

    fn next_u64(&mut self) -> u64 {
        // xoshiro256++
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` with 53 significant bits.
    pub fn next_uniform(&mut self) -> T {
        real::<T>((self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0))
    }

    /// Standard real Gaussian `N(0, 1)` (Box-Muller).
    pub fn next_standard_normal(&mut self) -> T {
        let u1 = T::one() - self.next_uniform();
        let u2 = self.next_uniform();
        (real::<T>(-2.0) * u1.ln()).sqrt() * (T::PI() * (u2 + u2)).cos()
    }

    /// Standard complex Gaussian `CN(0, 1)`: radius `sqrt(-ln u)` at a
    /// uniform phase, giving `N(0, 1/2)` per component.
    pub fn next_complex(&mut self) -> Complex<T> {
        let u1 = T::one() - self.next_uniform();
        let u2 = self.next_uniform();
        let radius = (-u1.ln()).sqrt();
        let phase = (T::PI() + T::PI()) * u2;
        Complex::new(radius * phase.cos(), radius * phase.sin())
    }
}
