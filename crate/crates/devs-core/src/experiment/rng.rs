//! Deterministic random numbers: SplitMix64, bit-exact across platforms.
//!
//! The generator is a pure function of its state — [`RngState::next`]
//! consumes a state and returns the new one — so models that own a stream
//! stay pure functions of `(state, inputs)`, and replaying a seed replays
//! the simulation. Floating-point derivations use [`libm`] so that results
//! do not depend on the platform's math library.

use std::fmt;

/// SplitMix64 state. `Copy` and four words small: embed it in model state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState(u64);

impl RngState {
    pub fn seed(seed: u64) -> RngState {
        RngState(seed)
    }

    /// One SplitMix64 step: the next 64 uniform bits and the advanced state.
    ///
    /// `s' = s + 0x9E3779B97F4A7C15`;
    /// `z = (z ^ (z >> 30)) · 0xBF58476D1CE4E5B9`;
    /// `z = (z ^ (z >> 27)) · 0x94D049BB133111EB`;
    /// `u = z ^ (z >> 31)` — all mod 2⁶⁴.
    pub fn next(self) -> (u64, RngState) {
        let s = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        (z ^ (z >> 31), RngState(s))
    }

    /// A double in (0, 1]: the top 53 bits scaled by 2⁻⁵³, with a draw of
    /// exactly 0 mapped to 2⁻⁵³ so logarithms stay finite.
    pub fn unit(self) -> (f64, RngState) {
        let (u, s) = self.next();
        let mantissa = (u >> 11).max(1);
        (mantissa as f64 * (-53f64).exp2(), s)
    }

    /// Exponentially distributed duration with the given rate:
    /// `x = −ln(u01) / rate`.
    pub fn exponential(self, rate: f64) -> (f64, RngState) {
        debug_assert!(rate > 0.0, "exponential rate must be positive");
        let (u01, s) = self.unit();
        (-libm::log(u01) / rate, s)
    }

    /// Uniformly distributed value in (lo, hi]: `lo + (hi − lo) · u01`.
    pub fn uniform(self, lo: f64, hi: f64) -> (f64, RngState) {
        debug_assert!(lo <= hi, "uniform bounds out of order");
        let (u01, s) = self.unit();
        (lo + (hi - lo) * u01, s)
    }
}

impl fmt::Display for RngState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#018x}", self.0)
    }
}
