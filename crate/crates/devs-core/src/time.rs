//! Simulation time algebra.
//!
//! Two scalar types back every timing decision in the kernel:
//!
//! * [`Duration`] — a span of simulated time: finite non-negative, or `+∞`
//!   (the time advance of a passive model). Never NaN.
//! * [`Instant`] — a point on the simulated time axis: finite (possibly
//!   negative — the last-event time of a model initialized with elapsed
//!   time lies before the simulation start) or `+∞` ("never"). Never NaN.
//!
//! Both wrap `f64` and compare exactly: the kernel decides "is this model
//! imminent" by bit-exact equality on `Instant`, never by epsilon. `+∞` is
//! absorbing under addition and compares greater than every finite value,
//! which makes `min` over child event times and `t_l + ta(s)` work without
//! special cases at call sites.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};

use thiserror::Error;

/// Error raised by checked constructors of [`Duration`] and [`Instant`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    /// A duration must be a non-negative number or `+∞`.
    #[error("duration must be non-negative and not NaN (got {0})")]
    InvalidDuration(String),
    /// An instant must be a number or `+∞`.
    #[error("instant must not be NaN")]
    InvalidInstant,
}

/// A non-negative span of simulated time, or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Duration(f64);

impl Duration {
    /// Zero-length span.
    pub const ZERO: Duration = Duration(0.0);
    /// The passive time advance: "never".
    pub const INFINITY: Duration = Duration(f64::INFINITY);

    /// Builds a duration, panicking on negative or NaN input.
    ///
    /// Mirrors `std::time::Duration::from_secs_f64`: an invalid literal is a
    /// programming error, not a recoverable condition. Use [`Duration::try_new`]
    /// when the value comes from user input.
    pub fn new(value: f64) -> Duration {
        Duration::try_new(value).unwrap_or_else(|e| panic!("{e}"))
    }

    /// Fallible constructor for values originating outside the program.
    pub fn try_new(value: f64) -> Result<Duration, TimeError> {
        if value.is_nan() || value < 0.0 {
            Err(TimeError::InvalidDuration(format!("{value}")))
        } else {
            Ok(Duration(value))
        }
    }

    /// Raw value; `f64::INFINITY` when the span is infinite.
    pub fn as_f64(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// `self − rhs`, or `None` when the difference would be negative or
    /// indeterminate (`∞ − ∞`). `∞ − finite = ∞`.
    pub fn checked_sub(self, rhs: Duration) -> Option<Duration> {
        if self.0.is_infinite() && rhs.0.is_infinite() {
            return None;
        }
        let diff = self.0 - rhs.0;
        if diff < 0.0 || diff.is_nan() {
            None
        } else {
            Some(Duration(diff))
        }
    }
}

impl Add for Duration {
    type Output = Duration;

    /// Absorbing addition: any infinite operand yields `∞`.
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl Eq for Duration {}

impl Ord for Duration {
    fn cmp(&self, other: &Self) -> Ordering {
        // Total by construction: NaN is unrepresentable.
        self.0.partial_cmp(&other.0).expect("Duration is never NaN")
    }
}

impl PartialOrd for Duration {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_time(self.0))
    }
}

/// A point in simulated time: finite (possibly negative) or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instant(f64);

impl Instant {
    /// The conventional simulation start, `t = 0`.
    pub const ZERO: Instant = Instant(0.0);
    /// "Never": later than every finite instant.
    pub const INFINITY: Instant = Instant(f64::INFINITY);

    /// Builds an instant, panicking on NaN.
    pub fn new(value: f64) -> Instant {
        Instant::try_new(value).unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn try_new(value: f64) -> Result<Instant, TimeError> {
        if value.is_nan() {
            Err(TimeError::InvalidInstant)
        } else {
            Ok(Instant(value))
        }
    }

    pub fn as_f64(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Elapsed time from `earlier` to `self`.
    ///
    /// `None` when `earlier` lies after `self` or either endpoint makes the
    /// span indeterminate (`∞ − ∞`, `finite − ∞`).
    pub fn duration_since(self, earlier: Instant) -> Option<Duration> {
        let diff = self.0 - earlier.0;
        if diff.is_nan() || diff < 0.0 {
            None
        } else {
            Some(Duration(diff))
        }
    }
}

impl Add<Duration> for Instant {
    type Output = Instant;

    /// Shifts an instant forward; `∞` is absorbing on either side.
    fn add(self, rhs: Duration) -> Instant {
        Instant(self.0 + rhs.0)
    }
}

impl Sub<Duration> for Instant {
    type Output = Instant;

    /// Shifts an instant backward (`t_l = t − e`). The subtrahend is always
    /// finite in kernel use (elapsed time is finite by construction); an
    /// infinite subtrahend is a programming error.
    fn sub(self, rhs: Duration) -> Instant {
        let v = self.0 - rhs.0;
        assert!(!v.is_nan(), "Instant − Duration must not be indeterminate");
        Instant(v)
    }
}

impl Eq for Instant {}

impl Ord for Instant {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("Instant is never NaN")
    }
}

impl PartialOrd for Instant {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_time(self.0))
    }
}

/// Canonical textual rendering of a time value: fixed 6 decimal places for
/// finite values, the literal `inf` for `+∞`. Used by trace logs and CSV
/// output, so it must stay byte-deterministic.
pub fn fmt_time(value: f64) -> String {
    if value.is_infinite() {
        "inf".to_string()
    } else {
        format!("{value:.6}")
    }
}
