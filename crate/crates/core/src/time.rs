//! Integer microsecond time base.
//!
//! All simulation arithmetic happens on [`Ticks`] so that event ordering is
//! exact and reproducible; public interfaces convert to and from milliseconds.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// Number of ticks in one millisecond.
pub const TICKS_PER_MS: i64 = 1_000;

/// A point or span in simulated time, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ticks(pub i64);

impl Ticks {
    pub const ZERO: Ticks = Ticks(0);

    /// Rounds a millisecond value to the nearest tick.
    pub fn from_ms(ms: f64) -> Self {
        Ticks((ms * TICKS_PER_MS as f64).round() as i64)
    }

    pub fn from_secs(secs: f64) -> Self {
        Self::from_ms(secs * 1_000.0)
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 / TICKS_PER_MS as f64
    }
}

impl Add for Ticks {
    type Output = Ticks;
    fn add(self, rhs: Ticks) -> Ticks {
        Ticks(self.0 + rhs.0)
    }
}

impl Sub for Ticks {
    type Output = Ticks;
    fn sub(self, rhs: Ticks) -> Ticks {
        Ticks(self.0 - rhs.0)
    }
}

impl fmt::Display for Ticks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.as_ms())
    }
}
