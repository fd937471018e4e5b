//! Closed real intervals with Chebyshev sampling.

use crate::error::{Error, ErrorCode, Result};

/// A nonempty closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::new(
                ErrorCode::BadInterval,
                format!("invalid interval [{lo}, {hi}]"),
            ));
        }
        Ok(Interval { lo, hi })
    }

    /// Interval from unordered endpoints (used for images under decreasing maps).
    pub fn from_endpoints(a: f64, b: f64) -> Result<Self> {
        Interval::new(a.min(b), a.max(b))
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, t: f64) -> bool {
        // Tiny slack so that values produced by rounding at the endpoints
        // still count as inside.
        let slack = 1e-12 * (1.0 + self.length());
        t >= self.lo - slack && t <= self.hi + slack
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.contains(other.lo) && self.contains(other.hi)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi)).ok()
    }

    /// `n` Chebyshev-distributed sample points, deterministic, endpoint-free.
    pub fn chebyshev_samples(&self, n: usize) -> Vec<f64> {
        let c = self.midpoint();
        let rho = 0.5 * self.length();
        (0..n)
            .map(|i| {
                let theta = std::f64::consts::PI * (2.0 * i as f64 + 1.0) / (2.0 * n as f64);
                c + rho * theta.cos()
            })
            .collect()
    }

    /// `n + 1` uniformly spaced nodes including both endpoints.
    pub fn uniform_nodes(&self, n: usize) -> Vec<f64> {
        assert!(n >= 1);
        let h = self.length() / n as f64;
        let mut v: Vec<f64> = (0..=n).map(|i| self.lo + h * i as f64).collect();
        v[n] = self.hi;
        v
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{:.16e}, {:.16e}]", self.lo, self.hi)
    }
}
