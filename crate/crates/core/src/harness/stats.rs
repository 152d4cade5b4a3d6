//! Binomial interval helpers.

use serde::{Deserialize, Serialize};

/// Normal quantile used for 95% intervals.
pub const Z95: f64 = 1.96;

/// Two-sided score interval for a binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson(successes: u64, n: u64, z: f64) -> Interval {
    if n == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Interval { lo: (center - half).max(0.0), hi: (center + half).min(1.0) }
}

/// Standard deviation of an empirical rate over `n` trials when the true
/// rate is `p0`.
pub fn binomial_sigma(p0: f64, n: u64) -> f64 {
    (p0 * (1.0 - p0) / n as f64).sqrt()
}
