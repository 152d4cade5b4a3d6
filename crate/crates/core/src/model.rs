//! System parameters, energy schedules, rates and message sampling.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{uniform, uniform_message};

/// Channel and population parameters for one blocklength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    n: usize,
    ell: usize,
    alpha: f64,
    n0: f64,
}

impl SystemParams {
    pub fn new(n: usize, ell: usize, alpha: f64, n0: f64) -> Result<Self> {
        if n == 0 || ell == 0 {
            return Err(domain(format!("n and ell must be positive, got n={n}, ell={ell}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(domain(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(domain(format!("N0 must be positive, got {n0}")));
        }
        Ok(Self { n, ell, alpha, n0 })
    }

    /// Blocklength.
    pub fn n(&self) -> usize {
        self.n
    }
    /// Total number of users.
    pub fn ell(&self) -> usize {
        self.ell
    }
    /// Probability that a user is active.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// Noise spectral density; the per-coordinate noise variance is `n0 / 2`.
    pub fn n0(&self) -> f64 {
        self.n0
    }
    /// Average number of active users.
    pub fn k(&self) -> f64 {
        self.alpha * self.ell as f64
    }

    /// Copy of these parameters with a different noise level.
    pub fn with_n0(&self, n0: f64) -> Result<Self> {
        Self::new(self.n, self.ell, self.alpha, n0)
    }
}

/// Which transmission scheme an energy schedule belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Signatures for activity detection followed by joint message decoding.
    Joint,
    /// Disjoint per-user slots carrying a pilot and a PPM word.
    Ortho,
}

/// Energy budget and its split between the detection and message phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySchedule {
    pub scheme: Scheme,
    /// Total energy per user.
    pub energy: f64,
    /// Signature fraction `b` (joint) or pilot fraction `t` (ortho).
    pub split: f64,
    /// Schedule constant.
    pub c: f64,
    /// Signature length (joint) or pilot symbols per slot (ortho, always 1).
    pub n_sig: usize,
    /// Message length (joint) or message symbols per slot (ortho).
    pub n_msg: usize,
    /// Energy spent on the signature or pilot.
    pub e_sig: f64,
    /// Energy spent on the message.
    pub e_msg: f64,
    /// Channel uses available to one user: `n` (joint) or `floor(n / ell)` (ortho).
    pub slot_len: usize,
}

fn check_fraction(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{what} must lie in (0, 1), got {x}")))
    }
}

/// Schedule for the signature-plus-joint-decoding scheme.
///
/// `c = ln(n / (k ln ell))`, `E = c ln ell`, the first `floor(b n)` channel
/// uses carry signatures with energy `bE`.
pub fn make_joint_schedule(params: &SystemParams, b: f64) -> Result<EnergySchedule> {
    check_fraction(b, "signature fraction b")?;
    let n = params.n();
    let ell = params.ell();
    if ell < 2 {
        return Err(Error::InvalidRegime(format!("joint scheme needs ell >= 2, got {ell}")));
    }
    let load = params.k() * (ell as f64).ln();
    if load >= n as f64 {
        return Err(Error::InvalidRegime(format!(
            "k ln ell = {load:.4} is not below n = {n}"
        )));
    }
    let c = (n as f64 / load).ln();
    let energy = c * (ell as f64).ln();
    let n_sig = (b * n as f64).floor() as usize;
    let n_msg = n - n_sig;
    if n_sig == 0 || n_msg == 0 {
        return Err(Error::InvalidRegime(format!(
            "split b={b} leaves an empty phase at n={n}"
        )));
    }
    Ok(EnergySchedule {
        scheme: Scheme::Joint,
        energy,
        split: b,
        c,
        n_sig,
        n_msg,
        e_sig: b * energy,
        e_msg: (1.0 - b) * energy,
        slot_len: n,
    })
}

/// Schedule for the pilot-plus-PPM orthogonal scheme.
///
/// `c = ln(n / (ell ln n))`, `E = c ln n`; each user owns `floor(n / ell)`
/// channel uses, one of which is the pilot.
pub fn make_ortho_schedule(params: &SystemParams, t: f64) -> Result<EnergySchedule> {
    check_fraction(t, "pilot fraction t")?;
    let n = params.n();
    let ell = params.ell();
    let slot = n / ell;
    if slot < 2 {
        return Err(Error::InvalidRegime(format!(
            "slot length n/ell = {slot} cannot hold a pilot and a message symbol"
        )));
    }
    let load = ell as f64 * (n as f64).ln();
    if load >= n as f64 {
        return Err(Error::InvalidRegime(format!(
            "ell ln n = {load:.4} is not below n = {n}"
        )));
    }
    let c = (n as f64 / load).ln();
    let energy = c * (n as f64).ln();
    Ok(EnergySchedule {
        scheme: Scheme::Ortho,
        energy,
        split: t,
        c,
        n_sig: 1,
        n_msg: slot - 1,
        e_sig: t * energy,
        e_msg: (1.0 - t) * energy,
        slot_len: slot,
    })
}

/// Capacity per unit energy of the single-user channel, in nats.
pub fn single_user_capacity_pue(n0: f64) -> Result<f64> {
    if n0 > 0.0 {
        Ok(1.0 / n0)
    } else {
        Err(domain(format!("N0 must be positive, got {n0}")))
    }
}

/// Converts nats to bits.
pub fn nats_to_bits(x: f64) -> f64 {
    x / std::f64::consts::LN_2
}

/// Binary entropy in nats, with `0 ln 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("binary entropy needs p in [0, 1], got {p}")));
    }
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// Message count and the implied rate per unit energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    /// Messages per active user.
    pub m: u32,
    /// `ln M / E` in nats per unit energy.
    pub r_dot: f64,
}

impl RateSpec {
    /// Rate implied by an explicit message count.
    pub fn from_messages(m: u32, energy: f64) -> Result<Self> {
        if m < 2 {
            return Err(domain(format!("M must be at least 2, got {m}")));
        }
        if !(energy > 0.0) {
            return Err(domain(format!("energy must be positive, got {energy}")));
        }
        Ok(Self { m, r_dot: (m as f64).ln() / energy })
    }

    /// Message count nearest to `exp(r_dot * E)`, at least 2.
    pub fn from_rate(r_dot: f64, energy: f64) -> Result<Self> {
        if !(r_dot > 0.0) {
            return Err(domain(format!("rate must be positive, got {r_dot}")));
        }
        let m = (r_dot * energy).exp().round();
        if !(m <= u32::MAX as f64) {
            return Err(domain(format!("rate {r_dot} at energy {energy} gives too many messages")));
        }
        Self::from_messages((m as u32).max(2), energy)
    }

    /// Rate in bits per unit energy.
    pub fn r_dot_bits(&self) -> f64 {
        nats_to_bits(self.r_dot)
    }
}

/// Messages of all users; entry 0 marks an inactive user.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MessageVector(pub Vec<u32>);

impl MessageVector {
    pub fn zeros(ell: usize) -> Self {
        Self(vec![0; ell])
    }

    /// Number of active users.
    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|&&w| w != 0).count()
    }

    /// Indices of active users in increasing order.
    pub fn active_users(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &w)| w != 0).map(|(i, _)| i).collect()
    }

    pub fn check_range(&self, m: u32) -> Result<()> {
        match self.0.iter().find(|&&w| w > m) {
            Some(w) => Err(domain(format!("message {w} exceeds M = {m}"))),
            None => Ok(()),
        }
    }
}

impl std::ops::Deref for MessageVector {
    type Target = [u32];
    fn deref(&self) -> &[u32] {
        &self.0
    }
}

/// Draws each user's message: 0 with probability `1 - alpha`, otherwise
/// uniform on `1..=M`.
pub fn sample_messages<R: RngCore + ?Sized>(
    params: &SystemParams,
    m: u32,
    rng: &mut R,
) -> Result<MessageVector> {
    if m < 2 {
        return Err(domain(format!("M must be at least 2, got {m}")));
    }
    let alpha = params.alpha();
    let words = (0..params.ell())
        .map(|_| {
            if uniform(rng) < alpha {
                uniform_message(rng, m)
            } else {
                0
            }
        })
        .collect();
    Ok(MessageVector(words))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let oracle = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        assert!((binary_entropy(0.25).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 0.562335).abs() < 1e-6);
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn joint_schedule_example() {
        let p = SystemParams::new(1000, 16, 0.125, 2.0).unwrap();
        let s = make_joint_schedule(&p, 0.5).unwrap();
        let c = (1000.0 / (2.0 * 16f64.ln())).ln();
        assert!((s.c - c).abs() < 1e-12);
        assert!((s.c - 5.1949).abs() < 1e-4);
        assert!((s.energy - 14.403).abs() < 1e-3);
        assert_eq!(s.n_sig, 500);
        assert_eq!(s.n_sig + s.n_msg, 1000);
        let bad = SystemParams::new(100, 100, 1.0, 2.0).unwrap();
        assert!(matches!(make_joint_schedule(&bad, 0.5), Err(Error::InvalidRegime(_))));
        let tiny = make_joint_schedule(&p, 1e-3).unwrap();
        assert!(tiny.e_sig < 0.02);
    }

    #[test]
    fn ortho_schedule_example() {
        let p = SystemParams::new(1024, 16, 0.5, 2.0).unwrap();
        let s = make_ortho_schedule(&p, 0.25).unwrap();
        let c = (1024.0 / (16.0 * 1024f64.ln())).ln();
        assert!((s.c - c).abs() < 1e-12);
        assert!((s.c - 2.222_81).abs() < 1e-5);
        assert!((s.energy - 15.4074).abs() < 1e-4);
        assert_eq!(s.slot_len, 64);
        let half = make_ortho_schedule(&p, 0.5).unwrap();
        assert_eq!(half.e_sig, half.e_msg);
        let full = SystemParams::new(64, 64, 1.0, 2.0).unwrap();
        assert!(make_ortho_schedule(&full, 0.5).is_err());
    }

    #[test]
    fn capacity_values() {
        assert_eq!(single_user_capacity_pue(2.0).unwrap(), 0.5);
        assert!((nats_to_bits(0.5) - 0.7213).abs() < 1e-4);
        assert_eq!(single_user_capacity_pue(4.0).unwrap(), 0.25);
    }

    #[test]
    fn rate_rounding() {
        let r = RateSpec::from_rate(0.125, 8.0f64.ln() / 0.125).unwrap();
        assert_eq!(r.m, 8);
        assert_eq!(RateSpec::from_rate(0.01, 1.0).unwrap().m, 2);
        assert!(RateSpec::from_messages(1, 1.0).is_err());
    }

    #[test]
    fn message_statistics() {
        let ell = 100_000;
        let p = SystemParams::new(10, ell, 0.3, 2.0).unwrap();
        let w = sample_messages(&p, 4, &mut stream_rng(11, Stream::Messages)).unwrap();
        let active = w.active_count() as f64;
        let sigma = (ell as f64 * 0.3 * 0.7).sqrt();
        assert!((active - 0.3 * ell as f64).abs() < 3.0 * sigma);
        // Message histogram pooled over 20 independent draws of the vector.
        let mut hist = [0f64; 4];
        for seed in 0..20 {
            let w = sample_messages(&p, 4, &mut stream_rng(seed, Stream::Messages)).unwrap();
            for &x in w.iter().filter(|&&x| x != 0) {
                hist[(x - 1) as usize] += 1.0;
            }
        }
        let expect = hist.iter().sum::<f64>() / 4.0;
        let chi2: f64 = hist.iter().map(|h| (h - expect).powi(2) / expect).sum();
        // 99.9% quantile of chi-square with 3 degrees of freedom.
        assert!(chi2 < 16.266, "chi2 = {chi2}");
    }

    #[test]
    fn message_edge_cases() {
        let all = SystemParams::new(10, 50, 1.0, 2.0).unwrap();
        let mut rng = stream_rng(1, Stream::Messages);
        assert_eq!(sample_messages(&all, 3, &mut rng).unwrap().active_count(), 50);
        let none = SystemParams::new(10, 50, 1e-12, 2.0).unwrap();
        assert_eq!(sample_messages(&none, 3, &mut rng).unwrap().active_count(), 0);
        let a = sample_messages(&all, 3, &mut stream_rng(5, Stream::Messages)).unwrap();
        let b = sample_messages(&all, 3, &mut stream_rng(5, Stream::Messages)).unwrap();
        assert_eq!(a, b);
    }
}
