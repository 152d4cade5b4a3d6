//! User-activity estimation: exhaustive least squares over bounded-weight
//! activity patterns, and pilot thresholding.

use serde::{Deserialize, Serialize};

use crate::codebook::{dot, squared_norm, SignatureMatrix};
use crate::error::{check_len, Error, Result};
use crate::model::{EnergySchedule, MessageVector, SystemParams};

/// Default cap on the number of candidate patterns the detector may score.
pub const DEFAULT_DETECTION_BUDGET: u64 = 10_000_000;

/// Activity indicator per user.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivityVector(pub Vec<bool>);

impl ActivityVector {
    pub fn zeros(ell: usize) -> Self {
        Self(vec![false; ell])
    }

    pub fn from_messages(w: &MessageVector) -> Self {
        Self(w.iter().map(|&x| x != 0).collect())
    }

    pub fn from_support(ell: usize, support: &[usize]) -> Self {
        let mut d = Self::zeros(ell);
        for &i in support {
            d.0[i] = true;
        }
        d
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    /// Number of active entries.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
    /// Indices of active entries in increasing order.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }
}

/// Largest admissible estimated-active count, `floor(k (1 + c))`.
pub fn v_cap(params: &SystemParams, sched: &EnergySchedule) -> Result<usize> {
    v_cap_from(params.k(), sched.c)
}

pub(crate) fn v_cap_from(k: f64, c: f64) -> Result<usize> {
    if !(c > 0.0) {
        return Err(Error::InvalidRegime(format!("schedule constant must be positive, got {c}")));
    }
    Ok((k * (1.0 + c)).floor() as usize)
}

/// Output of the least-squares detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsDetection {
    pub d_hat: ActivityVector,
    /// `|Y - S d_hat|^2`, recomputed directly.
    pub residual: f64,
    /// Number of candidate patterns scored.
    pub candidates: u64,
}

/// Detector output scored against the true activity pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub d_hat: ActivityVector,
    pub misses: usize,
    pub false_alarms: usize,
    pub residual: f64,
}

impl DetectionResult {
    pub fn score(d_true: &ActivityVector, est: LsDetection) -> Result<Self> {
        let (misses, false_alarms) = detection_stats(d_true, &est.d_hat)?;
        Ok(Self { d_hat: est.d_hat, misses, false_alarms, residual: est.residual })
    }
}

/// Number of patterns with weight at most `v` among `ell` users.
pub fn candidate_count(ell: usize, v: usize) -> f64 {
    let mut total = 0.0;
    let mut term = 1.0;
    for j in 0..=v.min(ell) {
        if j > 0 {
            term *= (ell - j + 1) as f64 / j as f64;
        }
        total += term;
    }
    total
}

/// Minimizes `|Y - S d|^2` over every pattern `d` with `|d| <= v`,
/// including the empty pattern.
///
/// Ties go to the smaller weight, then to the lexicographically smaller
/// index tuple. Fails if more than `budget` patterns would be scored.
pub fn detect_ls_exhaustive(
    y_sig: &[f64],
    sigs: &SignatureMatrix,
    v: usize,
    budget: u64,
) -> Result<LsDetection> {
    let ell = sigs.users();
    if ell > 0 {
        check_len(sigs.len(), y_sig.len())?;
    }
    let needed = candidate_count(ell, v);
    if needed > budget as f64 {
        return Err(Error::ComplexityBudget { what: "activity detection", needed, budget });
    }
    let corr: Vec<f64> = (0..ell).map(|i| dot(y_sig, sigs.column(i))).collect();
    let mut gram = vec![0.0; ell * ell];
    for i in 0..ell {
        for j in i..ell {
            let g = dot(sigs.column(i), sigs.column(j));
            gram[i * ell + j] = g;
            gram[j * ell + i] = g;
        }
    }
    let mut search = Search {
        ell,
        v: v.min(ell),
        corr: &corr,
        gram: &gram,
        chosen: Vec::with_capacity(v),
        cross: vec![0.0; (v.min(ell) + 1) * ell],
        best: Vec::new(),
        best_cost: 0.0,
        visited: 1,
    };
    // The empty pattern has cost |Y|^2; costs are tracked relative to it.
    search.descend(0, 0.0);
    let d_hat = ActivityVector::from_support(ell, &search.best);
    let mut fit = y_sig.to_vec();
    for &i in &search.best {
        for (f, s) in fit.iter_mut().zip(sigs.column(i)) {
            *f -= s;
        }
    }
    Ok(LsDetection { d_hat, residual: squared_norm(&fit), candidates: search.visited })
}

struct Search<'a> {
    ell: usize,
    v: usize,
    corr: &'a [f64],
    gram: &'a [f64],
    chosen: Vec<usize>,
    /// Row `depth` holds `sum_{i in chosen} G[i][j]` for every `j`.
    cross: Vec<f64>,
    best: Vec<usize>,
    best_cost: f64,
    visited: u64,
}

impl Search<'_> {
    fn descend(&mut self, start: usize, cost: f64) {
        let depth = self.chosen.len();
        if depth == self.v {
            return;
        }
        let ell = self.ell;
        for j in start..ell {
            let row = depth * ell;
            let next = cost - 2.0 * self.corr[j] + self.gram[j * ell + j] + 2.0 * self.cross[row + j];
            self.visited += 1;
            self.chosen.push(j);
            let weight = depth + 1;
            if next < self.best_cost || (next == self.best_cost && weight < self.best.len()) {
                self.best_cost = next;
                self.best.clone_from(&self.chosen);
            }
            if weight < self.v {
                let (lo, hi) = self.cross.split_at_mut(row + ell);
                let prev = &lo[row..];
                let g = &self.gram[j * ell..(j + 1) * ell];
                for m in (j + 1)..ell {
                    hi[m] = prev[m] + g[m];
                }
                self.descend(j + 1, next);
            }
            self.chosen.pop();
        }
    }
}

/// Declares a user active when its pilot sample exceeds `sqrt(tE) / 2`.
pub fn detect_pilot(y_pilot: f64, t: f64, energy: f64) -> bool {
    y_pilot > (t * energy).sqrt() / 2.0
}

/// Misses and false alarms of `d_hat` against `d_true`.
pub fn detection_stats(d_true: &ActivityVector, d_hat: &ActivityVector) -> Result<(usize, usize)> {
    check_len(d_true.len(), d_hat.len())?;
    let mut misses = 0;
    let mut false_alarms = 0;
    for (&t, &h) in d_true.0.iter().zip(&d_hat.0) {
        match (t, h) {
            (true, false) => misses += 1,
            (false, true) => false_alarms += 1,
            _ => {}
        }
    }
    Ok((misses, false_alarms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::gen_signatures;
    use crate::rng::{stream_rng, Stream};
    use proptest::prelude::*;

    fn brute_force(y: &[f64], s: &SignatureMatrix, v: usize) -> Vec<usize> {
        let ell = s.users();
        let mut best: Option<(f64, usize, Vec<usize>)> = None;
        for mask in 0u32..(1 << ell) {
            let supp: Vec<usize> = (0..ell).filter(|i| mask >> i & 1 == 1).collect();
            if supp.len() > v {
                continue;
            }
            let r: f64 = (0..y.len())
                .map(|j| {
                    let fit: f64 = supp.iter().map(|&i| s.column(i)[j]).sum();
                    (y[j] - fit).powi(2)
                })
                .sum();
            let better = match &best {
                None => true,
                Some((br, bw, bs)) => {
                    r < *br - 1e-9
                        || ((r - br).abs() <= 1e-9
                            && (supp.len() < *bw || (supp.len() == *bw && supp < *bs)))
                }
            };
            if better {
                best = Some((r, supp.len(), supp));
            }
        }
        best.unwrap().2
    }

    #[test]
    fn v_cap_examples() {
        assert_eq!(v_cap_from(2.0, 5.1949).unwrap(), 12);
        assert_eq!(v_cap_from(2.0, 1e-9).unwrap(), 2);
        assert_eq!(v_cap_from(1.0, 1.0).unwrap(), 2);
        assert!(v_cap_from(1.0, 0.0).is_err());
    }

    #[test]
    fn zero_observation_gives_empty_pattern() {
        let s = gen_signatures(6, 20, 3.0, &mut stream_rng(1, Stream::Signatures)).unwrap();
        let out = detect_ls_exhaustive(&[0.0; 20], &s, 3, DEFAULT_DETECTION_BUDGET).unwrap();
        assert_eq!(out.d_hat.weight(), 0);
        assert_eq!(out.residual, 0.0);
        assert_eq!(out.candidates as f64, candidate_count(6, 3));
    }

    #[test]
    fn noiseless_recovery() {
        let s = gen_signatures(12, 128, 10.0, &mut stream_rng(2, Stream::Signatures)).unwrap();
        let truth = ActivityVector::from_support(12, &[1, 5, 11]);
        let y: Vec<f64> = (0..128).map(|j| [1, 5, 11].iter().map(|&i| s.column(i)[j]).sum()).collect();
        let out = detect_ls_exhaustive(&y, &s, 4, DEFAULT_DETECTION_BUDGET).unwrap();
        assert_eq!(out.d_hat, truth);
        assert!(out.residual < 1e-20);
    }

    #[test]
    fn budget_guard() {
        let s = gen_signatures(30, 4, 1.0, &mut stream_rng(3, Stream::Signatures)).unwrap();
        let err = detect_ls_exhaustive(&[0.0; 4], &s, 15, 1000).unwrap_err();
        assert!(matches!(err, Error::ComplexityBudget { .. }));
        assert!(detect_ls_exhaustive(&[0.0; 5], &s, 1, 1000).is_err());
    }

    #[test]
    fn pilot_threshold() {
        assert!(detect_pilot(2.0, 0.25, 16.0));
        assert!(!detect_pilot(0.0, 0.25, 16.0));
    }

    #[test]
    fn stats_examples() {
        let t = ActivityVector(vec![true, true, false, false]);
        let h = ActivityVector(vec![true, false, true, false]);
        assert_eq!(detection_stats(&t, &t).unwrap(), (0, 0));
        assert_eq!(detection_stats(&t, &h).unwrap(), (1, 1));
        assert!(detection_stats(&t, &ActivityVector::zeros(3)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_brute_force(seed in any::<u64>(), ell in 1usize..8, v in 0usize..5, scale in 0.0f64..3.0) {
            let s = gen_signatures(ell, 6, 2.0, &mut stream_rng(seed, Stream::Signatures)).unwrap();
            let mut y = vec![0.0; 6];
            crate::rng::fill_normal(&mut stream_rng(seed, Stream::Noise), scale, &mut y);
            let out = detect_ls_exhaustive(&y, &s, v, DEFAULT_DETECTION_BUDGET).unwrap();
            prop_assert!(out.d_hat.weight() <= v);
            prop_assert!(out.residual <= squared_norm(&y) * (1.0 + 1e-12) + 1e-12);
            prop_assert_eq!(out.d_hat.support(), brute_force(&y, &s, v));
        }

        #[test]
        fn bookkeeping_identity(bits in proptest::collection::vec(any::<(bool, bool)>(), 0..40)) {
            let t = ActivityVector(bits.iter().map(|b| b.0).collect());
            let h = ActivityVector(bits.iter().map(|b| b.1).collect());
            let (k1, k2) = detection_stats(&t, &h).unwrap();
            let oracle_miss = t.support().iter().filter(|i| !h.0[**i]).count();
            let oracle_fa = h.support().iter().filter(|i| !t.0[**i]).count();
            prop_assert_eq!((k1, k2), (oracle_miss, oracle_fa));
            prop_assert_eq!(t.weight() + k2, h.weight() + k1);
        }
    }
}
