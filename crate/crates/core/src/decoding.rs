//! Message decoders, the two receivers, and error accounting.

use serde::{Deserialize, Serialize};

use crate::channel::{JointPlan, OrthoPlan, ReceivedVector};
use crate::codebook::{dot, Codebook};
use crate::detection::{
    detect_ls_exhaustive, detect_pilot, v_cap, ActivityVector, LsDetection, DEFAULT_DETECTION_BUDGET,
};
use crate::error::{check_len, domain, Error, Result};
use crate::model::{EnergySchedule, MessageVector, SystemParams};

/// Default cap on the number of message tuples the joint decoder may score.
pub const DEFAULT_DECODING_BUDGET: u64 = 10_000_000;

/// Parameters of the error bounds and the overflow rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub rho: f64,
    pub lambda: f64,
    /// Overflow is declared when more than `floor(xi k)` users are detected.
    pub xi: u32,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self { rho: 0.75, lambda: 2.0 / 3.0, xi: 8 }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(domain(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        if !(self.lambda >= 0.0) {
            return Err(domain(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if self.xi == 0 {
            return Err(domain("xi must be a positive integer"));
        }
        Ok(())
    }

    /// Largest detected-user count that is still decoded.
    pub fn overflow_cap(&self, k: f64) -> usize {
        (self.xi as f64 * k).floor() as usize
    }
}

/// Search limits for the exhaustive detector and decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub detection: u64,
    pub decoding: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { detection: DEFAULT_DETECTION_BUDGET, decoding: DEFAULT_DECODING_BUDGET }
    }
}

/// Error indicators of one transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub joint_error: bool,
    pub per_user_errors: usize,
    pub ape: f64,
    pub overflow: bool,
}

/// ML decision for a PPM slot known to be active: the largest of the
/// message positions `1..=M`, ties to the smallest index.
pub fn decode_ppm(y_slot: &[f64], m: u32) -> Result<u32> {
    if m == 0 || y_slot.len() < m as usize + 1 {
        return Err(Error::Size(format!(
            "slot of length {} cannot hold {m} message positions",
            y_slot.len()
        )));
    }
    let mut best = 1;
    for w in 2..=m {
        if y_slot[w as usize] > y_slot[best as usize] {
            best = w;
        }
    }
    Ok(best)
}

/// Exhaustive ML decoding of the users in `active`, each choosing a message
/// in `1..=M` from its own codebook. Ties go to the lexicographically
/// smallest tuple.
pub fn decode_joint_ml(y_msg: &[f64], plan: &JointPlan, active: &[usize], budget: u64) -> Result<Vec<u32>> {
    let books: Vec<&Codebook> = active.iter().map(|&u| plan.codebook(u)).collect();
    decode_joint_ml_codebooks(y_msg, &books, budget)
}

/// [`decode_joint_ml`] over an explicit list of codebooks.
pub fn decode_joint_ml_codebooks(y_msg: &[f64], books: &[&Codebook], budget: u64) -> Result<Vec<u32>> {
    let users = books.len();
    if users == 0 {
        return Ok(Vec::new());
    }
    let m = books[0].m() as usize;
    for b in books {
        check_len(y_msg.len(), b.len())?;
        if b.m() as usize != m {
            return Err(domain("codebooks must share M"));
        }
    }
    let needed = (m as f64).powi(users as i32);
    if needed > budget as f64 {
        return Err(Error::ComplexityBudget { what: "joint decoding", needed, budget });
    }
    let dim = users * m;
    let word = |p: usize| books[p / m].word((p % m) as u32 + 1);
    let corr: Vec<f64> = (0..dim).map(|p| dot(y_msg, word(p))).collect();
    let mut gram = vec![0.0; dim * dim];
    for p in 0..dim {
        for q in p..dim {
            // Same-user cross terms are never used.
            if p / m == q / m && p != q {
                continue;
            }
            let g = dot(word(p), word(q));
            gram[p * dim + q] = g;
            gram[q * dim + p] = g;
        }
    }
    let mut search = TupleSearch {
        users,
        m,
        corr: &corr,
        gram: &gram,
        cross: vec![0.0; (users + 1) * dim],
        current: vec![0; users],
        best: vec![1; users],
        best_cost: f64::INFINITY,
    };
    search.descend(0, 0.0);
    Ok(search.best)
}

struct TupleSearch<'a> {
    users: usize,
    m: usize,
    corr: &'a [f64],
    gram: &'a [f64],
    /// Row `depth` accumulates `G[chosen][p]` over the chosen words.
    cross: Vec<f64>,
    current: Vec<u32>,
    best: Vec<u32>,
    best_cost: f64,
}

impl TupleSearch<'_> {
    fn descend(&mut self, user: usize, cost: f64) {
        let dim = self.users * self.m;
        let row = user * dim;
        for w in 0..self.m {
            let p = user * self.m + w;
            let next = cost - 2.0 * self.corr[p] + self.gram[p * dim + p] + 2.0 * self.cross[row + p];
            self.current[user] = w as u32 + 1;
            if user + 1 == self.users {
                if next < self.best_cost {
                    self.best_cost = next;
                    self.best.clone_from(&self.current);
                }
                continue;
            }
            let (lo, hi) = self.cross.split_at_mut(row + dim);
            let prev = &lo[row..];
            let g = &self.gram[p * dim..(p + 1) * dim];
            for q in (user + 1) * self.m..dim {
                hi[q] = prev[q] + g[q];
            }
            self.descend(user + 1, next);
        }
    }
}

/// Decisions of the two-phase receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiveOutcome {
    pub w_hat: MessageVector,
    pub detection: LsDetection,
    pub overflow: bool,
}

/// Detects the active set from the signature phase, then jointly decodes the
/// detected users from the message phase. Declares overflow and outputs the
/// all-zero vector when more than `floor(xi k)` users are detected.
pub fn two_phase_receive(
    y: &ReceivedVector,
    plan: &JointPlan,
    params: &SystemParams,
    sched: &EnergySchedule,
    bp: &BoundParams,
    budget: &SearchBudget,
) -> Result<ReceiveOutcome> {
    check_len(plan.n(), y.len())?;
    check_len(params.ell(), plan.users())?;
    let (y_sig, y_msg) = y.samples().split_at(plan.n_sig());
    let v = v_cap(params, sched)?;
    let detection = detect_ls_exhaustive(y_sig, plan.signatures(), v, budget.detection)?;
    let mut w_hat = MessageVector::zeros(params.ell());
    let detected = detection.d_hat.support();
    let overflow = detected.len() > bp.overflow_cap(params.k());
    if !overflow {
        let words = decode_joint_ml(y_msg, plan, &detected, budget.decoding)?;
        for (&u, w) in detected.iter().zip(words) {
            w_hat.0[u] = w;
        }
    }
    Ok(ReceiveOutcome { w_hat, detection, overflow })
}

/// Pilot test per slot, then PPM decoding of the slots declared active.
pub fn ortho_receive(y: &ReceivedVector, plan: &OrthoPlan) -> Result<MessageVector> {
    check_len(plan.n(), y.len())?;
    let cb = plan.codebook();
    let mut w_hat = MessageVector::zeros(plan.users());
    for user in 0..plan.users() {
        let slot = &y.samples()[plan.slot(user)];
        if detect_pilot(slot[0], plan.pilot_fraction(), cb.energy()) {
            w_hat.0[user] = decode_ppm(slot, cb.m())?;
        }
    }
    Ok(w_hat)
}

/// Activity pattern implied by the orthogonal receiver's decisions.
pub fn ortho_detected(w_hat: &MessageVector) -> ActivityVector {
    ActivityVector::from_messages(w_hat)
}

/// Joint and per-user error indicators. Overflow counts as a joint error and
/// as an undelivered message for every active user.
pub fn score_errors(w_true: &MessageVector, w_hat: &MessageVector, overflow: bool) -> Result<ErrorStats> {
    check_len(w_true.len(), w_hat.len())?;
    let per_user_errors = if overflow {
        w_true.active_count()
    } else {
        w_true.iter().zip(w_hat.iter()).filter(|(a, b)| a != b).count()
    };
    let ell = w_true.len().max(1);
    Ok(ErrorStats {
        joint_error: overflow || per_user_errors > 0,
        per_user_errors,
        ape: per_user_errors as f64 / ell as f64,
        overflow,
    })
}
