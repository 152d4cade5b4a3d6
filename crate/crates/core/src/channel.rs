//! Superposition AWGN channel with random user activity.

use rand::RngCore;

use crate::codebook::{gen_codebook, gen_ppm_codebook, gen_signatures, Codebook, SignatureMatrix};
use crate::error::{check_len, domain, Result};
use crate::model::{EnergySchedule, MessageVector, Scheme, SystemParams};
use crate::rng::{fill_normal, mix_seed, stream_rng, Stream};

/// Channel output.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedVector {
    samples: Vec<f64>,
}

impl ReceivedVector {
    pub fn new(samples: Vec<f64>) -> Self {
        Self { samples }
    }
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    pub fn into_inner(self) -> Vec<f64> {
        self.samples
    }
}

/// Signatures plus independent per-user message codebooks.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPlan {
    signatures: SignatureMatrix,
    codebooks: Vec<Codebook>,
}

impl JointPlan {
    pub fn new(signatures: SignatureMatrix, codebooks: Vec<Codebook>) -> Result<Self> {
        check_len(signatures.users(), codebooks.len())?;
        if let Some(first) = codebooks.first() {
            for cb in &codebooks {
                if cb.m() != first.m() || cb.len() != first.len() || cb.energy() != first.energy() {
                    return Err(domain("codebooks must share M, length and energy"));
                }
            }
        }
        Ok(Self { signatures, codebooks })
    }

    /// Draws signatures and codebooks from `seed`.
    ///
    /// User `i`'s codebook comes from its own substream so that it does not
    /// depend on how many other users there are.
    pub fn generate(params: &SystemParams, sched: &EnergySchedule, m: u32, seed: u64) -> Result<Self> {
        if sched.scheme != Scheme::Joint {
            return Err(domain("joint plan needs a joint schedule"));
        }
        let signatures = gen_signatures(
            params.ell(),
            sched.n_sig,
            sched.e_sig,
            &mut stream_rng(seed, Stream::Signatures),
        )?;
        let codebooks = (0..params.ell())
            .map(|i| {
                let mut rng = stream_rng(mix_seed(seed, i as u64), Stream::Codebooks);
                gen_codebook(m, sched.n_msg, sched.e_msg, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(signatures, codebooks)
    }

    pub fn signatures(&self) -> &SignatureMatrix {
        &self.signatures
    }
    pub fn codebook(&self, user: usize) -> &Codebook {
        &self.codebooks[user]
    }
    pub fn users(&self) -> usize {
        self.codebooks.len()
    }
    pub fn m(&self) -> u32 {
        self.codebooks.first().map_or(0, Codebook::m)
    }
    pub fn n_sig(&self) -> usize {
        self.signatures.len()
    }
    pub fn n_msg(&self) -> usize {
        self.codebooks.first().map_or(0, Codebook::len)
    }
    pub fn n(&self) -> usize {
        self.n_sig() + self.n_msg()
    }
}

/// Disjoint slots of `slot_len` channel uses; all users share a PPM codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoPlan {
    n: usize,
    users: usize,
    slot_len: usize,
    t: f64,
    codebook: Codebook,
}

impl OrthoPlan {
    pub fn new(params: &SystemParams, sched: &EnergySchedule, m: u32) -> Result<Self> {
        if sched.scheme != Scheme::Ortho {
            return Err(domain("orthogonal plan needs an orthogonal schedule"));
        }
        let codebook = gen_ppm_codebook(m, sched.slot_len, sched.energy, sched.split)?;
        Ok(Self {
            n: params.n(),
            users: params.ell(),
            slot_len: sched.slot_len,
            t: sched.split,
            codebook,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn users(&self) -> usize {
        self.users
    }
    pub fn slot_len(&self) -> usize {
        self.slot_len
    }
    pub fn pilot_fraction(&self) -> f64 {
        self.t
    }
    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }
    /// Channel-use range owned by `user`.
    pub fn slot(&self, user: usize) -> std::ops::Range<usize> {
        user * self.slot_len..(user + 1) * self.slot_len
    }
}

/// Either transmission scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum TransmissionPlan {
    Joint(JointPlan),
    Ortho(OrthoPlan),
}

impl TransmissionPlan {
    pub fn transmit(&self, msgs: &MessageVector) -> Result<Vec<f64>> {
        match self {
            Self::Joint(p) => transmit_joint(p, msgs),
            Self::Ortho(p) => transmit_ortho(p, msgs),
        }
    }
}

/// Sum over users of signature (first phase) and codeword (second phase).
/// Inactive users contribute nothing to either phase.
pub fn transmit_joint(plan: &JointPlan, msgs: &MessageVector) -> Result<Vec<f64>> {
    check_len(plan.users(), msgs.len())?;
    msgs.check_range(plan.m())?;
    let n_sig = plan.n_sig();
    let mut out = vec![0.0; plan.n()];
    for user in msgs.active_users() {
        let (sig, msg) = out.split_at_mut(n_sig);
        for (o, s) in sig.iter_mut().zip(plan.signatures.column(user)) {
            *o += s;
        }
        for (o, x) in msg.iter_mut().zip(plan.codebooks[user].word(msgs[user])) {
            *o += x;
        }
    }
    Ok(out)
}

/// Places each active user's PPM word in its own slot.
pub fn transmit_ortho(plan: &OrthoPlan, msgs: &MessageVector) -> Result<Vec<f64>> {
    check_len(plan.users, msgs.len())?;
    msgs.check_range(plan.codebook.m())?;
    let mut out = vec![0.0; plan.n];
    for user in msgs.active_users() {
        out[plan.slot(user)].copy_from_slice(plan.codebook.word(msgs[user]));
    }
    Ok(out)
}

/// Adds i.i.d. `N(0, N0 / 2)` noise. `N0 = 0` passes the signal through.
pub fn awgn<R: RngCore + ?Sized>(signal: Vec<f64>, n0: f64, rng: &mut R) -> Result<ReceivedVector> {
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(domain(format!("N0 must be nonnegative, got {n0}")));
    }
    let mut y = signal;
    if n0 > 0.0 {
        let mut noise = vec![0.0; y.len()];
        fill_normal(rng, (n0 / 2.0).sqrt(), &mut noise);
        for (v, z) in y.iter_mut().zip(noise) {
            *v += z;
        }
    }
    Ok(ReceivedVector::new(y))
}
