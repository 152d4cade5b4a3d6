//! Monte Carlo experiments: configuration, single trials, aggregation,
//! growth-family sweeps and regime classification.

mod family;
mod stats;
mod sweep;

pub use family::{AlphaRule, EllRule, GrowthFamily, PowerLaw, Rounding};
pub use stats::{binomial_sigma, wilson, Interval, Z95};
pub use sweep::{
    classify_regime, sweep, sweep_csv, Regime, SweepOptions, SweepPoint, SweepRow, SweepTable, TrendVerdict,
    REGIME_TOLERANCE, SWEEP_COLUMNS,
};

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{decode_error_budget, detection_budget, ortho_code_bound};
use crate::channel::{awgn, JointPlan, OrthoPlan, TransmissionPlan};
use crate::codebook::mu_exact;
use crate::decoding::{ortho_receive, score_errors, two_phase_receive, BoundParams, ErrorStats, SearchBudget};
use crate::detection::{detection_stats, ActivityVector};
use crate::error::{Error, Result};
use crate::model::{
    make_joint_schedule, make_ortho_schedule, sample_messages, single_user_capacity_pue, EnergySchedule, RateSpec,
    Scheme, SystemParams,
};
use crate::rng::{mix_seed, stream_rng, Stream};
use crate::special::{ln_binomial, q_function};

/// Decoding-bound exponents tried when reporting the analytic budget.
pub const RHO_GRID: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// How the message count is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateTarget {
    /// Explicit message count.
    Messages(u32),
    /// Rate per unit energy in nats; `M = round(exp(r E))`.
    RDot(f64),
    /// Fraction of the single-user capacity per unit energy `1 / N0`.
    CapacityFraction(f64),
    /// Orthogonal scheme only: every non-pilot slot position is a message.
    FullSlot,
}

fn default_n0() -> f64 {
    2.0
}
fn default_trials() -> u64 {
    100
}
fn default_epsilon() -> f64 {
    0.1
}

/// One simulation setup, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub ell: usize,
    pub alpha: f64,
    #[serde(default = "default_n0")]
    pub n0: f64,
    /// Signature fraction `b` or pilot fraction `t`; defaults to 0.5 and 0.25.
    #[serde(default)]
    pub split: Option<f64>,
    pub rate: RateTarget,
    #[serde(default)]
    pub bounds: BoundParams,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Target error level, used for reporting only.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Removes the channel noise.
    #[serde(default)]
    pub noiseless: bool,
    /// Draws one codebook set from the master seed instead of one per trial.
    #[serde(default)]
    pub fixed_codebook: bool,
    #[serde(default)]
    pub budget: SearchBudget,
}

impl ExperimentConfig {
    /// Joint-scheme config with defaults for everything but the essentials.
    pub fn joint(n: usize, ell: usize, alpha: f64, rate: RateTarget) -> Self {
        Self {
            scheme: Scheme::Joint,
            n,
            ell,
            alpha,
            n0: 2.0,
            split: None,
            rate,
            bounds: BoundParams::default(),
            trials: default_trials(),
            seed: 0,
            epsilon: default_epsilon(),
            noiseless: false,
            fixed_codebook: false,
            budget: SearchBudget::default(),
        }
    }

    /// Orthogonal-scheme config filling every slot position.
    pub fn ortho(n: usize, ell: usize, alpha: f64) -> Self {
        Self { scheme: Scheme::Ortho, rate: RateTarget::FullSlot, ..Self::joint(n, ell, alpha, RateTarget::FullSlot) }
    }

    /// Validates the config and derives schedule, rate and plan.
    pub fn resolve(&self) -> Result<Experiment> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.bounds.validate()?;
        let params = SystemParams::new(self.n, self.ell, self.alpha, self.n0)?;
        let sched = match self.scheme {
            Scheme::Joint => make_joint_schedule(&params, self.split.unwrap_or(0.5))?,
            Scheme::Ortho => make_ortho_schedule(&params, self.split.unwrap_or(0.25))?,
        };
        let rate = match self.rate {
            RateTarget::Messages(m) => RateSpec::from_messages(m, sched.energy)?,
            RateTarget::RDot(r) => RateSpec::from_rate(r, sched.energy)?,
            RateTarget::CapacityFraction(f) => RateSpec::from_rate(f * single_user_capacity_pue(self.n0)?, sched.energy)?,
            RateTarget::FullSlot => match self.scheme {
                Scheme::Ortho => RateSpec::from_messages((sched.slot_len - 1) as u32, sched.energy)?,
                Scheme::Joint => return Err(Error::Config("full_slot rate needs the orthogonal scheme".into())),
            },
        };
        let shared_plan = match self.scheme {
            Scheme::Ortho => Some(TransmissionPlan::Ortho(OrthoPlan::new(&params, &sched, rate.m)?)),
            Scheme::Joint if self.fixed_codebook => {
                Some(TransmissionPlan::Joint(JointPlan::generate(&params, &sched, rate.m, self.seed)?))
            }
            Scheme::Joint => None,
        };
        Ok(Experiment { config: self.clone(), params, sched, rate, shared_plan })
    }
}

/// A validated config with its derived quantities.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub params: SystemParams,
    pub sched: EnergySchedule,
    pub rate: RateSpec,
    shared_plan: Option<TransmissionPlan>,
}

/// Everything observed in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub seed: u64,
    /// True number of active users.
    pub active: usize,
    /// Number of users the receiver declared active.
    pub detected: usize,
    pub misses: usize,
    pub false_alarms: usize,
    pub stats: ErrorStats,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl TrialRecord {
    pub fn detection_error(&self) -> bool {
        self.misses + self.false_alarms > 0
    }
}

impl Experiment {
    /// Runs trial `index` with seed `mix(master, index)`.
    pub fn run_trial(&self, index: u64) -> Result<TrialRecord> {
        let start = Instant::now();
        let seed = mix_seed(self.config.seed, index);
        let w = sample_messages(&self.params, self.rate.m, &mut stream_rng(seed, Stream::Messages))?;
        let fresh;
        let plan = match &self.shared_plan {
            Some(p) => p,
            None => {
                fresh = TransmissionPlan::Joint(JointPlan::generate(&self.params, &self.sched, self.rate.m, seed)?);
                &fresh
            }
        };
        let n0 = if self.config.noiseless { 0.0 } else { self.params.n0() };
        let y = awgn(plan.transmit(&w)?, n0, &mut stream_rng(seed, Stream::Noise))?;
        let (w_hat, d_hat, overflow) = match plan {
            TransmissionPlan::Joint(p) => {
                let out = two_phase_receive(&y, p, &self.params, &self.sched, &self.config.bounds, &self.config.budget)?;
                (out.w_hat, out.detection.d_hat, out.overflow)
            }
            TransmissionPlan::Ortho(p) => {
                let w_hat = ortho_receive(&y, p)?;
                let d_hat = ActivityVector::from_messages(&w_hat);
                (w_hat, d_hat, false)
            }
        };
        let d_true = ActivityVector::from_messages(&w);
        let (misses, false_alarms) = detection_stats(&d_true, &d_hat)?;
        let stats = score_errors(&w, &w_hat, overflow)?;
        Ok(TrialRecord {
            index,
            seed,
            active: d_true.weight(),
            detected: d_hat.weight(),
            misses,
            false_alarms,
            stats,
            wall_time: start.elapsed(),
        })
    }

    /// Runs `trials` trials, in parallel when `threads` is not 1. Records
    /// come back in trial order regardless of scheduling.
    pub fn run_trials(&self, trials: u64, threads: Option<usize>) -> Result<Vec<TrialRecord>> {
        let work = || (0..trials).into_par_iter().map(|i| self.run_trial(i)).collect::<Result<Vec<_>>>();
        match threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?
                .install(work),
            None => work(),
        }
    }

    /// Runs the configured number of trials and summarizes them.
    pub fn estimate_error(&self, threads: Option<usize>) -> Result<Summary> {
        let records = self.run_trials(self.config.trials, threads)?;
        self.summarize(&records)
    }

    /// Aggregates trial records in order.
    pub fn summarize(&self, records: &[TrialRecord]) -> Result<Summary> {
        let trials = records.len() as u64;
        let joint_errors = records.iter().filter(|r| r.stats.joint_error).count() as u64;
        let overflows = records.iter().filter(|r| r.stats.overflow).count() as u64;
        let detection_errors = records.iter().filter(|r| r.detection_error()).count() as u64;
        let user_errors: u64 = records.iter().map(|r| r.stats.per_user_errors as u64).sum();
        let tf = trials.max(1) as f64;
        let joint_err = joint_errors as f64 / tf;
        let ape = user_errors as f64 / (tf * self.params.ell() as f64);
        let ci = wilson(joint_errors, trials, Z95);
        let budget = self.analytic_budget()?;
        let overflow_rate = overflows as f64 / tf;
        let markov_limit = 1.0 / self.config.bounds.xi as f64;
        Ok(Summary {
            scheme: self.config.scheme,
            n: self.params.n(),
            ell: self.params.ell(),
            alpha: self.params.alpha(),
            k: self.params.k(),
            energy: self.sched.energy,
            m: self.rate.m,
            r_dot_nats: self.rate.r_dot,
            r_dot_bits: self.rate.r_dot_bits(),
            trials,
            joint_errors,
            joint_err,
            joint_err_ci: ci,
            ape,
            overflow_rate,
            overflow_ci: wilson(overflows, trials, Z95),
            markov_limit,
            overflow_within_markov: overflow_rate <= markov_limit + 3.0 * binomial_sigma(markov_limit, trials),
            detection_err: detection_errors as f64 / tf,
            budget_total: budget.total,
            budget_valid: budget.valid,
            interval_valid: trials >= 30,
            epsilon: self.config.epsilon,
            below_epsilon: ci.hi < self.config.epsilon,
        })
    }

    /// Analytic bound on the joint error probability.
    ///
    /// Joint scheme: detection budget, plus decoding budgets weighted by the
    /// distribution of the active count up to `floor(xi k)`, plus the Markov
    /// term `1 / xi`. Orthogonal scheme: union over users of the pilot
    /// error and the orthogonal-code bound.
    pub fn analytic_budget(&self) -> Result<AnalyticBudget> {
        analytic_budget(&self.params, &self.sched, &self.rate, &self.config.bounds)
    }
}

/// Result of [`Experiment::analytic_budget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBudget {
    pub detection: f64,
    pub decoding: f64,
    pub overflow: f64,
    pub total: f64,
    pub valid: bool,
}

pub fn analytic_budget(params: &SystemParams, sched: &EnergySchedule, rate: &RateSpec, bp: &BoundParams) -> Result<AnalyticBudget> {
    match sched.scheme {
        Scheme::Joint => {
            let det = detection_budget(params, sched, bp, mu_exact(sched.n_sig)?.value)?;
            let mu_msg = mu_exact(sched.n_msg)?.value;
            let ell = params.ell();
            let alpha = params.alpha();
            let cap = bp.overflow_cap(params.k()).min(ell);
            let mut decoding = 0.0;
            let mut decode_valid = true;
            for k_active in 1..=cap {
                let ln_pr = ln_binomial(ell as u64, k_active as u64)
                    + k_active as f64 * alpha.ln()
                    + if k_active == ell { 0.0 } else { (ell - k_active) as f64 * (-alpha).ln_1p() };
                let best = RHO_GRID
                    .iter()
                    .map(|&rho| {
                        decode_error_budget(k_active as u32, rho, rate.m as u64, sched.e_msg, sched.n_msg, params.n0(), mu_msg)
                            .map(|r| r.value)
                    })
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                if best > 1.0 {
                    decode_valid = false;
                }
                decoding += ln_pr.exp() * best.min(1.0);
            }
            let overflow = 1.0 / bp.xi as f64;
            let total = det.value + decoding + overflow;
            Ok(AnalyticBudget {
                detection: det.value,
                decoding,
                overflow,
                total,
                valid: det.valid && decode_valid && total < 1.0,
            })
        }
        Scheme::Ortho => {
            let z = (sched.e_sig / (2.0 * params.n0())).sqrt();
            let pilot = q_function(z);
            let code_rate = (rate.m as f64).ln() / sched.e_msg;
            let (code, code_valid) = match ortho_code_bound(rate.m as u64, code_rate, params.n0()) {
                Ok(r) => (r.value, r.valid),
                Err(_) => (1.0, false),
            };
            let ell = params.ell() as f64;
            let detection = ell * pilot;
            let decoding = ell * params.alpha() * code;
            let total = detection + decoding;
            Ok(AnalyticBudget { detection, decoding, overflow: 0.0, total, valid: code_valid && total < 1.0 })
        }
    }
}

/// Aggregate of a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scheme: Scheme,
    pub n: usize,
    pub ell: usize,
    pub alpha: f64,
    pub k: f64,
    pub energy: f64,
    pub m: u32,
    pub r_dot_nats: f64,
    pub r_dot_bits: f64,
    pub trials: u64,
    pub joint_errors: u64,
    pub joint_err: f64,
    pub joint_err_ci: Interval,
    pub ape: f64,
    pub overflow_rate: f64,
    pub overflow_ci: Interval,
    pub markov_limit: f64,
    pub overflow_within_markov: bool,
    pub detection_err: f64,
    pub budget_total: f64,
    pub budget_valid: bool,
    pub interval_valid: bool,
    pub epsilon: f64,
    pub below_epsilon: bool,
}

/// Column names of the per-trial CSV.
pub const TRIAL_COLUMNS: &str = "trial,seed,active,detected,misses,false_alarms,overflow,joint_error,user_errors,ape";

/// Per-trial CSV. Wall time is left out so that output depends only on the
/// config and seed.
pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::new();
    out.push_str(TRIAL_COLUMNS);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.seed,
            r.active,
            r.detected,
            r.misses,
            r.false_alarms,
            u8::from(r.stats.overflow),
            u8::from(r.stats.joint_error),
            r.stats.per_user_errors,
            r.stats.ape
        );
    }
    out
}
