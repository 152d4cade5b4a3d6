//! Closed-form achievability and converse bounds.
//!
//! Every evaluator returns a [`BoundReport`] whose `terms` are enough to
//! rebuild `value` through [`BoundReport::recompute`]. All logarithms are
//! natural.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::decoding::BoundParams;
use crate::detection::v_cap_from;
use crate::error::{domain, Error, Result};
use crate::model::{binary_entropy, EnergySchedule, Scheme, SystemParams};
use crate::special::{ln_binomial, q_function};

const LN2: f64 = std::f64::consts::LN_2;

/// Largest number of `(w, kappa1, kappa2)` triples the detection budget
/// will sum over.
pub const DETECTION_SUM_LIMIT: f64 = 1e8;

/// Itemized evaluation of one bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub valid: bool,
    pub terms: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn new(name: &str, value: f64, valid: bool, terms: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_owned(),
            value,
            valid,
            terms: terms.iter().map(|(k, v)| ((*k).to_owned(), *v)).collect(),
        }
    }

    /// Named intermediate quantity; NaN when absent.
    pub fn term(&self, key: &str) -> f64 {
        self.terms.get(key).copied().unwrap_or(f64::NAN)
    }

    /// Rebuilds `value` from the itemized terms.
    pub fn recompute(&self) -> Result<f64> {
        let t = |k: &str| self.term(k);
        let v = match self.name.as_str() {
            "pr_type_error_ub" => (t("log_mu_factor") + t("log_binomial") + t("log_rate_factor") - t("exponent")).exp(),
            "decode_error_budget" => self
                .terms
                .iter()
                .filter(|(k, _)| k.starts_with("type_"))
                .map(|(_, v)| v)
                .sum(),
            "detection_budget" => t("overflow") + t("active_branch") + t("pr_empty") * t("empty_branch"),
            "gallager_awgn" => (t("log_m_factor") - t("exponent")).exp(),
            "ortho_code_bound" => (-(t("ln_m") / t("rate")) * t("gap")).exp(),
            "converse_joint" => ratio(
                t("entropy_term") + t("activity_term") + t("error_term") + t("mutual_info_term"),
                t("prefactor"),
            ),
            "converse_ape" => ratio(t("entropy_term") + t("mutual_info_term"), t("margin")),
            "converse_ortho_user" => ratio(t("fano_term") + t("mutual_info_term"), t("margin")),
            "joint_error_lb" => t("typeclass_lb") * t("activity_prob"),
            "birge_bound" => (t("mean_kl") + LN2) / t("log_alternatives"),
            other => return Err(domain(format!("unknown bound '{other}'"))),
        };
        Ok(v)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{what} must be positive, got {x}")))
    }
}

fn nonneg(x: f64, what: &str) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{what} must be nonnegative, got {x}")))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("rho must lie in (0, 1], got {rho}")))
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("mu must lie in (0, 1], got {mu}")))
    }
}

/// Fraction `errors / k_active` of detected users decoded in error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeErrorQuery {
    pub errors: u32,
    pub k_active: u32,
}

impl TypeErrorQuery {
    pub fn new(errors: u32, k_active: u32) -> Result<Self> {
        if errors == 0 || errors > k_active {
            return Err(domain(format!("need 1 <= errors <= k', got {errors} of {k_active}")));
        }
        Ok(Self { errors, k_active })
    }

    pub fn a(&self) -> f64 {
        self.errors as f64 / self.k_active as f64
    }
}

/// Random-coding exponent `(rho/2) ln(1 + 2 a k' E' / (n' (rho+1) N0))`.
///
/// `rho = 0` is accepted and gives 0.
pub fn e0_msg(q: TypeErrorQuery, rho: f64, e_msg: f64, n_msg: usize, n0: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(domain(format!("rho must lie in [0, 1], got {rho}")));
    }
    nonneg(e_msg, "message energy")?;
    positive(n_msg as f64, "message length")?;
    positive(n0, "N0")?;
    let snr = 2.0 * q.a() * q.k_active as f64 * e_msg / (n_msg as f64 * (rho + 1.0) * n0);
    Ok(rho / 2.0 * snr.ln_1p())
}

/// Bound on the probability that exactly `a k'` of `k'` correctly detected
/// users are decoded in error:
/// `(1/mu)^{2k'} C(k', a k') M^{a k' rho} exp(-n' E0)`.
#[allow(clippy::too_many_arguments)]
pub fn pr_type_error_ub(
    q: TypeErrorQuery,
    rho: f64,
    m: u64,
    e_msg: f64,
    n_msg: usize,
    n0: f64,
    mu: f64,
) -> Result<BoundReport> {
    check_rho(rho)?;
    check_mu(mu)?;
    if m < 1 {
        return Err(domain("M must be positive"));
    }
    let e0 = e0_msg(q, rho, e_msg, n_msg, n0)?;
    let k = q.k_active as f64;
    let log_mu_factor = -2.0 * k * mu.ln();
    let log_binomial = ln_binomial(q.k_active as u64, q.errors as u64);
    let log_rate_factor = q.a() * k * rho * (m as f64).ln();
    let exponent = n_msg as f64 * e0;
    let log_value = log_mu_factor + log_binomial + log_rate_factor - exponent;
    let value = log_value.exp();
    Ok(BoundReport::new(
        "pr_type_error_ub",
        value,
        value <= 1.0,
        &[
            ("a", q.a()),
            ("k_active", k),
            ("e0", e0),
            ("log_mu_factor", log_mu_factor),
            ("log_binomial", log_binomial),
            ("log_rate_factor", log_rate_factor),
            ("exponent", exponent),
            ("log_value", log_value),
        ],
    ))
}

/// Sum of [`pr_type_error_ub`] over every error fraction `a` for `k'`
/// detected users.
pub fn decode_error_budget(
    k_active: u32,
    rho: f64,
    m: u64,
    e_msg: f64,
    n_msg: usize,
    n0: f64,
    mu: f64,
) -> Result<BoundReport> {
    if k_active == 0 {
        return Ok(BoundReport::new("decode_error_budget", 0.0, true, &[("k_active", 0.0)]));
    }
    let mut report = BoundReport::new("decode_error_budget", 0.0, true, &[("k_active", k_active as f64), ("rho", rho)]);
    let mut total = 0.0;
    for errors in 1..=k_active {
        let part = pr_type_error_ub(TypeErrorQuery::new(errors, k_active)?, rho, m, e_msg, n_msg, n0, mu)?;
        total += part.value;
        report.terms.insert(format!("type_{errors:04}"), part.value);
    }
    report.value = total;
    report.valid = total <= 1.0;
    Ok(report)
}

/// Normalized message-phase exponent
/// `n' E0 / E' - a rho k' ln M / E' - k' H2(a) / E'`.
///
/// `m` is real so that the `M = 1` limit can be evaluated.
pub fn f_msg(q: TypeErrorQuery, rho: f64, m: f64, e_msg: f64, n_msg: usize, n0: f64) -> Result<f64> {
    positive(e_msg, "message energy")?;
    if !(m >= 1.0) {
        return Err(domain(format!("M must be at least 1, got {m}")));
    }
    let e0 = e0_msg(q, rho, e_msg, n_msg, n0)?;
    let k = q.k_active as f64;
    Ok(n_msg as f64 * e0 / e_msg - q.a() * rho * k * m.ln() / e_msg - k * binary_entropy(q.a())? / e_msg)
}

fn check_detection_args(lambda: f64, rho: f64, kappa1: usize, kappa2: usize, d_weight: usize, ell: usize, n_sig: usize) -> Result<()> {
    if !(lambda >= 0.0) {
        return Err(domain(format!("lambda must be nonnegative, got {lambda}")));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(domain(format!("rho must lie in [0, 1], got {rho}")));
    }
    if kappa1 > d_weight || kappa2 > ell {
        return Err(domain(format!(
            "need kappa1 <= |d| and kappa2 <= ell, got ({kappa1}, {kappa2}) with |d| = {d_weight}, ell = {ell}"
        )));
    }
    positive(n_sig as f64, "signature length")
}

fn entropy_count(total: usize, part: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        total as f64 * binary_entropy(part as f64 / total as f64).unwrap_or(f64::NAN)
    }
}

/// `E_tilde * g`, the detection exponent scaled by `E_tilde = E_sig / 2`.
///
/// Finite at `E_sig = 0`, where it reduces to the negative entropy terms.
#[allow(clippy::too_many_arguments)]
pub fn detect_exponent_scaled(
    lambda: f64,
    rho: f64,
    kappa1: usize,
    kappa2: usize,
    d_weight: usize,
    ell: usize,
    n_sig: usize,
    e_sig: f64,
) -> Result<f64> {
    check_detection_args(lambda, rho, kappa1, kappa2, d_weight, ell, n_sig)?;
    nonneg(e_sig, "signature energy")?;
    let et = e_sig / 2.0;
    let ns = n_sig as f64;
    let (k1, k2) = (kappa1 as f64, kappa2 as f64);
    let lr = lambda * rho;
    let penalty = -(1.0 - rho) * ns / 2.0 * (lambda * k2 * et / ns).ln_1p();
    let gain = ns / 2.0 * (lambda * (1.0 - lr) * k2 * et / ns + lr * (1.0 - lr) * k1 * et / ns).ln_1p();
    Ok(penalty + gain - entropy_count(d_weight, kappa1) - rho * entropy_count(ell, kappa2))
}

/// Detection error exponent `g` per unit of `E_tilde = E_sig / 2`.
#[allow(clippy::too_many_arguments)]
pub fn detect_exponent_g(
    lambda: f64,
    rho: f64,
    kappa1: usize,
    kappa2: usize,
    d_weight: usize,
    ell: usize,
    n_sig: usize,
    e_sig: f64,
) -> Result<f64> {
    positive(e_sig, "signature energy")?;
    Ok(detect_exponent_scaled(lambda, rho, kappa1, kappa2, d_weight, ell, n_sig, e_sig)? / (e_sig / 2.0))
}

/// Miss-only lower piece of `g`:
/// `(n''/(4 Et)) ln(1 + l r (1 - l r) k1 Et / n'') - (|d|/Et) H2(k1/|d|)`.
pub fn miss_exponent_lb(lambda: f64, rho: f64, kappa1: usize, d_weight: usize, n_sig: usize, e_sig: f64) -> Result<f64> {
    check_detection_args(lambda, rho, kappa1, 0, d_weight, 0, n_sig)?;
    positive(e_sig, "signature energy")?;
    let et = e_sig / 2.0;
    let ns = n_sig as f64;
    let lr = lambda * rho;
    Ok(ns / (4.0 * et) * (lr * (1.0 - lr) * kappa1 as f64 * et / ns).ln_1p() - entropy_count(d_weight, kappa1) / et)
}

/// False-alarm-only lower piece of `g`, so that `g >= miss + false_alarm`:
/// `(n''/(4 Et)) ln(1 + l (1 - l r) k2 Et / n'')
///  - ((1 - r) n''/(2 Et)) ln(1 + l k2 Et / n'') - (r ell / Et) H2(k2 / ell)`.
pub fn false_alarm_exponent_lb(lambda: f64, rho: f64, kappa2: usize, ell: usize, n_sig: usize, e_sig: f64) -> Result<f64> {
    check_detection_args(lambda, rho, 0, kappa2, 0, ell, n_sig)?;
    positive(e_sig, "signature energy")?;
    let et = e_sig / 2.0;
    let ns = n_sig as f64;
    let k2 = kappa2 as f64;
    let lr = lambda * rho;
    Ok(ns / (4.0 * et) * (lambda * (1.0 - lr) * k2 * et / ns).ln_1p()
        - (1.0 - rho) * ns / (2.0 * et) * (lambda * k2 * et / ns).ln_1p()
        - rho * entropy_count(ell, kappa2) / et)
}

/// Union bound on the activity-detection error of the least-squares
/// detector under the joint schedule.
///
/// Three branches: more than `v` users active (binomial Chernoff term),
/// at least one user active, and no user active. Signature energy is
/// measured relative to unit noise variance, i.e. scaled by `2 / N0`.
pub fn detection_budget(params: &SystemParams, sched: &EnergySchedule, bp: &BoundParams, mu: f64) -> Result<BoundReport> {
    if sched.scheme != Scheme::Joint {
        return Err(domain("detection budget needs a joint schedule"));
    }
    check_mu(mu)?;
    let (lambda, rho) = (bp.lambda, bp.rho);
    let ell = params.ell();
    let alpha = params.alpha();
    let k = params.k();
    let v = v_cap_from(k, sched.c)?;
    let top = v.min(ell);
    let triples = (top as f64 + 1.0).powi(3) / 2.0;
    if triples > DETECTION_SUM_LIMIT {
        return Err(Error::ComplexityBudget {
            what: "detection budget",
            needed: triples,
            budget: DETECTION_SUM_LIMIT as u64,
        });
    }
    let n_sig = sched.n_sig;
    let e_norm = sched.e_sig * 2.0 / params.n0();
    let et = e_norm / 2.0;
    let ln_inv_mu = -mu.ln();

    let overflow = (-k * sched.c / 3.0).exp();

    let mut active_branch = 0.0;
    for w in 1..=top {
        let ln_pr_w = ln_binomial(ell as u64, w as u64)
            + w as f64 * alpha.ln()
            + if alpha < 1.0 { (ell - w) as f64 * (-alpha).ln_1p() } else if w == ell { 0.0 } else { f64::NEG_INFINITY };
        if ln_pr_w == f64::NEG_INFINITY {
            continue;
        }
        let mut inner = 0.0;
        for k1 in 0..=w {
            for k2 in 0..=v.min(ell - w) {
                if k1 + k2 == 0 || w + k2 > v + k1 {
                    continue;
                }
                let scaled = detect_exponent_scaled(lambda, rho, k1, k2, w, ell, n_sig, e_norm)?;
                inner += ((w as f64 + rho * k2 as f64) * ln_inv_mu - scaled).exp();
            }
        }
        active_branch += ln_pr_w.exp() * inner;
    }

    let mut empty_branch = 0.0;
    let ns = n_sig as f64;
    for k2 in 1..=top {
        let q_scaled = ns / 2.0 * (k2 as f64 * et / (4.0 * ns)).ln_1p();
        let u_scaled = entropy_count(ell, k2);
        empty_branch += (k2 as f64 * ln_inv_mu - (q_scaled - u_scaled)).exp();
    }
    let pr_empty = if alpha < 1.0 { (ell as f64 * (-alpha).ln_1p()).exp() } else { 0.0 };

    let value = overflow + active_branch + pr_empty * empty_branch;
    let valid = value <= 1.0 && overflow <= 1.0 && active_branch <= 1.0 && empty_branch <= 1.0;
    Ok(BoundReport::new(
        "detection_budget",
        value,
        valid,
        &[
            ("overflow", overflow),
            ("active_branch", active_branch),
            ("empty_branch", empty_branch),
            ("pr_empty", pr_empty),
            ("v", v as f64),
            ("e_tilde", et),
            ("n_sig", ns),
            ("mu", mu),
            ("lambda", lambda),
            ("rho", rho),
        ],
    ))
}

/// Gallager's random-coding bound for the point-to-point Gaussian channel,
/// `M^rho exp(-n E0(rho, P))` with `E0 = (rho/2) ln(1 + 2P / ((1+rho) N0))`.
pub fn gallager_awgn(m: u64, n_code: usize, power: f64, n0: f64, rho: f64) -> Result<BoundReport> {
    check_rho(rho)?;
    nonneg(power, "power")?;
    positive(n0, "N0")?;
    if m < 1 {
        return Err(domain("M must be positive"));
    }
    let e0 = rho / 2.0 * (2.0 * power / ((1.0 + rho) * n0)).ln_1p();
    let log_m_factor = rho * (m as f64).ln();
    let exponent = n_code as f64 * e0;
    let value = (log_m_factor - exponent).exp();
    Ok(BoundReport::new(
        "gallager_awgn",
        value,
        value <= 1.0,
        &[("e0", e0), ("log_m_factor", log_m_factor), ("exponent", exponent)],
    ))
}

/// Error bound of an `M`-ary orthogonal code at rate `r_dot` nats per unit
/// energy.
pub fn ortho_code_bound(m: u64, r_dot: f64, n0: f64) -> Result<BoundReport> {
    positive(n0, "N0")?;
    positive(r_dot, "rate")?;
    if r_dot > 1.0 / n0 {
        return Err(domain(format!("rate {r_dot} exceeds capacity per unit energy {}", 1.0 / n0)));
    }
    if m < 2 {
        return Err(domain("M must be at least 2"));
    }
    let (gap, branch) = if r_dot <= 1.0 / (4.0 * n0) {
        (1.0 / (2.0 * n0) - r_dot, 1.0)
    } else {
        (((1.0 / n0).sqrt() - r_dot.sqrt()).powi(2), 2.0)
    };
    let ln_m = (m as f64).ln();
    let value = (-(ln_m / r_dot) * gap).exp();
    Ok(BoundReport::new(
        "ortho_code_bound",
        value,
        value <= 1.0,
        &[("ln_m", ln_m), ("rate", r_dot), ("gap", gap), ("branch", branch)],
    ))
}

/// Upper bound on the rate per unit energy of any code whose joint error
/// probability is `pe`.
pub fn converse_joint(params: &SystemParams, energy: f64, pe: f64) -> Result<BoundReport> {
    positive(energy, "energy")?;
    if !(0.0..1.0).contains(&pe) {
        return Err(domain(format!("Pe must lie in [0, 1), got {pe}")));
    }
    let n = params.n() as f64;
    let k = params.k();
    let alpha = params.alpha();
    let n0 = params.n0();
    let h = binary_entropy(alpha)?;
    let entropy_term = 4f64.ln() / (k * energy);
    let activity_term = h / (alpha * energy) * (4.0 * pe - 1.0);
    let error_term = 4.0 * pe * (1.0 / energy + 1.0 / k);
    let mutual_info_term = n / (2.0 * k * energy) * (2.0 * k * energy / (n * n0)).ln_1p();
    let prefactor = 1.0 - 4.0 * pe * (1.0 + 1.0 / k);
    let value = ratio(entropy_term + activity_term + error_term + mutual_info_term, prefactor);
    Ok(BoundReport::new(
        "converse_joint",
        value,
        prefactor > 0.0 && value.is_finite(),
        &[
            ("entropy_term", entropy_term),
            ("activity_term", activity_term),
            ("error_term", error_term),
            ("mutual_info_term", mutual_info_term),
            ("prefactor", prefactor),
        ],
    ))
}

/// Upper bound on the rate per unit energy under a per-user error
/// probability `pe_a`. The one-bit Fano constant enters as `ln 2`.
pub fn converse_ape(params: &SystemParams, energy: f64, pe_a: f64) -> Result<BoundReport> {
    positive(energy, "energy")?;
    nonneg(pe_a, "Pe_A")?;
    let n = params.n() as f64;
    let ell = params.ell() as f64;
    let k = params.k();
    let alpha = params.alpha();
    let entropy_term = (LN2 - binary_entropy(alpha)?) / energy;
    let mutual_info_term = n / (2.0 * ell * energy) * (2.0 * k * energy / (n * params.n0())).ln_1p();
    let margin = alpha - pe_a;
    let value = ratio(entropy_term + mutual_info_term, margin);
    Ok(BoundReport::new(
        "converse_ape",
        value,
        margin > 0.0 && value.is_finite(),
        &[("entropy_term", entropy_term), ("mutual_info_term", mutual_info_term), ("margin", margin)],
    ))
}

/// Single-user rate bound for a user occupying `n1` channel uses with error
/// probability `p1`. The one-bit Fano constant enters as `ln 2`.
pub fn converse_ortho_user(energy: f64, n1: f64, n0: f64, p1: f64) -> Result<BoundReport> {
    positive(energy, "energy")?;
    positive(n1, "n1")?;
    positive(n0, "N0")?;
    nonneg(p1, "P1")?;
    let fano_term = LN2 / energy;
    let mutual_info_term = n1 / (2.0 * energy) * (2.0 * energy / (n1 * n0)).ln_1p();
    let margin = 1.0 - p1;
    let value = ratio(fano_term + mutual_info_term, margin);
    Ok(BoundReport::new(
        "converse_ortho_user",
        value,
        margin > 0.0 && value.is_finite(),
        &[("fano_term", fano_term), ("mutual_info_term", mutual_info_term), ("margin", margin)],
    ))
}

/// Lower bound on the joint error probability:
/// `max(0, 1 - (256 E/N0 + ln 2)/ln ell) (1 - (1 - alpha)^ell)`.
pub fn joint_error_lb(energy: f64, ell: usize, n0: f64, alpha: f64) -> Result<BoundReport> {
    if ell < 5 {
        return Err(domain(format!("need ell >= 5, got {ell}")));
    }
    nonneg(energy, "energy")?;
    positive(n0, "N0")?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let typeclass_lb = (1.0 - (256.0 * energy / n0 + LN2) / (ell as f64).ln()).max(0.0);
    let activity_prob = -(ell as f64 * (-alpha).ln_1p()).exp_m1();
    let value = typeclass_lb * activity_prob;
    Ok(BoundReport::new(
        "joint_error_lb",
        value,
        (0.0..=1.0).contains(&value),
        &[("typeclass_lb", typeclass_lb), ("activity_prob", activity_prob)],
    ))
}

/// Birge's bound on the average success probability of any test among `N`
/// hypotheses with pairwise divergences `kl[i][j]`.
pub fn birge_bound(kl: &[Vec<f64>]) -> Result<BoundReport> {
    let n = kl.len();
    if n < 3 {
        return Err(domain(format!("need at least 3 hypotheses, got {n}")));
    }
    let mut total = 0.0;
    for (i, row) in kl.iter().enumerate() {
        crate::error::check_len(n, row.len())?;
        for (j, &d) in row.iter().enumerate() {
            if !(d >= 0.0) || (i == j && d != 0.0) {
                return Err(domain("divergences must be nonnegative with a zero diagonal"));
            }
            total += d;
        }
    }
    let mean_kl = total / (n * n) as f64;
    let log_alternatives = ((n - 1) as f64).ln();
    let value = (mean_kl + LN2) / log_alternatives;
    Ok(BoundReport::new(
        "birge_bound",
        value,
        value.is_finite(),
        &[("mean_kl", mean_kl), ("log_alternatives", log_alternatives), ("hypotheses", n as f64)],
    ))
}

/// Divergence between two Gaussians with covariance `(N0/2) I` whose means
/// differ by a vector of squared norm `delta_sq`.
pub fn gaussian_kl(delta_sq: f64, n0: f64) -> Result<f64> {
    nonneg(delta_sq, "squared distance")?;
    positive(n0, "N0")?;
    Ok(delta_sq / n0)
}

/// Standard normal tail and, for positive arguments, its elementary upper
/// bound `exp(-x^2/2) / (sqrt(2 pi) x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalTail {
    pub q: f64,
    pub upper: Option<f64>,
}

pub fn normal_tail(x: f64) -> NormalTail {
    let upper = (x > 0.0).then(|| (-x * x / 2.0).exp() / ((2.0 * std::f64::consts::PI).sqrt() * x));
    NormalTail { q: q_function(x), upper }
}
