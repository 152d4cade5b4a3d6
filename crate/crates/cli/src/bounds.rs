//! `mnac bounds <name>`: typed JSON parameters for every bound evaluator.

use mnac_core::bounds::{
    birge_bound, converse_ape, converse_joint, converse_ortho_user, decode_error_budget, detect_exponent_g,
    detection_budget, e0_msg, f_msg, false_alarm_exponent_lb, gallager_awgn, joint_error_lb, miss_exponent_lb,
    ortho_code_bound, pr_type_error_ub, BoundReport, TypeErrorQuery,
};
use mnac_core::codebook::mu_exact;
use mnac_core::decoding::BoundParams;
use mnac_core::model::{make_joint_schedule, SystemParams};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

pub const BOUND_NAMES: &[&str] = &[
    "e0_msg",
    "pr_type_error_ub",
    "decode_error_budget",
    "f_msg",
    "detect_exponent_g",
    "miss_exponent_lb",
    "false_alarm_exponent_lb",
    "detection_budget",
    "gallager_awgn",
    "ortho_code_bound",
    "converse_joint",
    "converse_ape",
    "converse_ortho_user",
    "joint_error_lb",
    "birge_bound",
];

fn default_n0() -> f64 {
    2.0
}
fn default_split() -> f64 {
    0.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MsgExponent {
    errors: u32,
    k_active: u32,
    rho: f64,
    e_msg: f64,
    n_msg: usize,
    #[serde(default = "default_n0")]
    n0: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TypeError {
    errors: u32,
    k_active: u32,
    rho: f64,
    m: u64,
    e_msg: f64,
    n_msg: usize,
    #[serde(default = "default_n0")]
    n0: f64,
    /// Defaults to the exact normalizer for `n_msg`.
    mu: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecodeBudget {
    k_active: u32,
    rho: f64,
    m: u64,
    e_msg: f64,
    n_msg: usize,
    #[serde(default = "default_n0")]
    n0: f64,
    mu: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FMsg {
    errors: u32,
    k_active: u32,
    rho: f64,
    m: f64,
    e_msg: f64,
    n_msg: usize,
    #[serde(default = "default_n0")]
    n0: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectG {
    lambda: f64,
    rho: f64,
    kappa1: usize,
    kappa2: usize,
    d_weight: usize,
    ell: usize,
    n_sig: usize,
    e_sig: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MissLb {
    lambda: f64,
    rho: f64,
    kappa1: usize,
    d_weight: usize,
    n_sig: usize,
    e_sig: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FalseAlarmLb {
    lambda: f64,
    rho: f64,
    kappa2: usize,
    ell: usize,
    n_sig: usize,
    e_sig: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionBudget {
    n: usize,
    ell: usize,
    alpha: f64,
    #[serde(default = "default_n0")]
    n0: f64,
    #[serde(default = "default_split")]
    b: f64,
    #[serde(default)]
    bounds: BoundParams,
    mu: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Gallager {
    m: u64,
    n_code: usize,
    power: f64,
    #[serde(default = "default_n0")]
    n0: f64,
    rho: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OrthoCode {
    m: u64,
    r_dot: f64,
    #[serde(default = "default_n0")]
    n0: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConverseJoint {
    n: usize,
    ell: usize,
    alpha: f64,
    #[serde(default = "default_n0")]
    n0: f64,
    energy: f64,
    #[serde(default)]
    pe: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConverseApe {
    n: usize,
    ell: usize,
    alpha: f64,
    #[serde(default = "default_n0")]
    n0: f64,
    energy: f64,
    pe_a: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConverseOrthoUser {
    energy: f64,
    n1: f64,
    #[serde(default = "default_n0")]
    n0: f64,
    p1: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointErrorLb {
    energy: f64,
    ell: usize,
    #[serde(default = "default_n0")]
    n0: f64,
    alpha: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Birge {
    kl: Vec<Vec<f64>>,
}

fn parse<T: DeserializeOwned>(name: &str, params: &serde_json::Value) -> Result<T, CliError> {
    serde_json::from_value(params.clone()).map_err(|e| CliError::Config(format!("bad parameters for {name}: {e}")))
}

fn scalar(name: &str, value: f64) -> BoundReport {
    BoundReport::new(name, value, value.is_finite(), &[])
}

/// Evaluates the bound called `name` with JSON object `params`.
pub fn evaluate(name: &str, params: &serde_json::Value) -> Result<BoundReport, CliError> {
    let report = match name {
        "e0_msg" => {
            let p: MsgExponent = parse(name, params)?;
            scalar(name, e0_msg(TypeErrorQuery::new(p.errors, p.k_active)?, p.rho, p.e_msg, p.n_msg, p.n0)?)
        }
        "pr_type_error_ub" => {
            let p: TypeError = parse(name, params)?;
            let mu = match p.mu {
                Some(mu) => mu,
                None => mu_exact(p.n_msg)?.value,
            };
            pr_type_error_ub(TypeErrorQuery::new(p.errors, p.k_active)?, p.rho, p.m, p.e_msg, p.n_msg, p.n0, mu)?
        }
        "decode_error_budget" => {
            let p: DecodeBudget = parse(name, params)?;
            let mu = match p.mu {
                Some(mu) => mu,
                None => mu_exact(p.n_msg)?.value,
            };
            decode_error_budget(p.k_active, p.rho, p.m, p.e_msg, p.n_msg, p.n0, mu)?
        }
        "f_msg" => {
            let p: FMsg = parse(name, params)?;
            scalar(name, f_msg(TypeErrorQuery::new(p.errors, p.k_active)?, p.rho, p.m, p.e_msg, p.n_msg, p.n0)?)
        }
        "detect_exponent_g" => {
            let p: DetectG = parse(name, params)?;
            scalar(name, detect_exponent_g(p.lambda, p.rho, p.kappa1, p.kappa2, p.d_weight, p.ell, p.n_sig, p.e_sig)?)
        }
        "miss_exponent_lb" => {
            let p: MissLb = parse(name, params)?;
            scalar(name, miss_exponent_lb(p.lambda, p.rho, p.kappa1, p.d_weight, p.n_sig, p.e_sig)?)
        }
        "false_alarm_exponent_lb" => {
            let p: FalseAlarmLb = parse(name, params)?;
            scalar(name, false_alarm_exponent_lb(p.lambda, p.rho, p.kappa2, p.ell, p.n_sig, p.e_sig)?)
        }
        "detection_budget" => {
            let p: DetectionBudget = parse(name, params)?;
            p.bounds.validate()?;
            let sys = SystemParams::new(p.n, p.ell, p.alpha, p.n0)?;
            let sched = make_joint_schedule(&sys, p.b)?;
            let mu = match p.mu {
                Some(mu) => mu,
                None => mu_exact(sched.n_sig)?.value,
            };
            detection_budget(&sys, &sched, &p.bounds, mu)?
        }
        "gallager_awgn" => {
            let p: Gallager = parse(name, params)?;
            gallager_awgn(p.m, p.n_code, p.power, p.n0, p.rho)?
        }
        "ortho_code_bound" => {
            let p: OrthoCode = parse(name, params)?;
            ortho_code_bound(p.m, p.r_dot, p.n0)?
        }
        "converse_joint" => {
            let p: ConverseJoint = parse(name, params)?;
            converse_joint(&SystemParams::new(p.n, p.ell, p.alpha, p.n0)?, p.energy, p.pe)?
        }
        "converse_ape" => {
            let p: ConverseApe = parse(name, params)?;
            converse_ape(&SystemParams::new(p.n, p.ell, p.alpha, p.n0)?, p.energy, p.pe_a)?
        }
        "converse_ortho_user" => {
            let p: ConverseOrthoUser = parse(name, params)?;
            converse_ortho_user(p.energy, p.n1, p.n0, p.p1)?
        }
        "joint_error_lb" => {
            let p: JointErrorLb = parse(name, params)?;
            joint_error_lb(p.energy, p.ell, p.n0, p.alpha)?
        }
        "birge_bound" => {
            let p: Birge = parse(name, params)?;
            birge_bound(&p.kl)?
        }
        other => {
            return Err(CliError::Config(format!("unknown bound {other:?}; expected one of {}", BOUND_NAMES.join(", "))))
        }
    };
    Ok(report)
}
