//! Sweeps over a growth family and regime classification.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{analytic_budget, ExperimentConfig, GrowthFamily, RateTarget};
use crate::decoding::{BoundParams, SearchBudget};
use crate::error::{domain, Result};
use crate::model::{make_joint_schedule, make_ortho_schedule, single_user_capacity_pue, RateSpec, Scheme};
use crate::rng::mix_seed;

/// Column order of the sweep CSV.
pub const SWEEP_COLUMNS: [&str; 14] = [
    "n",
    "ell",
    "alpha",
    "k",
    "E",
    "R_dot_nats",
    "R_dot_bits",
    "joint_err",
    "joint_err_ci_lo",
    "joint_err_ci_hi",
    "ape",
    "overflow_rate",
    "budget_total",
    "budget_valid",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub scheme: Scheme,
    pub split: Option<f64>,
    /// Target rate as a fraction of `1 / N0`.
    pub capacity_fraction: f64,
    pub bounds: BoundParams,
    pub trials: u64,
    pub seed: u64,
    /// Run Monte Carlo trials in addition to the bounds.
    pub simulate: bool,
    pub threads: Option<usize>,
    pub budget: SearchBudget,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Joint,
            split: None,
            capacity_fraction: 0.25,
            bounds: BoundParams::default(),
            trials: 100,
            seed: 0,
            simulate: true,
            threads: None,
            budget: SearchBudget::default(),
        }
    }
}

/// One grid point. Simulation and bound fields are empty when the
/// corresponding computation failed or was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub ell: usize,
    pub alpha: f64,
    pub k: f64,
    pub energy: f64,
    pub m: u32,
    pub r_dot_nats: f64,
    pub r_dot_bits: f64,
    pub joint_err: Option<f64>,
    pub joint_err_ci_lo: Option<f64>,
    pub joint_err_ci_hi: Option<f64>,
    pub ape: Option<f64>,
    pub overflow_rate: Option<f64>,
    pub budget_total: Option<f64>,
    pub budget_valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub row: Option<SweepRow>,
    pub errors: Vec<String>,
}

/// Monotone-trend verdicts across the grid, in grid order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendVerdict {
    /// `k ln ell / n` strictly decreasing.
    pub load_decreasing: bool,
    /// Simulated joint error non-increasing, when at least two points ran.
    pub joint_err_nonincreasing: Option<bool>,
    /// Analytic budget non-increasing, when at least two points evaluated.
    pub budget_nonincreasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub family: String,
    pub points: Vec<SweepPoint>,
    pub trend: TrendVerdict,
}

fn nonincreasing(xs: &[f64]) -> Option<bool> {
    (xs.len() >= 2).then(|| xs.windows(2).all(|w| w[1] <= w[0]))
}

/// Evaluates every grid point; failures are recorded and the sweep goes on.
pub fn sweep(family: &GrowthFamily, grid: &[usize], opts: &SweepOptions) -> SweepTable {
    let mut points = Vec::with_capacity(grid.len());
    let mut loads = Vec::new();
    for &n in grid {
        let mut errors = Vec::new();
        let row = sweep_point(family, n, opts, &mut errors, &mut loads);
        points.push(SweepPoint { n, row, errors });
    }
    let rows: Vec<&SweepRow> = points.iter().filter_map(|p| p.row.as_ref()).collect();
    let sims: Vec<f64> = rows.iter().filter_map(|r| r.joint_err).collect();
    let budgets: Vec<f64> = rows.iter().filter_map(|r| r.budget_total).collect();
    let trend = TrendVerdict {
        load_decreasing: loads.windows(2).all(|w| w[1] < w[0]),
        joint_err_nonincreasing: nonincreasing(&sims),
        budget_nonincreasing: nonincreasing(&budgets),
    };
    SweepTable { family: family.name.clone(), points, trend }
}

fn sweep_point(family: &GrowthFamily, n: usize, opts: &SweepOptions, errors: &mut Vec<String>, loads: &mut Vec<f64>) -> Option<SweepRow> {
    let params = match family.point(n) {
        Ok(p) => p,
        Err(e) => {
            errors.push(e.to_string());
            return None;
        }
    };
    loads.push(params.k() * (params.ell() as f64).ln() / n as f64);
    let sched = match opts.scheme {
        Scheme::Joint => make_joint_schedule(&params, opts.split.unwrap_or(0.5)),
        Scheme::Ortho => make_ortho_schedule(&params, opts.split.unwrap_or(0.25)),
    };
    let sched = match sched {
        Ok(s) => s,
        Err(e) => {
            errors.push(e.to_string());
            return None;
        }
    };
    let rate = match single_user_capacity_pue(params.n0())
        .and_then(|c| RateSpec::from_rate(opts.capacity_fraction * c, sched.energy))
    {
        Ok(r) => r,
        Err(e) => {
            errors.push(e.to_string());
            return None;
        }
    };
    let mut row = SweepRow {
        n,
        ell: params.ell(),
        alpha: params.alpha(),
        k: params.k(),
        energy: sched.energy,
        m: rate.m,
        r_dot_nats: rate.r_dot,
        r_dot_bits: rate.r_dot_bits(),
        joint_err: None,
        joint_err_ci_lo: None,
        joint_err_ci_hi: None,
        ape: None,
        overflow_rate: None,
        budget_total: None,
        budget_valid: false,
    };
    match analytic_budget(&params, &sched, &rate, &opts.bounds) {
        Ok(b) => {
            row.budget_total = Some(b.total);
            row.budget_valid = b.valid;
        }
        Err(e) => errors.push(format!("bound: {e}")),
    }
    if opts.simulate {
        let cfg = ExperimentConfig {
            scheme: opts.scheme,
            n,
            ell: params.ell(),
            alpha: params.alpha(),
            n0: params.n0(),
            split: opts.split,
            rate: RateTarget::Messages(rate.m),
            bounds: opts.bounds,
            trials: opts.trials,
            seed: mix_seed(opts.seed, n as u64),
            epsilon: 0.1,
            noiseless: false,
            fixed_codebook: false,
            budget: opts.budget,
        };
        match cfg.resolve().and_then(|e| e.estimate_error(opts.threads)) {
            Ok(s) => {
                row.joint_err = Some(s.joint_err);
                row.joint_err_ci_lo = Some(s.joint_err_ci.lo);
                row.joint_err_ci_hi = Some(s.joint_err_ci.hi);
                row.ape = Some(s.ape);
                row.overflow_rate = Some(s.overflow_rate);
            }
            Err(e) => errors.push(format!("simulation: {e}")),
        }
    }
    Some(row)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Sweep table as CSV with the fixed column order; failed points are
/// omitted.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for r in table.points.iter().filter_map(|p| p.row.as_ref()) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.ell,
            r.alpha,
            r.k,
            r.energy,
            r.r_dot_nats,
            r.r_dot_bits,
            opt(r.joint_err),
            opt(r.joint_err_ci_lo),
            opt(r.joint_err_ci_hi),
            opt(r.ape),
            opt(r.overflow_rate),
            opt(r.budget_total),
            r.budget_valid
        );
    }
    out
}

/// Growth regime of `k ln ell` relative to `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sublinear,
    Superlinear,
    Indeterminate,
}

/// Default slope tolerance for [`classify_regime`].
pub const REGIME_TOLERANCE: f64 = 0.02;

/// Least-squares slope of `ln(k ln ell / n)` against `ln n`, classified
/// against `tol`.
pub fn classify_regime(family: &GrowthFamily, grid: &[usize], tol: f64) -> Result<(Regime, f64)> {
    if grid.len() < 3 {
        return Err(domain(format!("regime classification needs at least 3 grid points, got {}", grid.len())));
    }
    let mut xs = Vec::with_capacity(grid.len());
    let mut ys = Vec::with_capacity(grid.len());
    for &n in grid {
        let p = family.point(n)?;
        let load = p.k() * (p.ell() as f64).ln() / n as f64;
        if !(load > 0.0) {
            return Err(domain(format!("load k ln ell / n is not positive at n = {n}")));
        }
        xs.push((n as f64).ln());
        ys.push(load.ln());
    }
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(domain("grid needs at least two distinct blocklengths"));
    }
    let slope = sxy / sxx;
    let regime = if slope < -tol {
        Regime::Sublinear
    } else if slope > tol {
        Regime::Superlinear
    } else {
        Regime::Indeterminate
    };
    Ok((regime, slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{AlphaRule, PowerLaw};

    #[test]
    fn regimes() {
        let grid = [1 << 10, 1 << 14, 1 << 18];
        assert_eq!(classify_regime(&GrowthFamily::sub(), &grid, REGIME_TOLERANCE).unwrap().0, Regime::Sublinear);
        assert_eq!(classify_regime(&GrowthFamily::sup(), &grid, REGIME_TOLERANCE).unwrap().0, Regime::Superlinear);
        let edge = GrowthFamily {
            name: "EDGE".into(),
            alpha: AlphaRule::Law(PowerLaw { coef: 3.0, n_exp: 0.0, log_exp: -1.0 }),
            ..GrowthFamily::sup()
        };
        let (r, slope) = classify_regime(&edge, &grid, REGIME_TOLERANCE).unwrap();
        assert_eq!(r, Regime::Indeterminate, "slope {slope}");
        assert!(classify_regime(&edge, &grid[..2], REGIME_TOLERANCE).is_err());
    }

    #[test]
    fn sub_family_load_decreases() {
        let opts = SweepOptions { simulate: false, ..SweepOptions::default() };
        let t = sweep(&GrowthFamily::sub(), &[256, 1024, 4096], &opts);
        assert!(t.trend.load_decreasing);
        assert!(t.points.iter().all(|p| p.row.is_some()));
        let csv = sweep_csv(&t);
        assert!(csv.starts_with("n,ell,alpha,k,E,R_dot_nats,R_dot_bits,joint_err,"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn empty_grid() {
        let t = sweep(&GrowthFamily::sub(), &[], &SweepOptions::default());
        assert!(t.points.is_empty());
        assert_eq!(sweep_csv(&t).lines().count(), 1);
    }

    #[test]
    fn failures_are_recorded() {
        let opts = SweepOptions { simulate: false, ..SweepOptions::default() };
        let t = sweep(&GrowthFamily::sup(), &[64], &opts);
        assert!(t.points[0].row.is_none());
        assert!(!t.points[0].errors.is_empty());
    }
}
