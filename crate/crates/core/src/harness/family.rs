//! Growth families: user count and activity as functions of blocklength.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    Ceil,
    Floor,
    Round,
}

/// `coef * n^n_exp * (ln n)^log_exp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub coef: f64,
    #[serde(default)]
    pub n_exp: f64,
    #[serde(default)]
    pub log_exp: f64,
}

impl PowerLaw {
    pub fn eval(&self, n: usize) -> f64 {
        let nf = n as f64;
        self.coef * nf.powf(self.n_exp) * nf.ln().powf(self.log_exp)
    }
}

/// Integer user count from a power law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllRule {
    #[serde(flatten)]
    pub law: PowerLaw,
    pub rounding: Rounding,
}

impl EllRule {
    pub fn eval(&self, n: usize) -> usize {
        let x = self.law.eval(n);
        // Guard against powf landing just above an integer, e.g. 4096^(1/3).
        let snapped = if (x - x.round()).abs() < 1e-9 { x.round() } else { x };
        let v = match self.rounding {
            Rounding::Ceil => snapped.ceil(),
            Rounding::Floor => snapped.floor(),
            Rounding::Round => snapped.round(),
        };
        v.max(0.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    /// Fixed activity probability.
    Constant(f64),
    /// `alpha = k / ell` for a fixed average number of active users.
    KOverEll(f64),
    /// Activity probability given by a power law in `n`.
    Law(PowerLaw),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFamily {
    pub name: String,
    pub ell: EllRule,
    pub alpha: AlphaRule,
    #[serde(default = "default_n0")]
    pub n0: f64,
}

fn default_n0() -> f64 {
    2.0
}

impl GrowthFamily {
    /// `ell = ceil(n^(1/3))` with two active users on average.
    pub fn sub() -> Self {
        Self {
            name: "SUB".into(),
            ell: EllRule { law: PowerLaw { coef: 1.0, n_exp: 1.0 / 3.0, log_exp: 0.0 }, rounding: Rounding::Ceil },
            alpha: AlphaRule::KOverEll(2.0),
            n0: 2.0,
        }
    }

    /// `ell = n` with every user active.
    pub fn sup() -> Self {
        Self {
            name: "SUP".into(),
            ell: EllRule { law: PowerLaw { coef: 1.0, n_exp: 1.0, log_exp: 0.0 }, rounding: Rounding::Round },
            alpha: AlphaRule::Constant(1.0),
            n0: 2.0,
        }
    }

    /// Parameters at blocklength `n`; requires `k >= 1`.
    pub fn point(&self, n: usize) -> Result<SystemParams> {
        let ell = self.ell.eval(n);
        let alpha = match self.alpha {
            AlphaRule::Constant(a) => a,
            AlphaRule::KOverEll(k) => k / ell as f64,
            AlphaRule::Law(law) => law.eval(n),
        };
        let params = SystemParams::new(n, ell, alpha, self.n0)?;
        if params.k() < 1.0 - 1e-12 {
            return Err(domain(format!("family {} has k = {} < 1 at n = {n}", self.name, params.k())));
        }
        Ok(params)
    }
}
