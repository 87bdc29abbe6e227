//! Closed-form smooth approximations of `|s|`.
//!
//! Both families are even in `s`, strictly positive for `mu > 0`, bounded
//! below by `|s|` and nondecreasing in `mu`. Their curvature in `s` is at most
//! `1 / (2 mu)`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_finite, Error, Result};

/// `mu * ln(2 + e^{-s/mu} + e^{s/mu})`, evaluated without overflow.
pub fn smooth_abs_logexp(s: f64, mu: f64) -> Result<f64> {
    check_args(s, mu)?;
    Ok(logexp(s, mu))
}

/// `sqrt(s^2 + 4 mu^2)`.
pub fn smooth_abs_sqrt(s: f64, mu: f64) -> Result<f64> {
    check_args(s, mu)?;
    Ok(sqrt_abs(s, mu))
}

fn check_args(s: f64, mu: f64) -> Result<()> {
    ensure_finite("smooth_abs", s)?;
    ensure_finite("smooth_abs", mu)?;
    if mu <= 0.0 {
        return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
    }
    Ok(())
}

// 2 + e^u + e^-u = (e^{u/2} + e^{-u/2})^2, so the value is
// |s| + 2 mu ln(1 + e^{-|s|/mu}).
#[inline]
fn logexp(s: f64, mu: f64) -> f64 {
    let a = s.abs();
    a + 2.0 * mu * (-a / mu).exp().ln_1p()
}

#[inline]
fn sqrt_abs(s: f64, mu: f64) -> f64 {
    s.hypot(2.0 * mu)
}

/// Which smooth-abs family replaces every `|x_l|` in an objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmootherKind {
    #[serde(alias = "log-exp")]
    LogExp,
    Sqrt,
}

impl SmootherKind {
    #[inline]
    pub fn value(self, s: f64, mu: f64) -> f64 {
        match self {
            SmootherKind::LogExp => logexp(s, mu),
            SmootherKind::Sqrt => sqrt_abs(s, mu),
        }
    }

    /// Derivative in `s`.
    #[inline]
    pub fn ds(self, s: f64, mu: f64) -> f64 {
        match self {
            SmootherKind::LogExp => (0.5 * s / mu).tanh(),
            SmootherKind::Sqrt => s / sqrt_abs(s, mu),
        }
    }

    /// Derivative in `mu`.
    #[inline]
    pub fn dmu(self, s: f64, mu: f64) -> f64 {
        match self {
            SmootherKind::LogExp => {
                let u = s.abs() / mu;
                let e = (-u).exp();
                2.0 * e.ln_1p() + 2.0 * u * e / (1.0 + e)
            }
            SmootherKind::Sqrt => 4.0 * mu / sqrt_abs(s, mu),
        }
    }

    /// Second derivative in `s`.
    #[inline]
    pub fn dss(self, s: f64, mu: f64) -> f64 {
        match self {
            SmootherKind::LogExp => {
                let c = (0.5 * s / mu).cosh();
                0.5 / (mu * c * c)
            }
            SmootherKind::Sqrt => {
                let r = sqrt_abs(s, mu);
                4.0 * mu * mu / (r * r * r)
            }
        }
    }

    /// Per-term `kappa`: `sup |d/dmu phi| = sup (phi - |s|) / mu`, attained at `s = 0`.
    pub fn kappa(self) -> f64 {
        match self {
            SmootherKind::LogExp => 4f64.ln(),
            SmootherKind::Sqrt => 2.0,
        }
    }

    /// Per-term `eta`: `sup mu * d^2/ds^2 phi`.
    pub fn eta(self) -> f64 {
        0.5
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SmootherKind::LogExp => "logexp",
            SmootherKind::Sqrt => "sqrt",
        }
    }
}

impl fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SmootherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logexp" | "log-exp" => Ok(SmootherKind::LogExp),
            "sqrt" => Ok(SmootherKind::Sqrt),
            other => Err(Error::invalid("smoother", format!("unknown smoother `{other}`"))),
        }
    }
}
