use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Delayed argument `t -> g(t) <= t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Delay {
    /// `g(t) = t - tau`
    #[serde(rename = "lag")]
    ConstantLag { tau: f64 },
    /// Pantograph delay `g(t) = lambda * t`, `lambda` in (0, 1).
    Proportional { lambda: f64 },
    /// `g(t) = t - (tau + amp * sin(omega * t))`, requires `tau >= |amp|`.
    #[serde(rename = "sinlag")]
    SinusoidLag { tau: f64, amp: f64, omega: f64 },
}

impl Delay {
    pub fn lag_of(tau: f64) -> Self {
        Delay::ConstantLag { tau }
    }

    pub fn proportional(lambda: f64) -> Self {
        Delay::Proportional { lambda }
    }

    pub fn sin_lag(tau: f64, amp: f64, omega: f64) -> Self {
        Delay::SinusoidLag { tau, amp, omega }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Delay::ConstantLag { tau } => {
                if !tau.is_finite() || *tau < 0.0 {
                    return Err(Error::InvalidExpr(format!("lag must be finite and >= 0, got {tau}")));
                }
            }
            Delay::Proportional { lambda } => {
                if !(*lambda > 0.0 && *lambda < 1.0) {
                    return Err(Error::InvalidExpr(format!(
                        "proportional delay needs lambda in (0, 1), got {lambda}"
                    )));
                }
            }
            Delay::SinusoidLag { tau, amp, omega } => {
                if !(tau.is_finite() && amp.is_finite() && omega.is_finite()) {
                    return Err(Error::InvalidExpr("sinlag parameters must be finite".into()));
                }
                if tau - amp.abs() < 0.0 {
                    return Err(Error::InvalidExpr(format!(
                        "sinlag needs tau >= |amp| so that g(t) <= t (tau = {tau}, amp = {amp})"
                    )));
                }
                if *amp != 0.0 && *omega == 0.0 {
                    return Err(Error::InvalidExpr(
                        "sinlag with nonzero amplitude needs omega != 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The delayed argument `g(t)`.
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Delay::ConstantLag { tau } => t - tau,
            Delay::Proportional { lambda } => lambda * t,
            Delay::SinusoidLag { tau, amp, omega } => t - (tau + amp * (omega * t).sin()),
        }
    }

    /// `t - g(t)`.
    #[inline]
    pub fn lag(&self, t: f64) -> f64 {
        match self {
            Delay::ConstantLag { tau } => *tau,
            Delay::Proportional { lambda } => (1.0 - lambda) * t,
            Delay::SinusoidLag { tau, amp, omega } => tau + amp * (omega * t).sin(),
        }
    }

    /// Supremum of the lag over `t >= t0`; `None` for unbounded delays.
    pub fn sup_lag(&self) -> Option<f64> {
        match self {
            Delay::ConstantLag { tau } => Some(*tau),
            Delay::Proportional { .. } => None,
            Delay::SinusoidLag { tau, amp, .. } => Some(tau + amp.abs()),
        }
    }

    /// Infimum of the lag over `t >= t0`.
    pub fn inf_lag(&self, t0: f64) -> f64 {
        match self {
            Delay::ConstantLag { tau } => *tau,
            Delay::Proportional { lambda } => (1.0 - lambda) * t0.max(0.0),
            Delay::SinusoidLag { tau, amp, .. } => tau - amp.abs(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.sup_lag().is_some()
    }

    pub fn as_constant_lag(&self) -> Option<f64> {
        match self {
            Delay::ConstantLag { tau } => Some(*tau),
            Delay::SinusoidLag { tau, amp, .. } if *amp == 0.0 => Some(*tau),
            _ => None,
        }
    }
}
