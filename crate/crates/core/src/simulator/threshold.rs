use std::fmt;
use std::str::FromStr;

use super::{estimate_decay, integrate, DecayEstimate};
use crate::criteria::{evaluate, CriterionId};
use crate::equation::{HistorySpec, NeutralEquation};
use crate::error::{Error, Result};

/// Simulation settings; unset fields take the defaults
/// `t_end = t0 + 200 max(1, max lag)` and `dt = min(1e-3, min lag / 100)`,
/// the latter aligned to the constant lags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimConfig {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub history: Option<HistorySpec>,
}

impl SimConfig {
    pub fn new(t_end: f64, dt: f64) -> Self {
        SimConfig {
            t_end: Some(t_end),
            dt: Some(dt),
            history: None,
        }
    }

    /// `(t_end, dt)` for `eq`.
    pub fn resolve(&self, eq: &NeutralEquation) -> (f64, f64) {
        let t_end = self
            .t_end
            .unwrap_or_else(|| eq.t0 + 200.0 * eq.max_lag().unwrap_or(1.0).max(1.0));
        let dt = self
            .dt
            .unwrap_or_else(|| eq.min_positive_lag().map_or(1e-3, |l| (l / 100.0).min(1e-3)));
        (t_end, aligned_dt(eq, dt))
    }

    pub fn classify(&self, eq: &NeutralEquation) -> Result<DecayEstimate> {
        let (t_end, dt) = self.resolve(eq);
        let hist = self.history.clone().unwrap_or_default();
        Ok(estimate_decay(&integrate(eq, &hist, t_end, dt, None)?))
    }
}

/// Largest step `<= dt` that divides every positive constant lag, when one
/// exists; otherwise a step dividing the smallest lag.
pub fn aligned_dt(eq: &NeutralEquation, dt: f64) -> f64 {
    let mut lags: Vec<f64> = eq
        .all_delays()
        .filter_map(|d| d.as_constant_lag())
        .filter(|l| *l > 0.0)
        .collect();
    lags.sort_by(f64::total_cmp);
    lags.dedup();
    let fit = |l: f64| l / (l / dt - 1e-9).ceil();
    let divides = |step: f64, l: f64| {
        let r = l / step;
        (r - r.round()).abs() <= 1e-9 * r.max(1.0)
    };
    for &l in &lags {
        let step = fit(l);
        if lags.iter().all(|&m| divides(step, m)) {
            return step;
        }
    }
    lags.first().map_or(dt, |&l| fit(l))
}

/// Boolean outcome used to locate stability thresholds.
#[derive(Debug, Clone, PartialEq)]
pub enum Oracle {
    /// `true` when the simulated solution is classified as decaying.
    Simulate(SimConfig),
    /// `true` when the criterion is satisfied.
    Criterion(CriterionId),
    /// `true` when any of the criteria is satisfied.
    AnyOf(Vec<CriterionId>),
}

impl Oracle {
    pub fn outcome(&self, eq: &NeutralEquation) -> Result<bool> {
        match self {
            Oracle::Simulate(cfg) => match cfg.classify(eq) {
                Ok(d) => Ok(d.is_decaying()),
                Err(Error::IllPosed(_)) => Ok(false),
                Err(e) => Err(e),
            },
            Oracle::Criterion(id) => Ok(evaluate(eq, *id).is_satisfied()),
            Oracle::AnyOf(ids) => Ok(ids.iter().any(|id| evaluate(eq, *id).is_satisfied())),
        }
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Oracle::Simulate(_) => f.write_str("simulate"),
            Oracle::Criterion(id) => write!(f, "{id}"),
            Oracle::AnyOf(ids) => {
                let names: Vec<&str> = ids.iter().map(|i| i.as_str()).collect();
                f.write_str(&names.join("+"))
            }
        }
    }
}

/// `simulate` (default settings), a criterion id, or ids joined by `+`.
impl FromStr for Oracle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "simulate" {
            return Ok(Oracle::Simulate(SimConfig::default()));
        }
        let ids = s.split('+').map(str::parse).collect::<Result<Vec<CriterionId>>>()?;
        Ok(match ids.as_slice() {
            [one] => Oracle::Criterion(*one),
            _ => Oracle::AnyOf(ids),
        })
    }
}

/// Bisects on the oracle outcome over `family(p)`, `p` in `range`, until the
/// bracket is at most `tol` wide; returns its midpoint.
pub fn bisect_threshold<F>(family: F, range: (f64, f64), oracle: &Oracle, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> NeutralEquation,
{
    let (mut lo, mut hi) = range;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::Setup(format!(
            "bad bisection range [{lo}, {hi}] or tolerance {tol}"
        )));
    }
    let lo_outcome = oracle.outcome(&family(lo))?;
    let hi_outcome = oracle.outcome(&family(hi))?;
    if lo_outcome == hi_outcome {
        return Err(Error::NoBracket {
            lo,
            hi,
            lo_outcome,
            hi_outcome,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if oracle.outcome(&family(mid))? == lo_outcome {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
