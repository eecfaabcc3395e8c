use serde::{Deserialize, Serialize};

use super::BoundCertificate;
use crate::error::{Error, Result};

/// A closed-form time function used for coefficients, history and forcing.
///
/// All four families have exact suprema, infima and antiderivatives, which is
/// what lets the criteria decide inequalities without quadrature error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Coefficient {
    /// `c`
    Constant { c: f64 },
    /// `c + amp * sin(omega * t + phase)`
    Sinusoid {
        c: f64,
        amp: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Periodic step function. On `[breaks[i], breaks[i+1])` (taken modulo
    /// `period`) the value is `values[i]`; before the first break the last
    /// value wraps around. Right-continuous at breakpoints.
    Piecewise {
        period: f64,
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// `c / t`, defined for `t > 0`.
    Reciprocal { c: f64 },
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Coefficient::Constant { c }
    }

    pub fn sinusoid(c: f64, amp: f64, omega: f64, phase: f64) -> Self {
        Coefficient::Sinusoid { c, amp, omega, phase }
    }

    pub fn piecewise(period: f64, breaks: Vec<f64>, values: Vec<f64>) -> Self {
        Coefficient::Piecewise { period, breaks, values }
    }

    pub fn reciprocal(c: f64) -> Self {
        Coefficient::Reciprocal { c }
    }

    pub fn zero() -> Self {
        Coefficient::Constant { c: 0.0 }
    }

    /// Checks the parameter invariants of each family.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidExpr(format!("{name} must be finite, got {v}")))
            }
        };
        match self {
            Coefficient::Constant { c } | Coefficient::Reciprocal { c } => finite("c", *c),
            Coefficient::Sinusoid { c, amp, omega, phase } => {
                finite("c", *c)?;
                finite("amp", *amp)?;
                finite("omega", *omega)?;
                finite("phase", *phase)?;
                if *amp != 0.0 && *omega == 0.0 {
                    return Err(Error::InvalidExpr(
                        "sinusoid with nonzero amplitude needs omega != 0".into(),
                    ));
                }
                Ok(())
            }
            Coefficient::Piecewise { period, breaks, values } => {
                finite("period", *period)?;
                if *period <= 0.0 {
                    return Err(Error::InvalidExpr(format!(
                        "piecewise period must be positive, got {period}"
                    )));
                }
                if breaks.is_empty() || breaks.len() != values.len() {
                    return Err(Error::InvalidExpr(format!(
                        "piecewise needs as many values as breaks (got {} breaks, {} values)",
                        breaks.len(),
                        values.len()
                    )));
                }
                for v in breaks.iter().chain(values.iter()) {
                    finite("piecewise entry", *v)?;
                }
                if breaks[0] < 0.0 || *breaks.last().unwrap() >= *period {
                    return Err(Error::InvalidExpr("piecewise breaks must lie in [0, period)".into()));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidExpr(
                        "piecewise breaks must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Value at `t`; fails only for `Reciprocal` at `t <= 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if let Coefficient::Reciprocal { .. } = self {
            if t <= 0.0 {
                return Err(Error::Domain(format!("reciprocal coefficient at t = {t}")));
            }
        }
        Ok(self.value(t))
    }

    /// Unchecked evaluation for hot loops whose domain was validated up front.
    #[inline]
    pub(crate) fn value(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant { c } => *c,
            Coefficient::Sinusoid { c, amp, omega, phase } => c + amp * (omega * t + phase).sin(),
            Coefficient::Piecewise { period, breaks, values } => {
                let r = t.rem_euclid(*period);
                let idx = breaks.partition_point(|b| *b <= r);
                if idx == 0 {
                    *values.last().unwrap()
                } else {
                    values[idx - 1]
                }
            }
            Coefficient::Reciprocal { c } => c / t,
        }
    }

    /// `Some(c)` when the function is constant in time.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant { c } => Some(*c),
            Coefficient::Sinusoid { c, amp, .. } if *amp == 0.0 => Some(*c),
            Coefficient::Piecewise { values, .. } if values.iter().all(|v| *v == values[0]) => Some(values[0]),
            _ => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            Coefficient::Piecewise { .. } => self.as_constant().is_some(),
            _ => true,
        }
    }

    /// Essential supremum of `|f|` on `[t0, inf)`. Exact for every family.
    pub fn sup_norm(&self, t0: f64) -> BoundCertificate {
        let v = match self {
            Coefficient::Constant { c } => c.abs(),
            Coefficient::Sinusoid { c, amp, .. } => c.abs() + amp.abs(),
            Coefficient::Piecewise { values, .. } => values.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
            Coefficient::Reciprocal { c } => {
                if *c == 0.0 {
                    0.0
                } else if t0 <= 0.0 {
                    f64::INFINITY
                } else {
                    c.abs() / t0
                }
            }
        };
        BoundCertificate::exact(v)
    }

    /// Signed essential supremum on `[t0, inf)`.
    pub fn sup_bound(&self, t0: f64) -> BoundCertificate {
        let v = match self {
            Coefficient::Constant { c } => *c,
            Coefficient::Sinusoid { c, amp, .. } => c + amp.abs(),
            Coefficient::Piecewise { values, .. } => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Coefficient::Reciprocal { c } => {
                if *c > 0.0 {
                    if t0 <= 0.0 {
                        f64::INFINITY
                    } else {
                        c / t0
                    }
                } else {
                    0.0
                }
            }
        };
        BoundCertificate::exact(v)
    }

    /// Signed essential infimum on `[t0, inf)`. `Reciprocal(c > 0)` reports
    /// its limit 0.
    pub fn inf_bound(&self, t0: f64) -> BoundCertificate {
        let v = match self {
            Coefficient::Constant { c } => *c,
            Coefficient::Sinusoid { c, amp, .. } => c - amp.abs(),
            Coefficient::Piecewise { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
            Coefficient::Reciprocal { c } => {
                if *c < 0.0 {
                    if t0 <= 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        c / t0
                    }
                } else {
                    0.0
                }
            }
        };
        BoundCertificate::exact(v)
    }

    /// Essential infimum of `|f|` on `[t0, inf)`.
    pub fn inf_abs(&self, t0: f64) -> f64 {
        let lo = self.inf_bound(t0).value;
        let hi = self.sup_bound(t0).value;
        if lo > 0.0 {
            lo
        } else if hi < 0.0 {
            -hi
        } else {
            match self {
                Coefficient::Piecewise { values, .. } => values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())),
                _ => 0.0,
            }
        }
    }

    /// `int_{from}^{to} f(s) ds` from the closed-form antiderivative.
    pub fn integral(&self, from: f64, to: f64) -> Result<f64> {
        match self {
            Coefficient::Constant { c } => Ok(c * (to - from)),
            Coefficient::Sinusoid { c, amp, omega, phase } => {
                let base = c * (to - from);
                if *amp == 0.0 {
                    return Ok(base);
                }
                // cos(wa+p) - cos(wb+p) = 2 sin(w(a+b)/2 + p) sin(w(b-a)/2)
                let osc =
                    2.0 * amp / omega * (omega * 0.5 * (from + to) + phase).sin() * (omega * 0.5 * (to - from)).sin();
                Ok(base + osc)
            }
            Coefficient::Piecewise { .. } => Ok(self.piecewise_primitive(to) - self.piecewise_primitive(from)),
            Coefficient::Reciprocal { c } => {
                if from <= 0.0 || to <= 0.0 {
                    return Err(Error::Domain(format!(
                        "reciprocal integral over [{from}, {to}] touches t <= 0"
                    )));
                }
                Ok(c * (to / from).ln())
            }
        }
    }

    fn piecewise_primitive(&self, t: f64) -> f64 {
        let Coefficient::Piecewise { period, breaks, values } = self else {
            unreachable!()
        };
        let last = *values.last().unwrap();
        // integral over [0, r) for r in [0, period)
        let partial = |r: f64| -> f64 {
            let mut acc = 0.0;
            let mut left = 0.0;
            let mut current = last;
            for (b, v) in breaks.iter().zip(values) {
                if *b >= r {
                    break;
                }
                acc += current * (b - left);
                left = *b;
                current = *v;
            }
            acc + current * (r - left)
        };
        let cycles = (t / period).floor();
        let r = t - cycles * period;
        cycles * partial(*period) + partial(r.clamp(0.0, *period))
    }

    /// Time average over one period (or the constant itself); `None` for `Reciprocal`.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Coefficient::Constant { c } | Coefficient::Sinusoid { c, .. } => Some(*c),
            Coefficient::Piecewise { period, .. } => Some(self.piecewise_primitive(*period) / period),
            Coefficient::Reciprocal { .. } => None,
        }
    }

    /// Whether `int_{t0}^inf f = inf`, decided per family (for `f >= 0`).
    pub fn integral_diverges(&self) -> bool {
        match self {
            Coefficient::Reciprocal { c } => *c > 0.0,
            _ => self.mean().is_some_and(|m| m > 0.0),
        }
    }

    /// Closed-form derivative when it stays inside the families.
    pub fn derivative(&self) -> Option<Coefficient> {
        match self {
            Coefficient::Constant { .. } => Some(Coefficient::zero()),
            Coefficient::Sinusoid { amp, omega, phase, .. } => Some(Coefficient::Sinusoid {
                c: 0.0,
                amp: amp * omega,
                omega: *omega,
                phase: phase + std::f64::consts::FRAC_PI_2,
            }),
            Coefficient::Piecewise { .. } => self.as_constant().map(|_| Coefficient::zero()),
            Coefficient::Reciprocal { c } => (*c == 0.0).then(Coefficient::zero),
        }
    }

    /// Same family with every value multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Coefficient {
        match self {
            Coefficient::Constant { c } => Coefficient::Constant { c: c * k },
            Coefficient::Sinusoid { c, amp, omega, phase } => Coefficient::Sinusoid {
                c: c * k,
                amp: amp * k,
                omega: *omega,
                phase: *phase,
            },
            Coefficient::Piecewise { period, breaks, values } => Coefficient::Piecewise {
                period: *period,
                breaks: breaks.clone(),
                values: values.iter().map(|v| v * k).collect(),
            },
            Coefficient::Reciprocal { c } => Coefficient::Reciprocal { c: c * k },
        }
    }

    /// Period of the function, if it is periodic and non-constant.
    pub fn period(&self) -> Option<f64> {
        match self {
            Coefficient::Sinusoid { amp, omega, .. } if *amp != 0.0 => Some(2.0 * std::f64::consts::PI / omega.abs()),
            Coefficient::Piecewise { period, .. } if self.as_constant().is_none() => Some(*period),
            _ => None,
        }
    }
}
