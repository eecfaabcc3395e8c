//! Closed-form coefficient and delay functions, and the certified norms the
//! stability criteria are built from.
//!
//! Every quantity comes back as a [`BoundCertificate`]. Closed forms give
//! `exact = true`. The sampled fallback used for the few (function, delay)
//! pairs without a closed window integral reports `exact = false` together
//! with the horizon and sample count it used.

mod coefficient;
mod delay;

pub use coefficient::Coefficient;
pub use delay::Delay;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of grid points for sampled bounds.
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub value: f64,
    /// Derived from a closed form rather than from sampling.
    pub exact: bool,
    /// Valid one-sided bound that may not be attained (e.g. `sup|n| / inf|d|`).
    #[serde(default)]
    pub conservative: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl BoundCertificate {
    pub fn exact(value: f64) -> Self {
        BoundCertificate {
            value,
            exact: true,
            conservative: false,
            horizon: None,
            samples: None,
        }
    }

    pub fn conservative(value: f64, exact: bool) -> Self {
        BoundCertificate {
            value,
            exact,
            conservative: true,
            horizon: None,
            samples: None,
        }
    }

    pub fn sampled(value: f64, horizon: f64, samples: usize) -> Self {
        BoundCertificate {
            value,
            exact: false,
            conservative: false,
            horizon: Some(horizon),
            samples: Some(samples),
        }
    }

    /// Combines two certificates that were added or multiplied together.
    pub fn merge_flags(mut self, other: &BoundCertificate) -> Self {
        self.exact &= other.exact;
        self.conservative |= other.conservative;
        if self.horizon.is_none() {
            self.horizon = other.horizon;
            self.samples = other.samples;
        }
        self
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = value;
        self
    }
}

/// Range `[inf, sup]` of the moving-window integral `W(t) = int_{h(t)}^t f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRange {
    pub inf: BoundCertificate,
    pub sup: BoundCertificate,
}

/// `sup_{t >= t0} int_{h(t)}^t f(s) ds` for non-negative `f`.
pub fn sup_window_integral(f: &Coefficient, h: &Delay, t0: f64) -> Result<BoundCertificate> {
    Ok(window_integral_range(f, h, t0)?.sup)
}

/// Infimum and supremum over `t >= t0` of the window integral of `f` over `[h(t), t]`.
pub fn window_integral_range(f: &Coefficient, h: &Delay, t0: f64) -> Result<WindowRange> {
    let inf_f = f.inf_bound(t0).value;
    if inf_f < 0.0 {
        return Err(Error::NegativeCoefficient { inf: inf_f });
    }
    if let Some(c) = f.as_constant() {
        let lo = h.inf_lag(t0);
        let hi = h.sup_lag().unwrap_or(f64::INFINITY);
        let scale = |l: f64| if c == 0.0 { 0.0 } else { c * l };
        return Ok(WindowRange {
            inf: BoundCertificate::exact(scale(lo)),
            sup: BoundCertificate::exact(scale(hi)),
        });
    }
    match (f, h) {
        (Coefficient::Sinusoid { c, amp, omega, .. }, Delay::ConstantLag { tau }) => {
            let r = (2.0 * amp / omega * (omega * tau * 0.5).sin()).abs();
            Ok(WindowRange {
                inf: BoundCertificate::exact(c * tau - r),
                sup: BoundCertificate::exact(c * tau + r),
            })
        }
        (Coefficient::Reciprocal { c }, Delay::Proportional { lambda }) => {
            if t0 <= 0.0 {
                return Err(Error::Domain("reciprocal coefficient needs t0 > 0".into()));
            }
            let w = BoundCertificate::exact(c * (1.0 / lambda).ln());
            Ok(WindowRange { inf: w, sup: w })
        }
        (Coefficient::Reciprocal { .. }, Delay::ConstantLag { tau }) => {
            if t0 - tau <= 0.0 {
                return Err(Error::Domain(format!(
                    "reciprocal window [t0 - tau, t0] = [{}, {t0}] touches t <= 0",
                    t0 - tau
                )));
            }
            Ok(WindowRange {
                inf: BoundCertificate::exact(0.0),
                sup: BoundCertificate::exact(f.integral(t0 - tau, t0)?),
            })
        }
        (Coefficient::Piecewise { period, breaks, .. }, Delay::ConstantLag { tau }) => {
            // W is piecewise linear with kinks where t or t - tau crosses a break.
            let mut candidates = vec![t0, t0 + period];
            for b in breaks {
                for shift in [0.0, *tau] {
                    let base = b + shift;
                    let k = ((t0 - base) / period).ceil();
                    let t = base + k * period;
                    if t >= t0 && t <= t0 + period {
                        candidates.push(t);
                    }
                }
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for t in candidates {
                let w = f.integral(t - tau, t)?;
                lo = lo.min(w);
                hi = hi.max(w);
            }
            Ok(WindowRange {
                inf: BoundCertificate::exact(lo),
                sup: BoundCertificate::exact(hi),
            })
        }
        (_, Delay::Proportional { .. }) if f.mean().is_some_and(|m| m > 0.0) => {
            // The window integral grows like mean * (1 - lambda) * t.
            let (inf, _) = sampled_window_extrema(f, h, t0, default_horizon(f, h), DEFAULT_SAMPLES)?;
            Ok(WindowRange {
                inf,
                sup: BoundCertificate::exact(f64::INFINITY),
            })
        }
        _ => {
            let (inf, sup) = sampled_window_extrema(f, h, t0, default_horizon(f, h), DEFAULT_SAMPLES)?;
            Ok(WindowRange { inf, sup })
        }
    }
}

/// Sampling horizon: 50 lags (50 * 50 for unbounded delays), stretched to
/// cover at least 50 periods of `f`.
pub fn default_horizon(f: &Coefficient, h: &Delay) -> f64 {
    let lag = h.sup_lag().unwrap_or(50.0);
    let period = f.period().unwrap_or(0.0);
    50.0 * lag.max(period).max(1.0)
}

/// Window-integral extrema from a uniform grid of `samples` points over
/// `[t0, t0 + horizon]`. Each window integral is exact; only the search over
/// `t` is sampled.
pub fn sampled_window_extrema(
    f: &Coefficient,
    h: &Delay,
    t0: f64,
    horizon: f64,
    samples: usize,
) -> Result<(BoundCertificate, BoundCertificate)> {
    let n = samples.max(2);
    let step = horizon / (n - 1) as f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let t = t0 + i as f64 * step;
        let w = f.integral(h.at(t), t)?;
        lo = lo.min(w);
        hi = hi.max(w);
    }
    Ok((
        BoundCertificate::sampled(lo, horizon, n),
        BoundCertificate::sampled(hi, horizon, n),
    ))
}

/// `sup_{t >= t0} |num(t) / den(t)|`.
///
/// Exact when the ratio is itself a closed form (constant denominator,
/// proportional numerator and denominator, piecewise functions on shared
/// breaks). Otherwise `sup|num| / inf|den|`, flagged conservative.
pub fn ratio_sup_norm(num: &Coefficient, den: &Coefficient, t0: f64) -> Result<BoundCertificate> {
    let num_sup = num.sup_norm(t0);
    if let Some(d) = den.as_constant() {
        if d == 0.0 {
            return Err(Error::UnboundedRatio);
        }
        if let Some(n) = num.as_constant() {
            return Ok(BoundCertificate::exact((n / d).abs()));
        }
        return Ok(num_sup.with_value(num_sup.value / d.abs()));
    }
    if let Some(k) = proportional_factor(num, den) {
        return Ok(BoundCertificate::exact(k.abs()));
    }
    if let (
        Coefficient::Piecewise {
            period: pn,
            breaks: bn,
            values: vn,
        },
        Coefficient::Piecewise {
            period: pd,
            breaks: bd,
            values: vd,
        },
    ) = (num, den)
    {
        if pn == pd && bn == bd {
            if vd.contains(&0.0) {
                return Err(Error::UnboundedRatio);
            }
            let v = vn.iter().zip(vd).fold(0.0_f64, |m, (n, d)| m.max((n / d).abs()));
            return Ok(BoundCertificate::exact(v));
        }
    }
    let den_inf = den.inf_abs(t0);
    if den_inf <= 0.0 {
        return Err(Error::UnboundedRatio);
    }
    Ok(BoundCertificate::conservative(num_sup.value / den_inf, num_sup.exact))
}

/// `Some(k)` when `num = k * den` identically.
fn proportional_factor(num: &Coefficient, den: &Coefficient) -> Option<f64> {
    match (num, den) {
        (Coefficient::Reciprocal { c: n }, Coefficient::Reciprocal { c: d }) if *d != 0.0 => Some(n / d),
        (
            Coefficient::Sinusoid {
                c: cn,
                amp: an,
                omega: wn,
                phase: pn,
            },
            Coefficient::Sinusoid {
                c: cd,
                amp: ad,
                omega: wd,
                phase: pd,
            },
        ) if wn == wd && pn == pd && *cd != 0.0 => {
            let k = cn / cd;
            ((an - k * ad).abs() <= 1e-15 * an.abs().max(1.0)).then_some(k)
        }
        _ => None,
    }
}
