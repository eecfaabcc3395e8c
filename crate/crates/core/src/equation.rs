//! Equation model for
//!
//! `x'(t) - sum a_k(t) x'(g_k(t)) + sum b_k(t) x(h_k(t)) + int_{h(t)}^t K(t,s) x(s) ds = f(t)`
//!
//! together with the JSON spec-file schema.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::funcmodel::{BoundCertificate, Coefficient, Delay};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeutralTerm {
    pub a: Coefficient,
    pub g: Delay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayTerm {
    pub b: Coefficient,
    pub h: Delay,
}

/// Non-negative kernel of the distributed term, supported on `[h(t), t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Kernel {
    /// `K(t, s) = c * exp(-d (t - s))`
    Exponential { c: f64, d: f64, h: Delay },
    /// `K(t, s) = c`
    Uniform { c: f64, h: Delay },
}

/// `b(t) = int_{h(t)}^t K(t, s) ds` with its exact bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedB {
    /// Closed form when `b` stays in one of the coefficient families.
    pub coefficient: Option<Coefficient>,
    pub sup: BoundCertificate,
    pub inf: BoundCertificate,
    kernel: Kernel,
}

impl InducedB {
    pub fn value(&self, t: f64) -> f64 {
        self.kernel.mass(self.kernel.window().lag(t))
    }
}

impl Kernel {
    pub fn window(&self) -> &Delay {
        match self {
            Kernel::Exponential { h, .. } | Kernel::Uniform { h, .. } => h,
        }
    }

    #[inline]
    pub fn at(&self, t: f64, s: f64) -> f64 {
        match self {
            Kernel::Exponential { c, d, .. } => c * (-d * (t - s)).exp(),
            Kernel::Uniform { c, .. } => *c,
        }
    }

    /// Kernel mass over a window of length `lag` ending at `t`.
    fn mass(&self, lag: f64) -> f64 {
        match self {
            Kernel::Exponential { c, d, .. } => {
                if *d == 0.0 {
                    c * lag
                } else {
                    c / d * (-(-d * lag).exp_m1())
                }
            }
            Kernel::Uniform { c, .. } => c * lag,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, d) = match self {
            Kernel::Exponential { c, d, .. } => (*c, *d),
            Kernel::Uniform { c, .. } => (*c, 0.0),
        };
        if !c.is_finite() || !d.is_finite() {
            return Err(Error::InvalidExpr("kernel parameters must be finite".into()));
        }
        if c < 0.0 {
            return Err(Error::InvalidExpr(format!("kernel must be non-negative, got c = {c}")));
        }
        self.window().validate()
    }

    /// Induced coefficient `b(t) = int_{h(t)}^t K(t,s) ds`. The mass is
    /// increasing in the window length, so its bounds follow from the lag range.
    pub fn induced_b(&self, t0: f64) -> InducedB {
        let h = self.window();
        let sup = self.mass(h.sup_lag().unwrap_or(f64::INFINITY));
        let inf = self.mass(h.inf_lag(t0));
        let coefficient = match (self, h) {
            (_, Delay::ConstantLag { tau }) => Some(Coefficient::constant(self.mass(*tau))),
            (Kernel::Uniform { c, .. }, Delay::SinusoidLag { tau, amp, omega }) => {
                Some(Coefficient::sinusoid(c * tau, c * amp, *omega, 0.0))
            }
            _ => None,
        };
        InducedB {
            coefficient,
            sup: BoundCertificate::exact(sup),
            inf: BoundCertificate::exact(inf),
            kernel: self.clone(),
        }
    }
}

/// Values of `x` and `x'` before the initial time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistorySpec {
    pub phi: Coefficient,
    pub psi: Coefficient,
}

impl Default for HistorySpec {
    /// `phi = 1`, `psi = 0`.
    fn default() -> Self {
        HistorySpec {
            phi: Coefficient::constant(1.0),
            psi: Coefficient::zero(),
        }
    }
}

impl HistorySpec {
    pub fn zero() -> Self {
        HistorySpec {
            phi: Coefficient::zero(),
            psi: Coefficient::zero(),
        }
    }

    /// Whether `psi = phi'`. Not required for well-posedness.
    pub fn is_consistent(&self) -> bool {
        let Some(d) = self.phi.derivative() else {
            return false;
        };
        (0..16).all(|i| {
            let t = -0.37 * i as f64 - 0.1;
            (d.value(t) - self.psi.value(t)).abs() <= 1e-12 * (1.0 + d.value(t).abs())
        })
    }

    pub fn scaled(&self, k: f64) -> HistorySpec {
        HistorySpec {
            phi: self.phi.scaled(k),
            psi: self.psi.scaled(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeutralEquation {
    pub t0: f64,
    #[serde(default)]
    pub neutral: Vec<NeutralTerm>,
    #[serde(default)]
    pub delay: Vec<DelayTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Kernel>,
}

impl NeutralEquation {
    pub fn new(t0: f64) -> Self {
        NeutralEquation {
            t0,
            neutral: Vec::new(),
            delay: Vec::new(),
            kernel: None,
        }
    }

    pub fn with_neutral(mut self, a: Coefficient, g: Delay) -> Self {
        self.neutral.push(NeutralTerm { a, g });
        self
    }

    pub fn with_delay(mut self, b: Coefficient, h: Delay) -> Self {
        self.delay.push(DelayTerm { b, h });
        self
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = Some(kernel);
        self
    }

    /// `x' - a x'(t - sigma) + b x(t - tau) = 0` with constant coefficients.
    pub fn constant(a: f64, sigma: f64, b: f64, tau: f64) -> Self {
        NeutralEquation::new(0.0)
            .with_neutral(Coefficient::constant(a), Delay::lag_of(sigma))
            .with_delay(Coefficient::constant(b), Delay::lag_of(tau))
    }

    /// Parameter invariants of every expression (not well-posedness).
    pub fn check_parameters(&self) -> Result<()> {
        if !self.t0.is_finite() {
            return Err(Error::InvalidExpr("t0 must be finite".into()));
        }
        for (i, n) in self.neutral.iter().enumerate() {
            n.a.validate().map_err(|e| tag(e, &format!("neutral[{i}].a")))?;
            n.g.validate().map_err(|e| tag(e, &format!("neutral[{i}].g")))?;
        }
        for (i, d) in self.delay.iter().enumerate() {
            d.b.validate().map_err(|e| tag(e, &format!("delay[{i}].b")))?;
            d.h.validate().map_err(|e| tag(e, &format!("delay[{i}].h")))?;
        }
        if let Some(k) = &self.kernel {
            k.validate().map_err(|e| tag(e, "kernel"))?;
        }
        if self.t0 <= 0.0 && self.uses_reciprocal() {
            return Err(Error::InvalidExpr("reciprocal coefficients need t0 > 0".into()));
        }
        Ok(())
    }

    fn uses_reciprocal(&self) -> bool {
        self.neutral
            .iter()
            .map(|n| &n.a)
            .chain(self.delay.iter().map(|d| &d.b))
            .any(|c| matches!(c, Coefficient::Reciprocal { .. }))
    }

    /// `sum_k sup |a_k|` on `[t0, inf)`.
    pub fn neutral_norm_sum(&self) -> f64 {
        self.neutral.iter().map(|n| n.a.sup_norm(self.t0).value).sum()
    }

    /// Neutral coefficients satisfy `sum_k sup |a_k| < 1`.
    pub fn is_well_posed(&self) -> bool {
        self.neutral_norm_sum() < 1.0
    }

    pub fn all_delays(&self) -> impl Iterator<Item = &Delay> {
        self.neutral
            .iter()
            .map(|n| &n.g)
            .chain(self.delay.iter().map(|d| &d.h))
            .chain(self.kernel.iter().map(|k| k.window()))
    }

    pub fn has_unbounded_delay(&self) -> bool {
        self.all_delays().any(|d| !d.is_bounded())
    }

    /// Largest lag over all terms; `None` if some delay is unbounded.
    pub fn max_lag(&self) -> Option<f64> {
        self.all_delays()
            .try_fold(0.0_f64, |m, d| d.sup_lag().map(|l| m.max(l)))
    }

    /// Smallest strictly positive lag, if any.
    pub fn min_positive_lag(&self) -> Option<f64> {
        self.all_delays()
            .map(|d| d.inf_lag(self.t0))
            .filter(|l| *l > 0.0)
            .fold(None, |m: Option<f64>, l| Some(m.map_or(l, |m| m.min(l))))
    }

    /// Stable identifier: truncated SHA-256 of the canonical JSON.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("equation serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn tag(e: Error, path: &str) -> Error {
    match e {
        Error::InvalidExpr(m) => Error::InvalidExpr(format!("{path}: {m}")),
        other => other,
    }
}

/// One observation about well-posedness and criterion routing.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum Finding {
    InvalidParameter {
        message: String,
    },
    NeutralDelay {
        index: usize,
        sup_a: f64,
        delta: Option<f64>,
    },
    DelayLag {
        index: usize,
        sup_b: f64,
        inf_b: f64,
        tau: Option<f64>,
    },
    NeutralNormSum {
        total: f64,
        well_posed: bool,
    },
    NegativeDelayCoefficient {
        index: usize,
        inf_b: f64,
    },
    /// Unbounded (pantograph) delay: only the unbounded-delay criteria apply.
    UnboundedDelay {
        term: String,
    },
    KernelMass {
        sup_b: f64,
        inf_b: f64,
        tau: Option<f64>,
    },
}

impl Finding {
    /// Findings that make every criterion inapplicable.
    pub fn is_blocking(&self) -> bool {
        matches!(
            self,
            Finding::InvalidParameter { .. } | Finding::NeutralNormSum { well_posed: false, .. }
        )
    }
}

/// Well-posedness and routing report. Never fails.
pub fn validate(eq: &NeutralEquation) -> Vec<Finding> {
    let mut out = Vec::new();
    if let Err(e) = eq.check_parameters() {
        out.push(Finding::InvalidParameter { message: e.to_string() });
    }
    let t0 = eq.t0;
    for (index, n) in eq.neutral.iter().enumerate() {
        out.push(Finding::NeutralDelay {
            index,
            sup_a: n.a.sup_norm(t0).value,
            delta: n.g.sup_lag(),
        });
        if !n.g.is_bounded() {
            out.push(Finding::UnboundedDelay {
                term: format!("neutral[{index}]"),
            });
        }
    }
    let total = eq.neutral_norm_sum();
    out.push(Finding::NeutralNormSum {
        total,
        well_posed: total < 1.0,
    });
    for (index, d) in eq.delay.iter().enumerate() {
        let inf_b = d.b.inf_bound(t0).value;
        out.push(Finding::DelayLag {
            index,
            sup_b: d.b.sup_bound(t0).value,
            inf_b,
            tau: d.h.sup_lag(),
        });
        if inf_b < 0.0 {
            out.push(Finding::NegativeDelayCoefficient { index, inf_b });
        }
        if !d.h.is_bounded() {
            out.push(Finding::UnboundedDelay {
                term: format!("delay[{index}]"),
            });
        }
    }
    if let Some(k) = &eq.kernel {
        let ib = k.induced_b(t0);
        out.push(Finding::KernelMass {
            sup_b: ib.sup.value,
            inf_b: ib.inf.value,
            tau: k.window().sup_lag(),
        });
        if !k.window().is_bounded() {
            out.push(Finding::UnboundedDelay { term: "kernel".into() });
        }
    }
    out
}

/// Contents of an equation spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationFile {
    pub t0: f64,
    #[serde(default)]
    pub neutral: Vec<NeutralTerm>,
    #[serde(default)]
    pub delay: Vec<DelayTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Kernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<HistorySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<Coefficient>,
}

impl EquationFile {
    /// Parses a spec file. Syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    /// Parses and checks parameter invariants.
    pub fn load(text: &str) -> Result<Self> {
        let file = Self::from_json(text)?;
        file.equation()
            .check_parameters()
            .map_err(|e| Error::Spec(e.to_string()))?;
        if let Some(h) = &file.history {
            h.phi.validate().map_err(|e| Error::Spec(format!("history.phi: {e}")))?;
            h.psi.validate().map_err(|e| Error::Spec(format!("history.psi: {e}")))?;
        }
        if let Some(f) = &file.forcing {
            f.validate().map_err(|e| Error::Spec(format!("forcing: {e}")))?;
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn equation(&self) -> NeutralEquation {
        NeutralEquation {
            t0: self.t0,
            neutral: self.neutral.clone(),
            delay: self.delay.clone(),
            kernel: self.kernel.clone(),
        }
    }

    pub fn history(&self) -> HistorySpec {
        self.history.clone().unwrap_or_default()
    }

    pub fn from_equation(eq: &NeutralEquation) -> Self {
        EquationFile {
            t0: eq.t0,
            neutral: eq.neutral.clone(),
            delay: eq.delay.clone(),
            kernel: eq.kernel.clone(),
            history: None,
            forcing: None,
        }
    }

    pub fn set_equation(&mut self, eq: NeutralEquation) {
        self.t0 = eq.t0;
        self.neutral = eq.neutral;
        self.delay = eq.delay;
        self.kernel = eq.kernel;
    }
}
