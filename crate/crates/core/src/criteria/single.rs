//! Criteria built on one (possibly aggregated) delay term: the two main
//! theorems, their corollaries, and the reductions of several neutral terms,
//! several delay terms and a distributed term to that shape.

use std::f64::consts::E;

use super::{Branch, CriterionId, CriterionVerdict, Witness, Q};
use crate::equation::{NeutralEquation, NeutralTerm};
use crate::error::Error;
use crate::funcmodel::{ratio_sup_norm, sup_window_integral, Coefficient, Delay};

const INV_E: f64 = 1.0 / E;

/// Norms entering the main theorems for `x' - sum a_k x'(g_k) + b x(h) = 0`.
#[derive(Debug, Clone)]
pub(crate) struct Core {
    pub a_norms: Vec<Q>,
    pub a_over_b: Vec<Q>,
    pub b_sup: Q,
    pub b_inf: Q,
    /// Sup of `t - h(t)`.
    pub tau: f64,
    /// Inf of `t - h(t)`.
    pub inf_lag: f64,
    /// Sup over t of the integral of b over `[h(t), t]`.
    pub window: Q,
    pub b_const: Option<f64>,
}

impl Core {
    pub fn from_terms(t0: f64, neutral: &[NeutralTerm], b: &Coefficient, h: &Delay) -> Result<Core, String> {
        for (k, n) in neutral.iter().enumerate() {
            if !n.g.is_bounded() {
                return Err(format!("neutral delay {k} is unbounded"));
            }
        }
        let tau = h.sup_lag().ok_or("delay in the x(h(t)) term is unbounded")?;
        let b_inf = b.inf_bound(t0);
        if b_inf.value < 0.0 {
            return Err(format!("b takes negative values (inf b = {})", b_inf.value));
        }
        let window = sup_window_integral(b, h, t0).map_err(|e| e.to_string())?;
        let a_over_b = neutral
            .iter()
            .map(|n| match ratio_sup_norm(&n.a, b, t0) {
                Ok(c) => Ok(Q::from(c)),
                Err(Error::UnboundedRatio) => Ok(Q::exact(f64::INFINITY)),
                Err(e) => Err(e.to_string()),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Core {
            a_norms: neutral.iter().map(|n| n.a.sup_norm(t0).into()).collect(),
            a_over_b,
            b_sup: b.sup_bound(t0).into(),
            b_inf: b_inf.into(),
            tau,
            inf_lag: h.inf_lag(t0),
            window: window.into(),
            b_const: b.as_constant(),
        })
    }

    pub fn a_norm(&self) -> Q {
        Q::sum(self.a_norms.iter().copied())
    }

    pub fn a_over_b_sum(&self) -> Q {
        Q::sum(self.a_over_b.iter().copied())
    }

    fn b_positive(&self) -> Witness {
        Witness::lt("0 < inf b", Q::exact(0.0), self.b_inf)
    }

    pub fn theorem1(&self) -> Branch {
        let lhs = self.a_norm() + self.b_sup * self.a_over_b_sum();
        Branch::new(
            "thm1",
            vec![
                self.b_positive(),
                Witness::le("sup int_{h(t)}^t b <= 1/e", self.window, Q::exact(INV_E)),
                Witness::lt("||a|| + ||b|| ||a/b|| < 1", lhs, Q::exact(1.0)),
            ],
        )
    }

    /// Branch (a) with `b0 = min(b, 1/(tau e))` evaluated in closed form:
    /// `||a/b0|| = max(||a/b||, ||a|| tau e)` and `||(b - b0)/b0|| = (||b|| tau e - 1)^+`.
    pub fn theorem2_a(&self) -> Branch {
        let te = self.tau * E;
        let a_over_b0 = Q::sum(self.a_norms.iter().zip(&self.a_over_b).map(|(a, ab)| ab.max(*a * te)));
        let lhs = a_over_b0 * self.b_sup / (1.0 - self.a_norm()) + (self.b_sup * te - 1.0).pos();
        Branch::new(
            "thm2(a)",
            vec![
                self.b_positive(),
                Witness::lt("||a/b0|| ||b|| / (1 - ||a||) + ||(b - b0)/b0|| < 1", lhs, Q::exact(1.0)),
            ],
        )
    }

    /// Branch (b); the positive part norm is exact since the lag range is known.
    pub fn theorem2_b(&self) -> Branch {
        let shift = (self.tau - 1.0 / (self.b_sup * E)).pos();
        let lhs = self.b_sup * (self.a_over_b_sum() + shift);
        Branch::new(
            "thm2(b)",
            vec![
                self.b_positive(),
                Witness::lt(
                    "||b|| (||a/b|| + ||(t - h(t) - 1/(||b|| e))^+||) < 1 - ||a||",
                    lhs,
                    1.0 - self.a_norm(),
                ),
            ],
        )
    }

    pub fn theorems_1_2(&self) -> Vec<Branch> {
        vec![self.theorem1(), self.theorem2_a(), self.theorem2_b()]
    }
}

/// Equation with at most one neutral term and exactly one delay term.
fn single_core(eq: &NeutralEquation, allow_many_neutral: bool) -> Result<Core, String> {
    if eq.kernel.is_some() {
        return Err("equation has a distributed term".into());
    }
    if eq.delay.len() != 1 {
        return Err(format!("needs exactly one delay term, found {}", eq.delay.len()));
    }
    if !allow_many_neutral && eq.neutral.len() > 1 {
        return Err(format!("needs at most one neutral term, found {}", eq.neutral.len()));
    }
    let d = &eq.delay[0];
    Core::from_terms(eq.t0, &eq.neutral, &d.b, &d.h)
}

pub fn check_theorem1(eq: &NeutralEquation) -> CriterionVerdict {
    match single_core(eq, false) {
        Ok(core) => CriterionVerdict::from_branches(CriterionId::Thm1, vec![core.theorem1()]),
        Err(why) => CriterionVerdict::not_applicable(CriterionId::Thm1, why),
    }
}

pub fn check_theorem2(eq: &NeutralEquation) -> CriterionVerdict {
    match single_core(eq, false) {
        Ok(core) => CriterionVerdict::from_branches(CriterionId::Thm2, vec![core.theorem2_a(), core.theorem2_b()]),
        Err(why) => CriterionVerdict::not_applicable(CriterionId::Thm2, why),
    }
}

/// Several neutral terms: the main theorems with `||a||` replaced by the sum
/// of the neutral norms (and `||a/b||` by the sum of the ratios).
pub fn check_theorem3(eq: &NeutralEquation) -> CriterionVerdict {
    match single_core(eq, true) {
        Ok(core) => CriterionVerdict::from_branches(CriterionId::Thm3, core.theorems_1_2()),
        Err(why) => CriterionVerdict::not_applicable(CriterionId::Thm3, why),
    }
}

/// The five corollaries of the main theorems for one neutral and one delay term.
pub fn check_corollaries_basic(eq: &NeutralEquation) -> Vec<CriterionVerdict> {
    use CriterionId::*;
    let ids = [Cor1, Cor2aA, Cor2aB, Cor2bA, Cor2bB];
    let core = match single_core(eq, false) {
        Ok(c) => c,
        Err(why) => {
            return ids
                .iter()
                .map(|id| CriterionVerdict::not_applicable(*id, why.clone()))
                .collect()
        }
    };
    let a = core.a_norm();
    let tau = core.tau;
    let one = Q::exact(1.0);
    let inv_e = Q::exact(INV_E);

    let cor2a_a = CriterionVerdict::from_branches(
        Cor2aA,
        vec![Branch::new(
            "cor2a(a)",
            vec![
                Witness::le("1/(tau e) <= inf b", Q::exact(1.0 / (tau * E)), core.b_inf),
                Witness::lt("tau ||b|| < (2/e)(1 - ||a||)", core.b_sup * tau, (one - a) * (2.0 / E)),
            ],
        )],
    );
    let cor2a_b = CriterionVerdict::from_branches(
        Cor2aB,
        vec![Branch::new(
            "cor2a(b)",
            vec![
                core.b_positive(),
                Witness::le(
                    "1/(||b|| e) <= inf (t - h(t))",
                    1.0 / (core.b_sup * E),
                    Q::exact(core.inf_lag),
                ),
                Witness::lt(
                    "||a/b|| ||b|| + tau ||b|| < 1 + 1/e - ||a||",
                    core.a_over_b_sum() * core.b_sup + core.b_sup * tau,
                    one + INV_E - a,
                ),
            ],
        )],
    );

    let Some(b) = core.b_const.filter(|b| *b > 0.0) else {
        let why = "b is not a positive constant";
        return vec![
            CriterionVerdict::not_applicable(Cor1, why),
            cor2a_a,
            cor2a_b,
            CriterionVerdict::not_applicable(Cor2bA, why),
            CriterionVerdict::not_applicable(Cor2bB, why),
        ];
    };
    let bt = Q::exact(b * tau);
    let cor1 = CriterionVerdict::from_branches(
        Cor1,
        vec![Branch::new(
            "cor1",
            vec![
                Witness::le("b tau <= 1/e", bt, inv_e),
                Witness::lt("||a|| < 1/2", a, Q::exact(0.5)),
            ],
        )],
    );
    let cor2b_a = CriterionVerdict::from_branches(
        Cor2bA,
        vec![Branch::new(
            "cor2b(A)",
            vec![
                Witness::le("1/e <= b tau", inv_e, bt),
                Witness::lt("b tau < (2/e)(1 - ||a||)", bt, (one - a) * (2.0 / E)),
            ],
        )],
    );
    let cor2b_b = CriterionVerdict::from_branches(
        Cor2bB,
        vec![Branch::new(
            "cor2b(B)",
            vec![
                Witness::le("1/e <= b inf (t - h(t))", inv_e, Q::exact(b * core.inf_lag)),
                Witness::lt("b tau < 1 + 1/e - 2||a||", bt, one + INV_E - a * 2.0),
            ],
        )],
    );
    vec![cor1, cor2a_a, cor2a_b, cor2b_a, cor2b_b]
}

/// Several delay terms folded into `b = sum b_k` with the worst delay.
pub fn check_theorem4(eq: &NeutralEquation) -> CriterionVerdict {
    let id = CriterionId::Thm4;
    match theorem4_core(eq) {
        Ok((core, note)) => {
            let v = CriterionVerdict::from_branches(id, core.theorems_1_2());
            match note {
                Some(n) => v.with_note(n),
                None => v,
            }
        }
        Err(why) => CriterionVerdict::not_applicable(id, why),
    }
}

fn theorem4_core(eq: &NeutralEquation) -> Result<(Core, Option<String>), String> {
    if eq.kernel.is_some() {
        return Err("equation has a distributed term".into());
    }
    if eq.neutral.len() > 1 {
        return Err(format!("needs at most one neutral term, found {}", eq.neutral.len()));
    }
    match eq.delay.len() {
        0 => return Err("needs at least one delay term".into()),
        1 => return single_core(eq, false).map(|c| (c, None)),
        _ => {}
    }
    let t0 = eq.t0;
    let mut tau_bar = 0.0_f64;
    let mut inf_lag = f64::INFINITY;
    for (k, d) in eq.delay.iter().enumerate() {
        let lag = d.h.sup_lag().ok_or(format!("delay {k} is unbounded"))?;
        tau_bar = tau_bar.max(lag);
        inf_lag = inf_lag.min(d.h.inf_lag(t0));
        if d.b.inf_bound(t0).value < 0.0 {
            return Err(format!("b_{k} takes negative values"));
        }
    }
    for (k, n) in eq.neutral.iter().enumerate() {
        if !n.g.is_bounded() {
            return Err(format!("neutral delay {k} is unbounded"));
        }
    }
    let constants: Option<Vec<f64>> = eq.delay.iter().map(|d| d.b.as_constant()).collect();
    if let Some(cs) = constants {
        let total: f64 = cs.iter().sum();
        let b = Coefficient::constant(total);
        let mut core = Core::from_terms(t0, &eq.neutral, &b, &Delay::lag_of(tau_bar))?;
        core.inf_lag = inf_lag;
        return Ok((core, None));
    }
    // Time-varying coefficients: sums of bounds, valid but possibly loose.
    let b_sup = Q::sum(eq.delay.iter().map(|d| Q::from(d.b.sup_bound(t0)))).loose();
    let b_inf = Q::sum(eq.delay.iter().map(|d| Q::from(d.b.inf_bound(t0)))).loose();
    let mut window = Q::exact(0.0);
    for d in &eq.delay {
        let w = sup_window_integral(&d.b, &Delay::lag_of(tau_bar), t0).map_err(|e| e.to_string())?;
        window = window + Q::from(w);
    }
    let a_norms: Vec<Q> = eq.neutral.iter().map(|n| n.a.sup_norm(t0).into()).collect();
    let a_over_b = a_norms
        .iter()
        .map(|a| if a.v == 0.0 { *a } else { (*a / b_inf).loose() })
        .collect();
    Ok((
        Core {
            a_norms,
            a_over_b,
            b_sup,
            b_inf,
            tau: tau_bar,
            inf_lag,
            window: window.loose(),
            b_const: None,
        },
        Some("sum of time-varying b_k bounded termwise".into()),
    ))
}

/// Distributed term `int_{h(t)}^t K(t,s) x(s) ds`: the main theorems applied
/// to the induced coefficient `b(t) = int_{h(t)}^t K(t,s) ds` with the window
/// edge `h` and its largest lag as delay bound.
pub fn check_theorem7_distributed(eq: &NeutralEquation) -> CriterionVerdict {
    let id = CriterionId::Thm7;
    let Some(kernel) = &eq.kernel else {
        return CriterionVerdict::not_applicable(id, "no distributed term");
    };
    if !eq.delay.is_empty() {
        return CriterionVerdict::not_applicable(
            id,
            "distributed term mixed with point delays (use the subset theorems)",
        );
    }
    if eq.neutral.len() > 1 {
        return CriterionVerdict::not_applicable(id, "needs at most one neutral term");
    }
    let h = kernel.window();
    let Some(tau) = h.sup_lag() else {
        return CriterionVerdict::not_applicable(id, "kernel window is unbounded");
    };
    let ib = kernel.induced_b(eq.t0);
    let core = match &ib.coefficient {
        Some(b) => Core::from_terms(eq.t0, &eq.neutral, b, h),
        None => {
            if let Some(k) = eq.neutral.iter().position(|n| !n.g.is_bounded()) {
                return CriterionVerdict::not_applicable(id, format!("neutral delay {k} is unbounded"));
            }
            let b_inf = Q::from(ib.inf);
            let a_norms: Vec<Q> = eq.neutral.iter().map(|n| n.a.sup_norm(eq.t0).into()).collect();
            let a_over_b = a_norms
                .iter()
                .map(|a| if a.v == 0.0 { *a } else { (*a / b_inf).loose() })
                .collect();
            Ok(Core {
                a_norms,
                a_over_b,
                b_sup: ib.sup.into(),
                b_inf,
                tau,
                inf_lag: h.inf_lag(eq.t0),
                window: (Q::from(ib.sup) * tau).loose(),
                b_const: None,
            })
        }
    };
    match core {
        Ok(core) => CriterionVerdict::from_branches(id, core.theorems_1_2()).with_note(format!(
            "induced b in [{}, {}], delay bound tau = {tau}",
            ib.inf.value, ib.sup.value
        )),
        Err(why) => CriterionVerdict::not_applicable(id, why),
    }
}
