//! Asymptotic stability for unbounded (pantograph-type) delays, obtained by
//! the time change `s = int_{t0}^t b`.

use std::f64::consts::E;

use super::{Branch, CriterionId, CriterionVerdict, Witness, Q};
use crate::equation::NeutralEquation;
use crate::funcmodel::{sup_window_integral, window_integral_range, Coefficient, Delay};

const INV_E: f64 = 1.0 / E;

/// `b` vanishes on a set of positive measure.
fn vanishes_on_interval(b: &Coefficient) -> bool {
    match b {
        Coefficient::Constant { c } | Coefficient::Reciprocal { c } => *c == 0.0,
        Coefficient::Sinusoid { c, amp, omega, .. } => *c == 0.0 && (*amp == 0.0 || *omega == 0.0),
        Coefficient::Piecewise { values, .. } => values.contains(&0.0),
    }
}

/// `||A||` for `A(t) = a(t) b(g(t)) / b(t)`.
fn a_tilde_norm(a: &Coefficient, g: &Delay, b: &Coefficient, t0: f64) -> Result<Q, String> {
    let a_norm = Q::from(a.sup_norm(t0));
    if a_norm.v == 0.0 || b.as_constant().is_some() {
        return Ok(a_norm);
    }
    match (b, g) {
        // b(mu t) / b(t) = 1/mu
        (Coefficient::Reciprocal { .. }, Delay::Proportional { lambda }) => Ok(a_norm / *lambda),
        _ => {
            let inf = b.inf_bound(t0).value;
            if inf <= 0.0 {
                return Err("A = a b(g) / b is unbounded (inf b = 0)".into());
            }
            Ok((a_norm * Q::from(b.sup_bound(t0)) / inf).loose())
        }
    }
}

pub fn check_theorem2a_unbounded(eq: &NeutralEquation) -> CriterionVerdict {
    let id = CriterionId::Thm2a;
    let na = |why: &str| CriterionVerdict::not_applicable(id, why);
    if eq.kernel.is_some() {
        return na("equation has a distributed term");
    }
    if eq.delay.len() != 1 || eq.neutral.len() > 1 {
        return na("needs one neutral term and one delay term");
    }
    if !eq.has_unbounded_delay() {
        return na("all delays are bounded; the bounded-delay theorems apply");
    }
    let t0 = eq.t0;
    let d = &eq.delay[0];
    let b = &d.b;
    if b.inf_bound(t0).value < 0.0 {
        return na("b takes negative values");
    }
    if vanishes_on_interval(b) {
        return na("b vanishes on a set of positive measure");
    }
    if !b.integral_diverges() {
        return na("integral of b over [t0, inf) is finite");
    }
    let a_tilde = match eq.neutral.first() {
        None => Q::exact(0.0),
        Some(n) => {
            match sup_window_integral(b, &n.g, t0) {
                Ok(w) if w.value.is_finite() => {}
                Ok(_) => return na("integral of b over [g(t), t] is unbounded"),
                Err(e) => return na(&e.to_string()),
            }
            match a_tilde_norm(&n.a, &n.g, b, t0) {
                Ok(q) => q,
                Err(why) => return na(&why),
            }
        }
    };
    let range = match window_integral_range(b, &d.h, t0) {
        Ok(r) => r,
        Err(e) => return na(&e.to_string()),
    };
    let (w_inf, w_sup) = (Q::from(range.inf), Q::from(range.sup));
    let inv_e = Q::exact(INV_E);
    let branches = vec![
        Branch::new(
            "(a)",
            vec![
                Witness::le("sup int_{h(t)}^t b <= 1/e", w_sup, inv_e),
                Witness::lt("||A|| < 1/2", a_tilde, Q::exact(0.5)),
            ],
        ),
        Branch::new(
            "(b)",
            vec![
                Witness::lt("1/e < inf int_{h(t)}^t b", inv_e, w_inf),
                Witness::lt(
                    "sup int_{h(t)}^t b < 1 + 1/e - 2||A||",
                    w_sup,
                    1.0 + INV_E - a_tilde * 2.0,
                ),
            ],
        ),
    ];
    CriterionVerdict::from_branches(id, branches)
}

/// `x' - a x'(mu t) + (b/t) x(lambda t) = 0` for `t >= t0 >= 1`, with the
/// neutral coefficient entering as `|a|`.
pub fn check_corollary3_pantograph(eq: &NeutralEquation) -> CriterionVerdict {
    let id = CriterionId::Cor3;
    let shape = || -> Option<(f64, f64, f64)> {
        if eq.kernel.is_some() || eq.neutral.len() != 1 || eq.delay.len() != 1 || eq.t0 < 1.0 {
            return None;
        }
        let n = &eq.neutral[0];
        let d = &eq.delay[0];
        let a = n.a.as_constant()?;
        let Delay::Proportional { .. } = n.g else {
            return None;
        };
        let (Coefficient::Reciprocal { c: b }, Delay::Proportional { lambda }) = (&d.b, &d.h) else {
            return None;
        };
        (*b > 0.0).then_some((a, *b, *lambda))
    };
    let Some((a, b, lambda)) = shape() else {
        return CriterionVerdict::not_applicable(
            id,
            "needs x' - a x'(mu t) + (b/t) x(lambda t) = 0 with constant a, b > 0 and t0 >= 1",
        );
    };
    let l = Q::exact(b * (1.0 / lambda).ln());
    let a_abs = Q::exact(a.abs());
    let inv_e = Q::exact(INV_E);
    CriterionVerdict::from_branches(
        id,
        vec![
            Branch::new(
                "(a)",
                vec![
                    Witness::le("b ln(1/lambda) <= 1/e", l, inv_e),
                    Witness::lt("|a| < 1/2", a_abs, Q::exact(0.5)),
                ],
            ),
            Branch::new(
                "(b)",
                vec![
                    Witness::lt("1/e < b ln(1/lambda)", inv_e, l),
                    Witness::lt("b ln(1/lambda) < 1 + 1/e - 2|a|", l, 1.0 + INV_E - a_abs * 2.0),
                ],
            ),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::Verdict;

    fn pantograph(a: f64, b: f64, lambda: f64, mu: f64) -> NeutralEquation {
        NeutralEquation::new(1.0)
            .with_neutral(Coefficient::constant(a), Delay::proportional(mu))
            .with_delay(Coefficient::reciprocal(b), Delay::proportional(lambda))
    }

    #[test]
    fn theorem2a_examples() {
        let lambda = (-INV_E).exp();
        let v = check_theorem2a_unbounded(&pantograph(0.3, 1.0, lambda, 0.8));
        assert_eq!(v.verdict, Verdict::Satisfied);
        assert_eq!(v.claim, crate::criteria::Claim::AsymptoticStability);
        let w = v.witness("(a): ||A||").unwrap();
        assert!((w.lhs - 0.375).abs() < 1e-15);
        assert!(w.exact);

        let v = check_theorem2a_unbounded(&pantograph(0.45, 1.0, lambda, 0.8));
        assert_eq!(v.verdict, Verdict::Violated);
        assert!((v.witness("(a): ||A||").unwrap().lhs - 0.5625).abs() < 1e-15);

        let bounded = NeutralEquation::constant(0.3, 1.0, 0.3, 1.0);
        assert_eq!(check_theorem2a_unbounded(&bounded).verdict, Verdict::NotApplicable);
    }

    #[test]
    fn theorem2a_needs_divergent_integral() {
        let eq =
            NeutralEquation::new(1.0).with_delay(Coefficient::sinusoid(0.0, 0.0, 1.0, 0.0), Delay::proportional(0.5));
        assert_eq!(check_theorem2a_unbounded(&eq).verdict, Verdict::NotApplicable);
    }

    #[test]
    fn corollary3_examples() {
        let v = check_corollary3_pantograph(&pantograph(0.4, 1.0, 0.7, 0.5));
        assert_eq!(v.verdict, Verdict::Satisfied);
        assert_eq!(v.branch.as_deref(), Some("(a)"));
        assert!((v.witnesses[0].lhs - 0.3567).abs() < 1e-4);

        let v = check_corollary3_pantograph(&pantograph(0.4, 2.0, 0.7, 0.5));
        assert_eq!(v.verdict, Verdict::Violated);
        let w = v.witness("(b): b ln(1/lambda) <").unwrap();
        assert!((w.lhs - 0.7133).abs() < 1e-4);
        assert!((w.rhs - 0.5679).abs() < 1e-4);

        let v = check_corollary3_pantograph(&pantograph(0.1, 2.0, 0.7, 0.5));
        assert_eq!(v.verdict, Verdict::Satisfied);
        assert_eq!(v.branch.as_deref(), Some("(b)"));
    }

    #[test]
    fn corollary3_needs_the_exact_shape() {
        let mut eq = pantograph(0.1, 2.0, 0.7, 0.5);
        eq.t0 = 0.5;
        assert_eq!(check_corollary3_pantograph(&eq).verdict, Verdict::NotApplicable);
        let eq = NeutralEquation::constant(0.1, 1.0, 0.2, 1.0);
        assert_eq!(check_corollary3_pantograph(&eq).verdict, Verdict::NotApplicable);
    }
}
