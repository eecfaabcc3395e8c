//! Several delay terms handled by splitting them into a dominant group `J`
//! and a remainder, over every non-empty `J`.

use std::f64::consts::E;

use super::{Branch, CriterionId, CriterionVerdict, Verdict, Witness, Q};
use crate::equation::NeutralEquation;
use crate::error::Error;
use crate::funcmodel::{ratio_sup_norm, Coefficient};

/// Largest number of delay terms for which all subsets are enumerated.
pub const MAX_SUBSET_TERMS: usize = 16;

struct Term {
    coef: Option<Coefficient>,
    sup: Q,
    inf: Q,
    lag_lo: f64,
    lag_hi: f64,
}

struct Setup {
    t0: f64,
    a: Option<Coefficient>,
    a_norm: Q,
    terms: Vec<Term>,
    /// `sum_k ||b_k||` over all terms.
    b_total: Q,
    note: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Shift {
    /// Lag bounded by its sup.
    Lag,
    /// `||t - h_k(t) - 1/(B e)||`.
    Centered,
}

impl Setup {
    fn new(eq: &NeutralEquation) -> Result<Setup, String> {
        if eq.neutral.len() > 1 {
            return Err(format!("needs at most one neutral term, found {}", eq.neutral.len()));
        }
        if let Some(n) = eq.neutral.first() {
            if !n.g.is_bounded() {
                return Err("neutral delay is unbounded".into());
            }
        }
        let t0 = eq.t0;
        let mut terms = Vec::with_capacity(eq.delay.len() + 1);
        for (k, d) in eq.delay.iter().enumerate() {
            let lag_hi = d.h.sup_lag().ok_or(format!("delay {k} is unbounded"))?;
            let inf = d.b.inf_bound(t0);
            if inf.value < 0.0 {
                return Err(format!("b_{k} takes negative values"));
            }
            terms.push(Term {
                coef: Some(d.b.clone()),
                sup: d.b.sup_bound(t0).into(),
                inf: inf.into(),
                lag_lo: d.h.inf_lag(t0),
                lag_hi,
            });
        }
        let mut note = None;
        if let Some(k) = &eq.kernel {
            // The distributed term acts as b(t) x(h0(t)) with h0 somewhere in [h(t), t].
            let lag_hi = k.window().sup_lag().ok_or("kernel window is unbounded")?;
            let ib = k.induced_b(t0);
            terms.push(Term {
                coef: ib.coefficient.clone(),
                sup: ib.sup.into(),
                inf: ib.inf.into(),
                lag_lo: 0.0,
                lag_hi,
            });
            note = Some(format!(
                "distributed term enters as term {} with lag in [0, {lag_hi}]",
                terms.len() - 1
            ));
        }
        if terms.is_empty() {
            return Err("needs at least one delay term".into());
        }
        if terms.len() > MAX_SUBSET_TERMS {
            return Err(format!(
                "{} delay terms exceed the subset limit {MAX_SUBSET_TERMS}; use cor4/cor6 (J = all) or cor5/cor7 (single term)",
                terms.len()
            ));
        }
        let b_total = Q::sum(terms.iter().map(|t| t.sup));
        let a = eq.neutral.first().map(|n| n.a.clone());
        let a_norm = a.as_ref().map_or(Q::exact(0.0), |a| a.sup_norm(t0).into());
        Ok(Setup {
            t0,
            a,
            a_norm,
            terms,
            b_total,
            note,
        })
    }

    fn all(&self) -> u32 {
        (1u32 << self.terms.len()) - 1
    }

    fn members(&self, mask: u32) -> impl Iterator<Item = usize> + '_ {
        (0..self.terms.len()).filter(move |k| mask & (1 << k) != 0)
    }

    fn inf_sum(&self, mask: u32) -> Q {
        let q = Q::sum(self.members(mask).map(|k| self.terms[k].inf));
        if mask.count_ones() == 1 || self.constant_group(mask) {
            q
        } else {
            q.loose()
        }
    }

    fn constant_group(&self, mask: u32) -> bool {
        self.members(mask)
            .all(|k| self.terms[k].coef.as_ref().and_then(Coefficient::as_constant).is_some())
    }

    /// `||num / sum_J b_k||`.
    fn ratio(&self, num: Option<&Coefficient>, num_sup: Q, mask: u32) -> Q {
        if num_sup.v == 0.0 {
            return Q::exact(0.0);
        }
        if mask.count_ones() == 1 {
            let i = mask.trailing_zeros() as usize;
            if let (Some(n), Some(d)) = (num, &self.terms[i].coef) {
                return match ratio_sup_norm(n, d, self.t0) {
                    Ok(c) => c.into(),
                    Err(Error::UnboundedRatio) => Q::exact(f64::INFINITY),
                    Err(_) => (num_sup / self.terms[i].inf).loose(),
                };
            }
        }
        let num_const = num.and_then(Coefficient::as_constant);
        if num_const.is_some() && self.constant_group(mask) {
            return num_sup / self.inf_sum(mask);
        }
        (num_sup / self.inf_sum(mask)).loose()
    }

    fn term_ratio(&self, k: usize, mask: u32) -> Q {
        let r = self.ratio(self.terms[k].coef.as_ref(), self.terms[k].sup, mask);
        if mask & (1 << k) != 0 {
            // b_k <= sum_J b_j when every b_j >= 0.
            r.min(Q::exact(1.0))
        } else {
            r
        }
    }

    fn shift_norm(&self, k: usize, shift: Shift, big_b: Q) -> Q {
        let t = &self.terms[k];
        match shift {
            Shift::Lag => Q::exact(t.lag_hi),
            Shift::Centered => {
                let c = 1.0 / (big_b * E);
                (t.lag_hi - c).map(f64::abs).max((t.lag_lo - c).map(f64::abs))
            }
        }
    }

    /// The subset inequality for a fixed `J`.
    fn branch(&self, mask: u32, shift: Shift) -> Branch {
        let big_b = Q::sum(self.members(mask).map(|k| self.terms[k].sup));
        let a_over_b = self.ratio(self.a.as_ref(), self.a_norm, mask);
        let inner = a_over_b
            + Q::sum(
                self.members(mask)
                    .map(|k| self.shift_norm(k, shift, big_b) * self.term_ratio(k, mask)),
            );
        let rest = Q::sum(
            (0..self.terms.len())
                .filter(|k| mask & (1 << k) == 0)
                .map(|k| self.term_ratio(k, mask)),
        );
        let lhs = inner * self.b_total / (1.0 - self.a_norm) + rest;
        let label = match shift {
            Shift::Lag => "(||a/b_J|| + sum_J tau_k ||b_k/b_J||) sum ||b_k|| / (1 - ||a||) + sum_{not J} ||b_k/b_J|| < 1",
            Shift::Centered => "(||a/b_J|| + sum_J ||b_k/b_J|| ||t - h_k - 1/(Be)||) sum ||b_k|| / (1 - ||a||) + sum_{not J} ||b_k/b_J|| < 1",
        };
        Branch::new(
            subset_name(self, mask),
            vec![
                Witness::lt("0 < inf sum_J b_k", Q::exact(0.0), self.inf_sum(mask)),
                Witness::lt(label, lhs, Q::exact(1.0)),
            ],
        )
    }

    /// Corollary with every lag at least `1/(sum ||b_k|| e)`.
    fn cor8_branch(&self) -> Branch {
        let all = self.all();
        let c = 1.0 / (self.b_total * E);
        let mut ws = vec![Witness::lt("0 < inf sum b_k", Q::exact(0.0), self.inf_sum(all))];
        for (k, t) in self.terms.iter().enumerate() {
            ws.push(Witness::le(
                format!("1/(sum ||b_j|| e) <= inf (t - h_{k}(t))"),
                c,
                Q::exact(t.lag_lo),
            ));
        }
        let ratios: Vec<Q> = (0..self.terms.len()).map(|k| self.term_ratio(k, all)).collect();
        let inner = self.ratio(self.a.as_ref(), self.a_norm, all)
            + Q::sum(self.terms.iter().zip(&ratios).map(|(t, r)| *r * t.lag_hi));
        ws.push(Witness::lt(
            "(||a/b|| + sum tau_k ||b_k/b||) sum ||b_j|| < 1 + (1/e) sum ||b_k/b|| - ||a||",
            inner * self.b_total,
            1.0 + Q::sum(ratios.iter().copied()) / E - self.a_norm,
        ));
        Branch::new("J = all", ws)
    }
}

fn subset_name(setup: &Setup, mask: u32) -> String {
    let idx: Vec<String> = setup.members(mask).map(|k| k.to_string()).collect();
    format!("J = {{{}}}", idx.join(", "))
}

/// Picks the most convincing branch: a satisfied one with the largest slack,
/// otherwise the one that comes closest.
fn best(branches: impl Iterator<Item = (u32, Branch)>) -> Option<(u32, Branch, Verdict)> {
    let mut out: Option<(u32, Branch, Verdict, f64)> = None;
    for (mask, b) in branches {
        let v = b.verdict();
        let m = b.margin();
        let better = match &out {
            None => true,
            Some((_, _, bv, bm)) => (v.rank(), -m) < (bv.rank(), -bm),
        };
        if better {
            out = Some((mask, b, v, m));
        }
    }
    out.map(|(mask, b, v, _)| (mask, b, v))
}

fn verdict_for(id: CriterionId, setup: &Setup, mask: u32, branch: Branch) -> CriterionVerdict {
    let mut v = CriterionVerdict::from_branches(id, vec![branch]);
    v.subset = Some(setup.members(mask).collect());
    if let Some(n) = &setup.note {
        v.note = Some(n.clone());
    }
    v
}

fn search(id: CriterionId, setup: &Setup, masks: impl Iterator<Item = u32>, shift: Shift) -> CriterionVerdict {
    let (mask, branch, _) = best(masks.map(|m| (m, setup.branch(m, shift)))).expect("at least one subset");
    verdict_for(id, setup, mask, branch)
}

fn singletons(setup: &Setup) -> impl Iterator<Item = u32> {
    (0..setup.terms.len()).map(|k| 1u32 << k)
}

/// Thm5 over all subsets, plus J = all and the best singleton.
pub fn check_theorem5_family(eq: &NeutralEquation) -> Vec<CriterionVerdict> {
    use CriterionId::*;
    let setup = match Setup::new(eq) {
        Ok(s) => s,
        Err(why) => {
            return [Thm5, Cor4, Cor5]
                .map(|id| CriterionVerdict::not_applicable(id, why.clone()))
                .to_vec()
        }
    };
    let all = setup.all();
    vec![
        search(Thm5, &setup, 1..=all, Shift::Lag),
        search(Cor4, &setup, std::iter::once(all), Shift::Lag),
        search(Cor5, &setup, singletons(&setup), Shift::Lag),
    ]
}

/// Thm6 over all subsets, plus its corollaries.
pub fn check_theorem6_family(eq: &NeutralEquation) -> Vec<CriterionVerdict> {
    use CriterionId::*;
    let setup = match Setup::new(eq) {
        Ok(s) => s,
        Err(why) => {
            return [Thm6, Cor6, Cor7, Cor8]
                .map(|id| CriterionVerdict::not_applicable(id, why.clone()))
                .to_vec()
        }
    };
    let all = setup.all();
    vec![
        search(Thm6, &setup, 1..=all, Shift::Centered),
        search(Cor6, &setup, std::iter::once(all), Shift::Centered),
        search(Cor7, &setup, singletons(&setup), Shift::Centered),
        verdict_for(Cor8, &setup, all, setup.cor8_branch()),
    ]
}

pub fn check_theorem5(eq: &NeutralEquation) -> CriterionVerdict {
    check_theorem5_family(eq).swap_remove(0)
}

pub fn check_theorem6(eq: &NeutralEquation) -> CriterionVerdict {
    check_theorem6_family(eq).swap_remove(0)
}

fn fixed(eq: &NeutralEquation, id: CriterionId, subset: &[usize], shift: Shift) -> CriterionVerdict {
    let setup = match Setup::new(eq) {
        Ok(s) => s,
        Err(why) => return CriterionVerdict::not_applicable(id, why),
    };
    let mut mask = 0u32;
    for &k in subset {
        if k >= setup.terms.len() {
            return CriterionVerdict::not_applicable(id, format!("subset index {k} out of range"));
        }
        mask |= 1 << k;
    }
    if mask == 0 {
        return CriterionVerdict::not_applicable(id, "subset must be non-empty");
    }
    verdict_for(id, &setup, mask, setup.branch(mask, shift))
}

/// Thm5 for one given index set (0-based).
pub fn check_theorem5_subset(eq: &NeutralEquation, subset: &[usize]) -> CriterionVerdict {
    fixed(eq, CriterionId::Thm5, subset, Shift::Lag)
}

/// Thm6 for one given index set (0-based).
pub fn check_theorem6_subset(eq: &NeutralEquation, subset: &[usize]) -> CriterionVerdict {
    fixed(eq, CriterionId::Thm6, subset, Shift::Centered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equation::Kernel;
    use crate::funcmodel::Delay;

    fn eq(a: f64, terms: &[(f64, f64)]) -> NeutralEquation {
        let mut e = NeutralEquation::new(0.0).with_neutral(Coefficient::constant(a), Delay::lag_of(1.0));
        for &(b, tau) in terms {
            e = e.with_delay(Coefficient::constant(b), Delay::lag_of(tau));
        }
        e
    }

    fn main_lhs(v: &CriterionVerdict) -> f64 {
        v.witnesses.last().unwrap().lhs
    }

    #[test]
    fn theorem5_examples() {
        let v = check_theorem5(&eq(0.2, &[(0.5, 0.5)]));
        assert_eq!(v.verdict, Verdict::Satisfied);
        assert!((main_lhs(&v) - 0.5625).abs() < 1e-12);

        let v = check_theorem5(&eq(0.2, &[(0.5, 0.5), (0.05, 3.0)]));
        assert_eq!(v.verdict, Verdict::Satisfied);
        assert_eq!(v.subset, Some(vec![0]));
        assert!((main_lhs(&v) - 0.71875).abs() < 1e-12);

        let v = check_theorem5(&eq(0.2, &[(0.5, 2.0)]));
        assert_eq!(v.verdict, Verdict::Violated);
        assert!((main_lhs(&v) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn theorem6_improves_theorem5() {
        let e = eq(0.2, &[(0.5, 1.2)]);
        let v6 = check_theorem6(&e);
        assert_eq!(v6.verdict, Verdict::Satisfied);
        let expected = (0.4 + (1.2 - 2.0 / E)) * 0.5 / 0.8;
        assert!((main_lhs(&v6) - expected).abs() < 1e-12);
        assert!((expected - 0.54).abs() < 1e-2);
        let v5 = check_theorem5(&e);
        assert_eq!(v5.verdict, Verdict::Violated);
        assert!((main_lhs(&v5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corollary8_example() {
        let vs = check_theorem6_family(&eq(0.1, &[(0.3, 2.0), (0.2, 2.0)]));
        let v = vs.iter().find(|v| v.criterion == CriterionId::Cor8).unwrap();
        assert_eq!(v.verdict, Verdict::Satisfied);
        let w = v.witnesses.last().unwrap();
        assert!((w.lhs - 1.1).abs() < 1e-12);
        assert!((w.rhs - (1.0 + 1.0 / E - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn centered_shift_vanishes_at_the_critical_lag() {
        let b: f64 = 0.5;
        let e = eq(0.2, &[(b, 1.0 / (b * E))]);
        let v = check_theorem6(&e);
        assert!((main_lhs(&v) - 0.4 * 0.5 / 0.8).abs() < 1e-12);
    }

    #[test]
    fn fixed_subset_reproduces_the_search_witness() {
        let e = eq(0.2, &[(0.5, 0.5), (0.05, 3.0), (0.1, 0.2)]);
        let v = check_theorem5(&e);
        let again = check_theorem5_subset(&e, v.subset.as_ref().unwrap());
        assert_eq!(v.witnesses, again.witnesses);
        assert_eq!(v.verdict, again.verdict);
    }

    #[test]
    fn named_corollaries_are_specializations() {
        let e = eq(0.2, &[(0.5, 0.5), (0.05, 3.0)]);
        let vs = check_theorem5_family(&e);
        assert_eq!(vs[1].criterion, CriterionId::Cor4);
        assert_eq!(vs[1].subset, Some(vec![0, 1]));
        assert_eq!(vs[2].criterion, CriterionId::Cor5);
        assert_eq!(vs[2].subset.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn too_many_terms_is_guarded() {
        let terms: Vec<(f64, f64)> = (0..17).map(|_| (0.01, 0.1)).collect();
        let v = check_theorem5(&eq(0.1, &terms));
        assert_eq!(v.verdict, Verdict::NotApplicable);
        assert!(v.note.unwrap().contains("cor4"));
    }

    #[test]
    fn kernel_is_a_pseudo_term() {
        let e = eq(0.1, &[(0.3, 0.5)]).with_kernel(Kernel::Uniform {
            c: 0.1,
            h: Delay::lag_of(1.0),
        });
        let v = check_theorem5(&e);
        assert_ne!(v.verdict, Verdict::NotApplicable);
        assert!(v.note.is_some());
    }
}
