//! Sufficient stability conditions evaluated against a [`NeutralEquation`].
//!
//! Every criterion produces a [`CriterionVerdict`] listing the inequalities it
//! checked (hypotheses and the main condition) with both sides evaluated, so a
//! verdict can be audited without re-deriving the norms.

mod literature;
mod quantity;
mod sigma;
mod single;
mod subsets;
mod unbounded;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equation::NeutralEquation;
use crate::error::Error;

pub use literature::*;
pub use sigma::{char_root_positive, compute_sigma, sigma_grid, SIGMA_GRID_POINTS};
pub use single::*;
pub use subsets::*;
pub use unbounded::*;

pub(crate) use quantity::Q;

/// Tolerance for ties when both sides of an inequality are exact.
pub const EXACT_TIE: f64 = 1e-12;
/// Required margin when either side comes from sampling or numerics.
pub const INEXACT_TIE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CriterionId {
    #[serde(rename = "thm1")]
    Thm1,
    #[serde(rename = "thm2")]
    Thm2,
    #[serde(rename = "thm2a")]
    Thm2a,
    #[serde(rename = "thm3")]
    Thm3,
    #[serde(rename = "thm4")]
    Thm4,
    #[serde(rename = "thm5")]
    Thm5,
    #[serde(rename = "thm6")]
    Thm6,
    #[serde(rename = "thm7")]
    Thm7,
    #[serde(rename = "cor1")]
    Cor1,
    #[serde(rename = "cor2a-a")]
    Cor2aA,
    #[serde(rename = "cor2a-b")]
    Cor2aB,
    #[serde(rename = "cor2b-a")]
    Cor2bA,
    #[serde(rename = "cor2b-b")]
    Cor2bB,
    #[serde(rename = "cor3")]
    Cor3,
    #[serde(rename = "cor4")]
    Cor4,
    #[serde(rename = "cor5")]
    Cor5,
    #[serde(rename = "cor6")]
    Cor6,
    #[serde(rename = "cor7")]
    Cor7,
    #[serde(rename = "cor8")]
    Cor8,
    #[serde(rename = "p1")]
    P1,
    #[serde(rename = "p2")]
    P2,
    #[serde(rename = "p2a")]
    P2a,
    #[serde(rename = "p3")]
    P3,
    #[serde(rename = "p4")]
    P4,
    #[serde(rename = "p5")]
    P5,
    #[serde(rename = "p6")]
    P6,
    #[serde(rename = "p7")]
    P7,
    #[serde(rename = "p8")]
    P8,
    #[serde(rename = "p9")]
    P9,
    #[serde(rename = "c01")]
    C01,
    #[serde(rename = "c01star")]
    C01Star,
}

impl CriterionId {
    pub const ALL: [CriterionId; 31] = [
        CriterionId::Thm1,
        CriterionId::Thm2,
        CriterionId::Thm2a,
        CriterionId::Thm3,
        CriterionId::Thm4,
        CriterionId::Thm5,
        CriterionId::Thm6,
        CriterionId::Thm7,
        CriterionId::Cor1,
        CriterionId::Cor2aA,
        CriterionId::Cor2aB,
        CriterionId::Cor2bA,
        CriterionId::Cor2bB,
        CriterionId::Cor3,
        CriterionId::Cor4,
        CriterionId::Cor5,
        CriterionId::Cor6,
        CriterionId::Cor7,
        CriterionId::Cor8,
        CriterionId::P1,
        CriterionId::P2,
        CriterionId::P2a,
        CriterionId::P3,
        CriterionId::P4,
        CriterionId::P5,
        CriterionId::P6,
        CriterionId::P7,
        CriterionId::P8,
        CriterionId::P9,
        CriterionId::C01,
        CriterionId::C01Star,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CriterionId::Thm1 => "thm1",
            CriterionId::Thm2 => "thm2",
            CriterionId::Thm2a => "thm2a",
            CriterionId::Thm3 => "thm3",
            CriterionId::Thm4 => "thm4",
            CriterionId::Thm5 => "thm5",
            CriterionId::Thm6 => "thm6",
            CriterionId::Thm7 => "thm7",
            CriterionId::Cor1 => "cor1",
            CriterionId::Cor2aA => "cor2a-a",
            CriterionId::Cor2aB => "cor2a-b",
            CriterionId::Cor2bA => "cor2b-a",
            CriterionId::Cor2bB => "cor2b-b",
            CriterionId::Cor3 => "cor3",
            CriterionId::Cor4 => "cor4",
            CriterionId::Cor5 => "cor5",
            CriterionId::Cor6 => "cor6",
            CriterionId::Cor7 => "cor7",
            CriterionId::Cor8 => "cor8",
            CriterionId::P1 => "p1",
            CriterionId::P2 => "p2",
            CriterionId::P2a => "p2a",
            CriterionId::P3 => "p3",
            CriterionId::P4 => "p4",
            CriterionId::P5 => "p5",
            CriterionId::P6 => "p6",
            CriterionId::P7 => "p7",
            CriterionId::P8 => "p8",
            CriterionId::P9 => "p9",
            CriterionId::C01 => "c01",
            CriterionId::C01Star => "c01star",
        }
    }

    /// What a Satisfied verdict of this criterion establishes.
    pub fn claim(self) -> Claim {
        use CriterionId::*;
        match self {
            Thm2a | Cor3 | P2 | P2a | P5 => Claim::AsymptoticStability,
            P1 | P3 | P4 | P6 => Claim::SolutionsTendToZero,
            P7 => Claim::L2Stability,
            _ => Claim::ExponentialStability,
        }
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key = s.trim().to_ascii_lowercase();
        CriterionId::ALL
            .into_iter()
            .find(|id| id.as_str() == key)
            .ok_or_else(|| Error::UnknownCriterion(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied,
    Violated,
    NotApplicable,
    NumericUnknown,
}

impl Verdict {
    fn rank(self) -> u8 {
        match self {
            Verdict::Satisfied => 0,
            Verdict::NumericUnknown => 1,
            Verdict::Violated => 2,
            Verdict::NotApplicable => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Claim {
    ExponentialStability,
    AsymptoticStability,
    SolutionsTendToZero,
    L2Stability,
}

impl Claim {
    /// Lower is stronger.
    pub fn strength_rank(self) -> u8 {
        match self {
            Claim::ExponentialStability => 0,
            Claim::AsymptoticStability => 1,
            Claim::SolutionsTendToZero => 2,
            Claim::L2Stability => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
}

/// One evaluated inequality `lhs < rhs` or `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Both sides come from closed forms.
    pub exact: bool,
    pub relation: Relation,
    /// One side is a valid but possibly loose bound, so a failure is not conclusive.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub conservative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Check {
    Holds,
    Fails,
    Unknown,
}

impl Witness {
    pub(crate) fn lt(label: impl Into<String>, lhs: Q, rhs: Q) -> Self {
        Self::new(label, lhs, rhs, Relation::Lt)
    }

    pub(crate) fn le(label: impl Into<String>, lhs: Q, rhs: Q) -> Self {
        Self::new(label, lhs, rhs, Relation::Le)
    }

    fn new(label: impl Into<String>, lhs: Q, rhs: Q, relation: Relation) -> Self {
        Witness {
            label: label.into(),
            lhs: lhs.v,
            rhs: rhs.v,
            exact: lhs.exact && rhs.exact,
            relation,
            conservative: lhs.conservative || rhs.conservative,
        }
    }

    /// Signed slack `rhs - lhs`.
    pub fn margin(&self) -> f64 {
        if self.rhs == self.lhs {
            0.0
        } else {
            self.rhs - self.lhs
        }
    }

    pub(crate) fn check(&self) -> Check {
        let (l, r) = (self.lhs, self.rhs);
        if l.is_nan() || r.is_nan() {
            return Check::Unknown;
        }
        let outcome = if self.exact {
            let holds = match self.relation {
                Relation::Lt => l < r - EXACT_TIE,
                Relation::Le => l <= r + EXACT_TIE,
            };
            if holds {
                Check::Holds
            } else {
                Check::Fails
            }
        } else if l.is_finite() && r.is_finite() && (l - r).abs() <= INEXACT_TIE {
            Check::Unknown
        } else if l < r {
            Check::Holds
        } else {
            Check::Fails
        };
        if outcome == Check::Fails && self.conservative {
            Check::Unknown
        } else {
            outcome
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub criterion: CriterionId,
    pub verdict: Verdict,
    pub claim: Claim,
    pub witnesses: Vec<Witness>,
    /// Witnessing index set for the subset criteria (0-based).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Branch that fired, for criteria with alternative conditions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    /// Failing hypothesis for NotApplicable, or a remark on how the check was done.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A group of inequalities that must all hold.
#[derive(Debug, Clone)]
pub(crate) struct Branch {
    pub name: String,
    pub witnesses: Vec<Witness>,
}

impl Branch {
    pub fn new(name: impl Into<String>, witnesses: Vec<Witness>) -> Self {
        Branch {
            name: name.into(),
            witnesses,
        }
    }

    pub fn verdict(&self) -> Verdict {
        let checks: Vec<Check> = self.witnesses.iter().map(Witness::check).collect();
        if checks.iter().all(|c| *c == Check::Holds) {
            Verdict::Satisfied
        } else if checks.contains(&Check::Fails) {
            Verdict::Violated
        } else {
            Verdict::NumericUnknown
        }
    }

    /// Smallest slack over the branch; used to rank candidates.
    pub fn margin(&self) -> f64 {
        self.witnesses.iter().map(Witness::margin).fold(f64::INFINITY, f64::min)
    }
}

impl CriterionVerdict {
    pub fn not_applicable(id: CriterionId, reason: impl Into<String>) -> Self {
        CriterionVerdict {
            criterion: id,
            verdict: Verdict::NotApplicable,
            claim: id.claim(),
            witnesses: Vec::new(),
            subset: None,
            omega: None,
            branch: None,
            note: Some(reason.into()),
        }
    }

    /// Satisfied when some branch holds entirely.
    pub(crate) fn from_branches(id: CriterionId, branches: Vec<Branch>) -> Self {
        let verdicts: Vec<Verdict> = branches.iter().map(Branch::verdict).collect();
        let fired = verdicts.iter().position(|v| *v == Verdict::Satisfied);
        let verdict = if fired.is_some() {
            Verdict::Satisfied
        } else if verdicts.contains(&Verdict::NumericUnknown) {
            Verdict::NumericUnknown
        } else {
            Verdict::Violated
        };
        let labelled = branches.len() > 1;
        let branch = fired.map(|i| branches[i].name.clone());
        let witnesses = branches
            .into_iter()
            .flat_map(|b| {
                let name = b.name;
                b.witnesses.into_iter().map(move |mut w| {
                    if labelled {
                        w.label = format!("{name}: {}", w.label);
                    }
                    w
                })
            })
            .collect();
        CriterionVerdict {
            criterion: id,
            verdict,
            claim: id.claim(),
            witnesses,
            subset: None,
            omega: None,
            branch,
            note: None,
        }
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_satisfied(&self) -> bool {
        self.verdict == Verdict::Satisfied
    }

    pub fn witness(&self, label_fragment: &str) -> Option<&Witness> {
        self.witnesses.iter().find(|w| w.label.contains(label_fragment))
    }
}

/// Runs one criterion. Ill-posed equations give NotApplicable for every id.
pub fn evaluate(eq: &NeutralEquation, id: CriterionId) -> CriterionVerdict {
    if let Err(e) = eq.check_parameters() {
        return CriterionVerdict::not_applicable(id, format!("invalid parameters: {e}"));
    }
    let total = eq.neutral_norm_sum();
    if total >= 1.0 {
        return CriterionVerdict::not_applicable(id, format!("ill-posed: sum of sup |a_k| = {total} >= 1"));
    }
    use CriterionId::*;
    match id {
        Thm1 => check_theorem1(eq),
        Thm2 => check_theorem2(eq),
        Thm2a => check_theorem2a_unbounded(eq),
        Thm3 => check_theorem3(eq),
        Thm4 => check_theorem4(eq),
        Thm5 => check_theorem5(eq),
        Thm6 => check_theorem6(eq),
        Thm7 => check_theorem7_distributed(eq),
        Cor1 | Cor2aA | Cor2aB | Cor2bA | Cor2bB => check_corollaries_basic(eq)
            .into_iter()
            .find(|v| v.criterion == id)
            .expect("basic corollaries cover their ids"),
        Cor3 => check_corollary3_pantograph(eq),
        Cor4 | Cor5 => find(check_theorem5_family(eq), id),
        Cor6 | Cor7 | Cor8 => find(check_theorem6_family(eq), id),
        P1 | P2 | P2a | P3 | P4 | P5 | P6 | P7 | P8 | P9 | C01 | C01Star => check_literature(eq, id),
    }
}

fn find(vs: Vec<CriterionVerdict>, id: CriterionId) -> CriterionVerdict {
    vs.into_iter()
        .find(|v| v.criterion == id)
        .expect("family covers its ids")
}

/// Total order used for reports: strongest claim first, then Satisfied,
/// NumericUnknown, Violated, NotApplicable, then by criterion id.
pub fn report_order(x: &CriterionVerdict, y: &CriterionVerdict) -> Ordering {
    (x.claim.strength_rank(), x.verdict.rank(), x.criterion).cmp(&(
        y.claim.strength_rank(),
        y.verdict.rank(),
        y.criterion,
    ))
}

/// Every criterion on one equation, in [`report_order`].
pub fn evaluate_all(eq: &NeutralEquation) -> Vec<CriterionVerdict> {
    let mut out: Vec<CriterionVerdict> = CriterionId::ALL.par_iter().map(|id| evaluate(eq, *id)).collect();
    out.sort_by(report_order);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip_through_strings_and_json() {
        for id in CriterionId::ALL {
            assert_eq!(id.as_str().parse::<CriterionId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.as_str()));
        }
        assert!(matches!("thm9".parse::<CriterionId>(), Err(Error::UnknownCriterion(_))));
    }

    #[test]
    fn strict_and_weak_ties() {
        let one = Q::exact(1.0);
        assert_eq!(Witness::lt("x", one, one).check(), Check::Fails);
        assert_eq!(Witness::le("x", one, one).check(), Check::Holds);
        assert_eq!(Witness::le("x", Q::exact(1.0 + 1e-13), one).check(), Check::Holds);
        let sampled = Q::inexact(1.0 + 1e-7);
        assert_eq!(Witness::lt("x", sampled, one).check(), Check::Unknown);
        assert_eq!(Witness::lt("x", Q::inexact(0.9), one).check(), Check::Holds);
        let loose = Q::conservative(1.2);
        assert_eq!(Witness::lt("x", loose, one).check(), Check::Unknown);
        assert_eq!(Witness::lt("x", Q::conservative(0.8), one).check(), Check::Holds);
    }

    #[test]
    fn verdict_json_shape() {
        let v = CriterionVerdict::from_branches(
            CriterionId::Thm1,
            vec![Branch::new(
                "main",
                vec![Witness::lt("(11)", Q::exact(0.6), Q::exact(1.0))],
            )],
        );
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["criterion"], "thm1");
        assert_eq!(json["verdict"], "Satisfied");
        assert_eq!(json["claim"], "ExponentialStability");
        assert_eq!(json["witnesses"][0]["lhs"], 0.6);
        assert_eq!(json["witnesses"][0]["relation"], "<");
        assert!(json.get("subset").is_none());
    }
}
