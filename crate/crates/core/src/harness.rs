//! Reproduction tables, parameter paths and grid sweeps shared by the CLI
//! and the acceptance suite.

use std::f64::consts::E;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::{evaluate, CriterionId, Verdict};
use crate::equation::{EquationFile, NeutralEquation};
use crate::error::{Error, Result};
use crate::simulator::{bisect_threshold, Classification, Oracle, SimConfig};

/// Largest number of points a sweep may visit.
pub const MAX_SWEEP_POINTS: usize = 10_000;

/// `x' - x'(t - sigma)/3 + x(t - tau)/3 = 0`, as a function of `tau`.
pub fn example1_family(sigma: f64) -> impl Fn(f64) -> NeutralEquation + Sync {
    move |tau| NeutralEquation::constant(1.0 / 3.0, sigma, 1.0 / 3.0, tau)
}

/// Expands the short names `tau`, `b`, `sigma`, `a` and dotted paths such as
/// `delay.1.h.tau` into JSON pointers into a spec file.
pub fn param_pointer(path: &str) -> String {
    let long = match path {
        "tau" => "delay.0.h.tau",
        "b" => "delay.0.b.c",
        "sigma" => "neutral.0.g.tau",
        "a" => "neutral.0.a.c",
        other => other,
    };
    format!("/{}", long.replace('.', "/"))
}

/// Copy of `file` with the parameter at `path` set to `value`.
pub fn set_param(file: &EquationFile, path: &str, value: f64) -> Result<EquationFile> {
    let mut json = serde_json::to_value(file).expect("spec serializes");
    let pointer = param_pointer(path);
    let slot = json
        .pointer_mut(&pointer)
        .ok_or_else(|| Error::Spec(format!("no parameter `{path}` in the spec (looked for {pointer})")))?;
    if !slot.is_number() {
        return Err(Error::Spec(format!("parameter `{path}` is not a number")));
    }
    *slot = serde_json::Value::from(value);
    let out: EquationFile = serde_json::from_value(json).map_err(|e| Error::Spec(format!("{path} = {value}: {e}")))?;
    out.equation()
        .check_parameters()
        .map_err(|e| Error::Spec(format!("{path} = {value}: {e}")))?;
    Ok(out)
}

/// Threshold in one parameter of a spec file.
pub fn threshold(file: &EquationFile, path: &str, range: (f64, f64), oracle: &Oracle, tol: f64) -> Result<f64> {
    set_param(file, path, range.0)?;
    set_param(file, path, range.1)?;
    bisect_threshold(
        |v| {
            set_param(file, path, v)
                .expect("interior of a valid range stays valid")
                .equation()
        },
        range,
        oracle,
        tol,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRow {
    pub label: String,
    pub oracle: String,
    pub closed_form: f64,
    pub bisected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulatedThreshold {
    pub sigma: f64,
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Example1Report {
    pub rows: Vec<ThresholdRow>,
    pub simulated: Vec<SimulatedThreshold>,
}

/// Supremal delays `tau` for the first comparison family (`a = b = 1/3`).
pub fn example1_closed_forms() -> Vec<(&'static str, &'static str, f64)> {
    vec![
        ("P2", "p2", 7.0 / 6.0),
        ("P2a", "p2a", 6f64.sqrt()),
        ("P4", "p4", 5.0 / 9.0),
        ("P8", "p8", 3.0 / E),
        ("Cor1+Cor2b(B)", "cor1+cor2b-b", 1.0 + 3.0 / E),
    ]
}

/// Criterion thresholds by bisection on the criterion outcome, next to
/// their closed forms. The criteria in the table do not depend on sigma.
pub fn example1_thresholds(tol: f64) -> Result<Vec<ThresholdRow>> {
    example1_closed_forms()
        .into_par_iter()
        .map(|(label, oracle, closed)| {
            let o: Oracle = oracle.parse()?;
            let bisected = bisect_threshold(example1_family(1.0), (0.01, 4.0), &o, tol)?;
            Ok(ThresholdRow {
                label: label.into(),
                oracle: oracle.into(),
                closed_form: closed,
                bisected,
            })
        })
        .collect()
}

/// Decay-classifier threshold in `tau` for each sigma; an empirical proxy.
pub fn example1_simulated(sigmas: &[f64], cfg: &SimConfig, range: (f64, f64), tol: f64) -> Vec<SimulatedThreshold> {
    sigmas
        .par_iter()
        .map(|&sigma| {
            let oracle = Oracle::Simulate(cfg.clone());
            match bisect_threshold(example1_family(sigma), range, &oracle, tol) {
                Ok(t) => SimulatedThreshold {
                    sigma,
                    threshold: Some(t),
                    note: None,
                },
                Err(e) => SimulatedThreshold {
                    sigma,
                    threshold: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect()
}

pub fn reproduce_example1(simulate: bool) -> Result<Example1Report> {
    let rows = example1_thresholds(1e-7)?;
    let simulated = if simulate {
        example1_simulated(&[0.0, 1.0, 2.0], &SimConfig::new(400.0, 5e-3), (1.0, 6.0), 0.02)
    } else {
        Vec::new()
    };
    Ok(Example1Report { rows, simulated })
}

impl Example1Report {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{:<16} {:>12} {:>14}", "criterion", "bisected", "closed form").unwrap();
        for r in &self.rows {
            writeln!(s, "{:<16} {:>12.4} {:>14.9}", r.label, r.bisected, r.closed_form).unwrap();
        }
        if !self.simulated.is_empty() {
            writeln!(s, "\nsimulated threshold (decay-classifier proxy)").unwrap();
            writeln!(s, "{:<8} {:>10}", "sigma", "tau").unwrap();
            for r in &self.simulated {
                match r.threshold {
                    Some(t) => writeln!(s, "{:<8} {:>10.4}", r.sigma, t).unwrap(),
                    None => writeln!(s, "{:<8} {:>10}  {}", r.sigma, "-", r.note.as_deref().unwrap_or("")).unwrap(),
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Example2Row {
    pub sigma: f64,
    /// `2/e - 1 + sigma/2`
    pub lower: f64,
    /// `1 + 2/e - sigma/2`
    pub upper: f64,
    pub empty: bool,
    /// Upper end recovered by bisection on the criterion outcome.
    pub bisected_upper: Option<f64>,
    /// `1 + 3/e`
    pub union_bound: f64,
    /// The union bound reaches further than the interval.
    pub union_better: bool,
}

pub fn reproduce_example2(sigmas: &[f64]) -> Result<Vec<Example2Row>> {
    let centre = 2.0 / E;
    sigmas
        .iter()
        .map(|&sigma| {
            let lower = centre - 1.0 + sigma / 2.0;
            let upper = 1.0 + centre - sigma / 2.0;
            let empty = lower >= upper;
            let bisected_upper = if empty {
                None
            } else {
                Some(bisect_threshold(
                    example1_family(sigma),
                    (centre, 4.0),
                    &Oracle::Criterion(CriterionId::C01Star),
                    1e-12,
                )?)
            };
            let union_bound = 1.0 + 3.0 / E;
            Ok(Example2Row {
                sigma,
                lower,
                upper,
                empty,
                bisected_upper,
                union_bound,
                union_better: upper < union_bound,
            })
        })
        .collect()
}

pub fn example2_table(rows: &[Example2Row]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<6} {:>13} {:>13} {:>13} {:>10}",
        "sigma", "lower", "upper", "1 + 3/e", "interval"
    )
    .unwrap();
    for r in rows {
        writeln!(
            s,
            "{:<6} {:>13.9} {:>13.9} {:>13.9} {:>10}",
            r.sigma,
            r.lower,
            r.upper,
            r.union_bound,
            if r.empty { "empty" } else { "non-empty" }
        )
        .unwrap();
    }
    s
}

/// One swept parameter, `param=lo:hi:n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Spec(format!("grid axis `{s}` is not of the form param=lo:hi:n"));
        let (param, rest) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(bad());
        };
        let axis = SweepAxis {
            param: param.trim().to_string(),
            lo: lo.trim().parse().map_err(|_| bad())?,
            hi: hi.trim().parse().map_err(|_| bad())?,
            n: n.trim().parse().map_err(|_| bad())?,
        };
        if axis.n == 0 || !(axis.lo <= axis.hi) {
            return Err(bad());
        }
        Ok(axis)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub values: Vec<f64>,
    pub verdicts: Vec<Verdict>,
    pub simulated: Option<Classification>,
}

/// Evaluates `criteria` (all criteria when empty) and optionally the
/// simulated classification at every grid point. Rows come in row-major
/// order with the first axis outermost.
pub fn sweep(
    base: &EquationFile,
    axes: &[SweepAxis],
    criteria: &[CriterionId],
    simulate: Option<&SimConfig>,
) -> Result<Vec<SweepPoint>> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::Spec(format!(
            "sweeps take 1 or 2 parameters, got {}",
            axes.len()
        )));
    }
    let total = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.n))
        .unwrap_or(usize::MAX);
    if total > MAX_SWEEP_POINTS {
        return Err(Error::Spec(format!(
            "{total} grid points exceed the limit of {MAX_SWEEP_POINTS}"
        )));
    }
    let ids: Vec<CriterionId> = if criteria.is_empty() {
        CriterionId::ALL.to_vec()
    } else {
        criteria.to_vec()
    };
    let grids: Vec<Vec<f64>> = axes.iter().map(SweepAxis::values).collect();
    let points: Vec<Vec<f64>> = match grids.as_slice() {
        [g] => g.iter().map(|v| vec![*v]).collect(),
        [g, h] => g.iter().flat_map(|u| h.iter().map(move |v| vec![*u, *v])).collect(),
        _ => unreachable!(),
    };
    // Fail early on a bad path rather than per point.
    let mut probe = base.clone();
    for (axis, v) in axes.iter().zip(&points[0]) {
        probe = set_param(&probe, &axis.param, *v)?;
    }
    points
        .into_par_iter()
        .map(|values| {
            let mut file = base.clone();
            for (axis, v) in axes.iter().zip(&values) {
                file = set_param(&file, &axis.param, *v)?;
            }
            let eq = file.equation();
            let verdicts = ids.iter().map(|id| evaluate(&eq, *id).verdict).collect();
            let simulated = simulate.map(|cfg| {
                let cfg = SimConfig {
                    history: cfg.history.clone().or_else(|| file.history.clone()),
                    ..cfg.clone()
                };
                cfg.classify(&eq)
                    .map_or(Classification::Inconclusive, |d| d.classification)
            });
            Ok(SweepPoint {
                values,
                verdicts,
                simulated,
            })
        })
        .collect()
}

pub fn sweep_csv(axes: &[SweepAxis], criteria: &[CriterionId], points: &[SweepPoint]) -> String {
    let ids: Vec<CriterionId> = if criteria.is_empty() {
        CriterionId::ALL.to_vec()
    } else {
        criteria.to_vec()
    };
    let mut s = String::new();
    let mut header: Vec<String> = axes.iter().map(|a| a.param.clone()).collect();
    header.extend(ids.iter().map(|i| i.as_str().to_string()));
    if points.first().is_some_and(|p| p.simulated.is_some()) {
        header.push("simulated".into());
    }
    writeln!(s, "{}", header.join(",")).unwrap();
    for p in points {
        let mut row: Vec<String> = p.values.iter().map(|v| format!("{v:.8e}")).collect();
        row.extend(p.verdicts.iter().map(|v| format!("{v:?}")));
        if let Some(c) = p.simulated {
            row.push(format!("{c:?}"));
        }
        writeln!(s, "{}", row.join(",")).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_match_bisection() {
        for row in example1_thresholds(1e-8).unwrap() {
            assert!((row.bisected - row.closed_form).abs() < 1e-6, "{row:?}");
        }
    }

    #[test]
    fn example2_endpoints() {
        let rows = reproduce_example2(&[0.0, 0.5, 1.0, 2.0]).unwrap();
        for r in &rows[..3] {
            assert!((r.bisected_upper.unwrap() - r.upper).abs() < 1e-9, "{r:?}");
            assert!(r.union_better);
        }
        assert!(rows[3].empty);
    }

    #[test]
    fn params_by_name_and_path() {
        let file = EquationFile::from_equation(&NeutralEquation::constant(0.1, 1.0, 0.2, 1.0));
        let f = set_param(&file, "tau", 2.5).unwrap();
        assert_eq!(f.equation().max_lag(), Some(2.5));
        let f = set_param(&f, "neutral.0.a.c", 0.3).unwrap();
        assert_eq!(f.neutral[0].a.as_constant(), Some(0.3));
        assert!(set_param(&file, "delay.3.h.tau", 1.0).is_err());
        assert!(set_param(&file, "tau", -1.0).is_err());
    }

    #[test]
    fn sweep_limits_and_order() {
        let file = EquationFile::from_equation(&NeutralEquation::constant(1.0 / 3.0, 1.0, 1.0 / 3.0, 1.0));
        let axes: Vec<SweepAxis> = vec!["tau=0.1:3:4".parse().unwrap(), "sigma=0:3:3".parse().unwrap()];
        let pts = sweep(&file, &axes, &[CriterionId::Cor2bB], None).unwrap();
        assert_eq!(pts.len(), 12);
        assert_eq!(pts[1].values, vec![0.1, 1.5]);
        let csv = sweep_csv(&axes, &[CriterionId::Cor2bB], &pts);
        assert!(csv.starts_with("tau,sigma,cor2b-b\n"));
        let big: Vec<SweepAxis> = vec!["tau=0:1:101".parse().unwrap(), "sigma=0:1:100".parse().unwrap()];
        assert!(sweep(&file, &big, &[], None).is_err());
        assert!("tau=1:0:3".parse::<SweepAxis>().is_err());
    }
}
