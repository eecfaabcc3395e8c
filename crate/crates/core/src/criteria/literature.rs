//! Earlier tests from the literature, adapted to the sign convention
//! `x' - sum a_k x'(g_k) + sum b_k x(h_k) + ... = 0`.
//!
//! Most of them are stated for constant delays, several for constant
//! coefficients only. A delay term with lag 0 plays the role of the
//! non-delay term `a_0 x(t)` some of them require.

use std::f64::consts::E;

use super::sigma::{char_max, positive_root, sigma_grid};
use super::{Branch, CriterionId, CriterionVerdict, Witness, Q};
use crate::equation::{Kernel, NeutralEquation};
use crate::funcmodel::{sup_window_integral, Coefficient, Delay};

const INV_E: f64 = 1.0 / E;

/// Terms of an equation whose delays are all constant lags.
struct Parts<'a> {
    neutral: Vec<(&'a Coefficient, f64)>,
    /// Delay terms with lag 0.
    instant: Vec<&'a Coefficient>,
    /// Delay terms with a positive lag.
    delayed: Vec<(&'a Coefficient, f64)>,
}

fn parts(eq: &NeutralEquation) -> Result<Parts<'_>, String> {
    let mut p = Parts {
        neutral: Vec::new(),
        instant: Vec::new(),
        delayed: Vec::new(),
    };
    for n in &eq.neutral {
        let lag = n.g.as_constant_lag().ok_or("requires constant delays")?;
        p.neutral.push((&n.a, lag));
    }
    for d in &eq.delay {
        match d.h.as_constant_lag().ok_or("requires constant delays")? {
            lag if lag == 0.0 => p.instant.push(&d.b),
            lag => p.delayed.push((&d.b, lag)),
        }
    }
    Ok(p)
}

fn constant(c: &Coefficient) -> Result<f64, String> {
    c.as_constant()
        .ok_or_else(|| "requires constant coefficients".to_string())
}

fn no_kernel(eq: &NeutralEquation) -> Result<(), String> {
    match eq.kernel {
        Some(_) => Err("equation has a distributed term".into()),
        None => Ok(()),
    }
}

fn at_most_one<T>(v: &[T], what: &str) -> Result<(), String> {
    if v.len() > 1 {
        Err(format!("at most one {what} allowed, found {}", v.len()))
    } else {
        Ok(())
    }
}

/// Runs one of the literature tests.
pub fn check_literature(eq: &NeutralEquation, id: CriterionId) -> CriterionVerdict {
    use CriterionId::*;
    let result = match id {
        P1 => p1(eq),
        P2 => p2(eq, false),
        P2a => p2(eq, true),
        P3 => p3(eq),
        P4 => p4(eq),
        P5 => p5(eq),
        P6 => p6(eq),
        P7 => p7(eq),
        P8 => p8(eq),
        P9 => p9(eq),
        C01 => c01(eq, false),
        C01Star => c01(eq, true),
        other => Err(format!("{other} is not a literature criterion")),
    };
    result.unwrap_or_else(|why| CriterionVerdict::not_applicable(id, why))
}

/// `(x + c x(t - tau))' + p x + q x(t - sigma) = 0` with `c, p, q >= 0`, `sigma >= tau`.
fn p1(eq: &NeutralEquation) -> Result<CriterionVerdict, String> {
    no_kernel(eq)?;
    let p = parts(eq)?;
    at_most_one(&p.neutral, "neutral term")?;
    at_most_one(&p.instant, "non-delay term")?;
    at_most_one(&p.delayed, "delayed term")?;
    let (c, tau) = match p.neutral.first() {
        Some((a, lag)) => (-constant(a)?, *lag),
        None => (0.0, 0.0),
    };
    if c < 0.0 {
        return Err("neutral coefficient must be non-negative in (x + c x(t - tau))' form, i.e. a <= 0".into());
    }
    let t0 = eq.t0;
    let zero = Coefficient::zero();
    let pc = p.instant.first().copied().unwrap_or(&zero);
    let (qc, sigma) = p.delayed.first().map_or((&zero, tau), |(q, s)| (*q, *s));
    if sigma < tau {
        return Err(format!("requires sigma >= tau (sigma = {sigma}, tau = {tau})"));
    }
    for (name, f) in [("p", pc), ("q", qc)] {
        if !f.is_continuous() {
            return Err(format!("{name} must be continuous"));
        }
        if f.inf_bound(t0).value < 0.0 {
            return Err(format!("{name} must be non-negative"));
        }
    }
    let (p1, p2) = (Q::from(pc.inf_bound(t0)), Q::from(pc.sup_bound(t0)));
    let (q1, q2) = (Q::from(qc.inf_bound(t0)), Q::from(qc.sup_bound(t0)));
    Ok(CriterionVerdict::from_branches(
        CriterionId::P1,
        vec![
            Branch::new(
                "(a)",
                vec![Witness::lt(
                    "(p2 + q2)(c1 + q2 sigma) < p1 + q1",
                    (p2 + q2) * (q2 * sigma + c),
                    p1 + q1,
                )],
            ),
            Branch::new(
                "(b)",
                vec![Witness::lt("q2 + c1 (p2 + q2) < p1", q2 + (p2 + q2) * c, p1)],
            ),
        ],
    ))
}

/// `(x - P x(t - tau))' + Q x(t - sigma) = 0` with `|P| <= p`, Q >= 0, continuous.
fn p2(eq: &NeutralEquation, refined: bool) -> Result<CriterionVerdict, String> {
    let id = if refined { CriterionId::P2a } else { CriterionId::P2 };
    no_kernel(eq)?;
    let parts = parts(eq)?;
    at_most_one(&parts.neutral, "neutral term")?;
    if !parts.instant.is_empty() || parts.delayed.len() != 1 {
        return Err("needs exactly one delay term with positive lag and no non-delay term".into());
    }
    let p = match parts.neutral.first() {
        Some((a, tau)) => {
            if *tau <= 0.0 {
                return Err("neutral lag must be positive".into());
            }
            constant(a)?.abs()
        }
        None => 0.0,
    };
    let (q, sigma) = parts.delayed[0];
    if !q.is_continuous() {
        return Err("Q must be continuous".into());
    }
    if q.inf_bound(eq.t0).value < 0.0 {
        return Err("Q must be non-negative".into());
    }
    if !q.integral_diverges() {
        return Err("integral of Q over [t0, inf) is finite".into());
    }
    let window: Q = sup_window_integral(q, &Delay::lag_of(sigma), eq.t0)
        .map_err(|e| e.to_string())?
        .into();
    let label = "limsup int_{t-sigma}^t Q";
    let branches = if refined {
        vec![
            Branch::new(
                "(a)",
                vec![
                    Witness::lt("p < 1/4", Q::exact(p), Q::exact(0.25)),
                    Witness::lt(format!("{label} < 3/2 - 2p"), window, Q::exact(1.5 - 2.0 * p)),
                ],
            ),
            Branch::new(
                "(b)",
                vec![
                    Witness::le("1/4 <= p", Q::exact(0.25), Q::exact(p)),
                    Witness::lt("p < 1/2", Q::exact(p), Q::exact(0.5)),
                    Witness::lt(
                        format!("{label} < sqrt(2(1 - 2p))"),
                        window,
                        Q::exact((2.0 * (1.0 - 2.0 * p)).max(0.0).sqrt()),
                    ),
                ],
            ),
        ]
    } else {
        vec![Branch::new(
            "main",
            vec![Witness::lt(
                format!("{label} < 3/2 - 2p(2 - p)"),
                window,
                Q::exact(1.5 - 2.0 * p * (2.0 - p)),
            )],
        )]
    };
    Ok(CriterionVerdict::from_branches(id, branches))
}

/// `int_0^tau s K(s) ds` for the kernel as a function of `t - s`.
fn kernel_first_moment(k: &Kernel, tau: f64) -> f64 {
    match k {
        Kernel::Uniform { c, .. } => c * tau * tau / 2.0,
        Kernel::Exponential { c, d, .. } => {
            if *d == 0.0 {
                c * tau * tau / 2.0
            } else {
                let dt = d * tau;
                c * (1.0 - (-dt).exp() * (1.0 + dt)) / (d * d)
            }
        }
    }
}

/// Autonomous equation with a non-delay term `a_0 x(t)`, point delays and a
/// distributed term; the distributed part enters through its first moment.
fn p3(eq: &NeutralEquation) -> Result<CriterionVerdict, String> {
    let p = parts(eq)?;
    let a0: f64 = p.instant.iter().map(|c| constant(c)).sum::<Result<f64, _>>()?;
    if p.instant.is_empty() || a0 <= 0.0 {
        return Err("needs a non-delay term a_0 x(t) with a_0 > 0".into());
    }
    let mut neutral_sum = 0.0;
    for (a, lag) in &p.neutral {
        let a = constant(a)?;
        if a != 0.0 && *lag == 0.0 {
            return Err("neutral terms need positive lags".into());
        }
        neutral_sum += a.abs();
    }
    let mut delayed_sum = 0.0;
    let mut delayed_weighted = 0.0;
    for (b, lag) in &p.delayed {
        let b = constant(b)?;
        delayed_sum += b;
        delayed_weighted += b.abs() * lag;
    }
    let (mass, moment) = match &eq.kernel {
        None => (0.0, 0.0),
        Some(k) => {
            let tau = k
                .window()
                .as_constant_lag()
                .ok_or("distributed term needs a constant window")?;
            (k.induced_b(eq.t0).sup.value, kernel_first_moment(k, tau))
        }
    };
    Ok(CriterionVerdict::from_branches(
        CriterionId::P3,
        vec![Branch::new(
            "main",
            vec![
                Witness::lt(
                    "0 < a_0 + sum a_i + int K_1",
                    Q::exact(0.0),
                    Q::exact(a0 + delayed_sum + mass),
                ),
                Witness::lt(
                    "sum |b_j| + sum |a_i| tau_i + int s |K_1(s)| ds < 1",
                    Q::exact(neutral_sum + delayed_weighted + moment),
                    Q::exact(1.0),
                ),
            ],
        )],
    ))
}

/// `x' + A x(t - tau) + B x'(t - sigma) = 0`, constant coefficients.
fn p4(eq: &NeutralEquation) -> Result<CriterionVerdict, String> {
    no_kernel(eq)?;
    if eq.delay.len() != 1 || eq.neutral.len() > 1 {
        return Err("needs one delay term and at most one neutral term".into());
    }
    let parts = parts(eq)?;
    let (a, tau) = match (parts.instant.first(), parts.delayed.first()) {
        (Some(c), _) => (constant(c)?, 0.0),
        (None, Some((c, lag))) => (constant(c)?, *lag),
        _ => unreachable!("one delay term"),
    };
    let b = match parts.neutral.first() {
        Some((c, _)) => constant(c)?.abs(),
        None => 0.0,
    };
    let (a, b) = (Q::exact(a), Q::exact(b));
    Ok(CriterionVerdict::from_branches(
        CriterionId::P4,
        vec![Branch::new(
            "main",
            vec![
                Witness::lt("0 < liminf A", Q::exact(0.0), a),
                Witness::lt(
                    "2 A tau + |B|/A + |B| tau + 4 |B| A < 2",
                    a * (2.0 * tau) + b / a + b * tau + b * a * 4.0,
                    Q::exact(2.0),
                ),
                Witness::lt("4 B^2 + A tau < 1", b * b * 4.0 + a * tau, Q::exact(1.0)),
            ],
        )],
    ))
}

/// `x' = -a x + b x(t - tau) + c x'(t - sigma)`.
fn p5(eq: &NeutralEquation) -> Result<CriterionVerdict, String> {
    no_kernel(eq)?;
    let p = parts(eq)?;
    if p.instant.len() != 1 {
        return Err("needs exactly one non-delay term a(t) x(t)".into());
    }
    at_most_one(&p.neutral, "neutral term")?;
    at_most_one(&p.delayed, "delayed term")?;
    let t0 = eq.t0;
    let a = p.instant[0];
    let zero = Coefficient::zero();
    let b = p.delayed.first().map_or(&zero, |(b, _)| *b);
    let c = p.neutral.first().map_or(&zero, |(c, _)| *c);
    for (name, f) in [("a", a), ("b", b), ("c", c)] {
        if !f.is_continuous() {
            return Err(format!("{name} must be continuous"));
        }
    }
    let a0 = Q::from(a.inf_bound(t0));
    let (b_sup, c_sup): (Q, Q) = (b.sup_norm(t0).into(), c.sup_norm(t0).into());
    let v = CriterionVerdict::from_branches(
        CriterionId::P5,
        vec![Branch::new(
            "main",
            vec![
                Witness::lt("0 < a_0 = inf a", Q::exact(0.0), a0),
                Witness::lt("sup |c| < 1", c_sup, Q::exact(1.0)),
                Witness::lt("sup |b| < a_0", b_sup, a0),
            ],
        )],
    );
    // The condition as published does not couple b and c; constant-coefficient
    // counterexamples with growing solutions exist once sup |b| >= a_0 (1 - sup |c|).
    if v.is_satisfied() && b_sup.v >= a0.v * (1.0 - c_sup.v) {
        return Ok(
            v.with_note("sup |b| >= a_0 (1 - sup |c|): outside the range where the condition is known to be sound")
        );
    }
    Ok(v)
}

/// `x' = -a x - b x(t - tau) + c x'(t - tau)`, constant coefficients and delay.
fn p6(eq: &NeutralEquation) -> Result<CriterionVerdict, String> {
    no_kernel(eq)?;
    let p = parts(eq)?;
    if p.instant.len() != 1 {
        return Err("needs exactly one non-delay term a x(t)".into());
    }
    at_most_one(&p.neutral, "neutral term")?;
    at_most_one(&p.delayed, "delayed term")?;
    if let (Some((_, s)), Some((_, t))) = (p.neutral.first(), p.delayed.first()) {
        if s != t {
            return Err(format!("neutral and delayed terms need the same lag ({s} vs {t})"));
        }
    }
    let a = constant(p.instant[0])?;
    if a <= 0.0 {
        return Err("integral of a over [t0, inf) must diverge (a > 0)".into());
    }
    let b = p.delayed.first().map_or(Ok(0.0), |(b, _)| constant(b))?;
    let c = p.neutral.first().map_or(Ok(0.0), |(c, _)| constant(c))?;
    Ok(CriterionVerdict::from_branches(
        CriterionId::P6,
        vec![Branch::new(
            "main",
            vec![Witness::lt(
                "|c| + |b + a c| / a < 1",
                Q::exact(c.abs() + (b + a * c).abs() / a),
                Q::exact(1.0),
            )],
        )],
    ))
}

/// `y' - a y'(t - sigma) + b y(t - tau) = 0` with `a, b > 0` (no perturbation).
fn p7(eq: &NeutralEquation) -> Result<CriterionVerdict, String> {
    no_kernel(eq)?;
    if eq.neutral.len() != 1 || eq.delay.len() != 1 {
        return Err("needs exactly one neutral and one delay term".into());
    }
    let p = parts(eq)?;
    let (a, sigma) = (constant(p.neutral[0].0)?, p.neutral[0].1);
    let (b, tau) = match (p.instant.first(), p.delayed.first()) {
        (Some(c), _) => (constant(c)?, 0.0),
        (None, Some((c, lag))) => (constant(c)?, *lag),
        _ => unreachable!("one delay term"),
    };
    if a <= 0.0 || b <= 0.0 {
        return Err("requires a > 0 and b > 0".into());
    }
    let peak = char_max(a, b, sigma, tau);
    let mut v = CriterionVerdict::from_branches(
        CriterionId::P7,
        vec![Branch::new(
            "main",
            vec![Witness::lt(
                "0 < max of l - a l e^{sigma l} - b e^{tau l} over the scan",
                Q::exact(0.0),
                Q::inexact(peak),
            )],
        )],
    );
    if let Some(root) = positive_root(a, b, sigma, tau) {
        v.note = Some(format!("positive root lambda = {root:.10}"));
    }
    Ok(v)
}

/// `x' - sum q_i x'(g_i) + sum p_k x(h_k) = 0` with bounded delays.
fn p8(eq: &NeutralEquation) -> Result<CriterionVerdict, String> {
    no_kernel(eq)?;
    if eq.delay.is_empty() {
        return Err("needs at least one delay term".into());
    }
    if eq.has_unbounded_delay() {
        return Err("requires bounded delays".into());
    }
    let t0 = eq.t0;
    let ps: Vec<&Coefficient> = eq.delay.iter().map(|d| &d.b).collect();
    let qs: Vec<&Coefficient> = eq.neutral.iter().map(|n| &n.a).collect();
    let tau = eq.delay.iter().filter_map(|d| d.h.sup_lag()).fold(0.0, f64::max);

    // Bounds of a sum are exact for one term or all-constant terms.
    let sum_bound = |fs: &[&Coefficient], upper: bool| -> Q {
        let q = Q::sum(
            fs.iter()
                .map(|f| Q::from(if upper { f.sup_bound(t0) } else { f.inf_bound(t0) })),
        );
        if fs.len() <= 1 || fs.iter().all(|f| f.as_constant().is_some()) {
            q
        } else {
            q.loose()
        }
    };
    let p_inf = sum_bound(&ps, false);
    let p_sup = sum_bound(&ps, true);
    let q_inf = sum_bound(&qs, false);
    let q_sup = sum_bound(&qs, true);
    let abs_ratio = if ps.iter().all(|p| p.inf_bound(t0).value >= 0.0) {
        Q::exact(1.0)
    } else {
        let abs_sum = Q::sum(ps.iter().map(|p| Q::from(p.sup_norm(t0))));
        let all_const = ps.iter().all(|p| p.as_constant().is_some());
        let r = abs_sum / p_inf;
        if all_const {
            r
        } else {
            r.loose()
        }
    };
    Ok(CriterionVerdict::from_branches(
        CriterionId::P8,
        vec![Branch::new(
            "main",
            vec![
                Witness::lt("0 < inf sum p_k", Q::exact(0.0), p_inf),
                Witness::le("sup sum p_k <= 1/(tau e)", p_sup, Q::exact(1.0 / (tau * E))),
                Witness::le("0 <= inf sum q_i", Q::exact(0.0), q_inf),
                Witness::le(
                    "sup sum q_i <= (1 + sup sum |p_k| / sum p_k)^-1",
                    q_sup,
                    1.0 / (1.0 + abs_ratio),
                ),
            ],
        )],
    ))
}

fn sigma_q(omega: f64, sigma: f64) -> Q {
    if omega <= INV_E {
        Q::exact(sigma)
    } else {
        Q::inexact(sigma)
    }
}

/// Scans the omega grid and keeps the branch with the largest slack.
fn omega_scan(id: CriterionId, mut branch_at: impl FnMut(f64, Q) -> Branch) -> CriterionVerdict {
    let (omega, branch) = sigma_grid()
        .iter()
        .map(|&(w, s)| (w, branch_at(w, sigma_q(w, s))))
        .max_by(|(_, x), (_, y)| {
            let key = |b: &Branch| (std::cmp::Reverse(b.verdict().rank()), b.margin());
            let (kx, ky) = (key(x), key(y));
            kx.0.cmp(&ky.0).then(kx.1.total_cmp(&ky.1))
        })
        .expect("non-empty grid");
    let mut v = CriterionVerdict::from_branches(id, vec![branch]);
    v.omega = Some(omega);
    v
}

/// Constant-coefficient form of the omega test for
/// `x' - sum q_j x'(t - delta_j) + sum p_k x(t - tau_k) = 0`,
/// where `r = p/(1 - q)` is constant and every `r_j = 1`.
fn p9(eq: &NeutralEquation) -> Result<CriterionVerdict, String> {
    no_kernel(eq)?;
    let parts = parts(eq)?;
    let ps: Vec<(f64, f64)> = parts
        .instant
        .iter()
        .map(|c| constant(c).map(|v| (v, 0.0)))
        .chain(parts.delayed.iter().map(|(c, l)| constant(c).map(|v| (v, *l))))
        .collect::<Result<_, _>>()?;
    if ps.is_empty() {
        return Err("needs at least one delay term".into());
    }
    let qs: Vec<(f64, f64)> = parts
        .neutral
        .iter()
        .map(|(c, l)| constant(c).map(|v| (v, *l)))
        .collect::<Result<_, _>>()?;
    let p: f64 = ps.iter().map(|x| x.0).sum();
    let q: f64 = qs.iter().map(|x| x.0).sum();
    let p_abs: f64 = ps.iter().map(|x| x.0.abs()).sum();
    let q_abs: f64 = qs.iter().map(|x| x.0.abs()).sum();
    let r = p / (1.0 - q);
    let hyps = vec![
        Witness::lt("0 < r = p/(1 - q)", Q::exact(0.0), Q::exact(r)),
        Witness::lt("sum ||q_j r_j|| < 1", Q::exact(q_abs), Q::exact(1.0)),
    ];
    if r <= 0.0 {
        return Ok(CriterionVerdict::from_branches(
            CriterionId::P9,
            vec![Branch::new("main", hyps)],
        ));
    }
    Ok(omega_scan(CriterionId::P9, |w, sigma| {
        let inner = ps.iter().map(|(pk, tk)| pk.abs() * (r * tk - w).abs()).sum::<f64>() / r
            + qs.iter().map(|(qj, dj)| qj.abs() * r * dj).sum::<f64>();
        let lhs = p_abs / (1.0 - q_abs) / r * inner;
        let mut ws = hyps.clone();
        ws.push(Witness::lt(
            "sum ||p_k|| (1 - sum ||q_j||)^-1 ||1/r|| (||1/r|| sum ||p_k (tau_hk - omega)|| + sum ||q_j tau_gj||) < (1 - sum ||q_j||) / sigma(omega)",
            Q::exact(lhs),
            (1.0 - q_abs) / sigma,
        ));
        Branch::new("main", ws)
    }))
}

/// `x' - q x'(t - delta) + p x(t - tau) = 0`, `|q| < 1`, `p > 0`.
fn c01(eq: &NeutralEquation, star: bool) -> Result<CriterionVerdict, String> {
    let id = if star { CriterionId::C01Star } else { CriterionId::C01 };
    no_kernel(eq)?;
    if eq.delay.len() != 1 || eq.neutral.len() > 1 {
        return Err("needs one delay term and at most one neutral term".into());
    }
    let parts = parts(eq)?;
    let (p, tau) = match (parts.instant.first(), parts.delayed.first()) {
        (Some(c), _) => (constant(c)?, 0.0),
        (None, Some((c, lag))) => (constant(c)?, *lag),
        _ => unreachable!("one delay term"),
    };
    if p <= 0.0 {
        return Err("requires p > 0".into());
    }
    let (q, delta) = match parts.neutral.first() {
        Some((c, l)) => (constant(c)?, *l),
        None => (0.0, 0.0),
    };
    let qa = q.abs();
    if star {
        let lhs = (1.0 - q) / (1.0 - qa) * (p * tau - (1.0 - q) * INV_E).abs();
        let rhs = 1.0 - 2.0 * qa - p * qa * delta / (1.0 - qa);
        let mut v = CriterionVerdict::from_branches(
            id,
            vec![Branch::new(
                "main",
                vec![Witness::lt(
                    "(1 - q)/(1 - |q|) |p tau - (1 - q)/e| < 1 - 2|q| - p |q| delta / (1 - |q|)",
                    Q::exact(lhs),
                    Q::exact(rhs),
                )],
            )],
        );
        v.omega = Some(INV_E);
        return Ok(v);
    }
    Ok(omega_scan(id, |w, sigma| {
        let lhs = (1.0 - q) * (p * tau + q * w - w).abs() + p * qa * delta + qa * (1.0 - qa);
        Branch::new(
            "main",
            vec![Witness::lt(
                "(1 - q)|p tau + q omega - omega| + p |q| delta + |q|(1 - |q|) < (1 - |q|)^2 / sigma(omega)",
                Q::exact(lhs),
                (1.0 - qa) * (1.0 - qa) / sigma,
            )],
        )
    }))
}
