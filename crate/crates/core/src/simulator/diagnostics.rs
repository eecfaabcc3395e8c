//! Numerical checks of the solution representation and of two a priori
//! estimates, used as convergence and consistency diagnostics.

use rayon::prelude::*;

use super::{fundamental, integrate};
use crate::equation::{HistorySpec, NeutralEquation};
use crate::error::{Error, Result};
use crate::funcmodel::{Coefficient, Delay};

/// `int_{s0}^{t_p} X(t_p, s) w(s) ds` at `t_p = s0 + p ds`, `p = 1..=n`,
/// by the trapezoidal rule over fundamental functions started on the s-grid.
fn green_integrals(
    eq: &NeutralEquation,
    w: &Coefficient,
    s0: f64,
    t_end: f64,
    dt: f64,
    ds: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(ds > 0.0) || !(dt > 0.0) {
        return Err(Error::Setup("dt and ds must be positive".into()));
    }
    let n = ((t_end - s0) / ds).round() as usize;
    if n == 0 {
        return Err(Error::Setup("horizon shorter than one s-step".into()));
    }
    let node = |p: usize| s0 + p as f64 * ds;
    // rows[j][p - j] = X(t_p, s_j) for p >= j
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let tr = fundamental(eq, node(j), node(n), dt)?;
            Ok((j..=n).map(|p| tr.x_at(node(p))).collect())
        })
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = (0..=n).map(|j| w.value(node(j))).collect();
    Ok((1..=n)
        .map(|p| {
            // X(t_p, t_p) = 1
            let mut sum = 0.5 * ds * (rows[0][p] * weights[0] + weights[p]);
            for j in 1..p {
                sum += ds * rows[j][p - j] * weights[j];
            }
            (node(p), sum)
        })
        .collect())
}

/// Largest deviation between the direct solution of `x' + b x(h) = f` with
/// zero history and `int_0^t X(t, s) f(s) ds` assembled from fundamental
/// functions on an s-grid of spacing `ds`.
pub fn representation_check(b: &Coefficient, h: &Delay, f: &Coefficient, t_end: f64, dt: f64, ds: f64) -> Result<f64> {
    let eq = NeutralEquation::new(0.0).with_delay(b.clone(), h.clone());
    let direct = integrate(&eq, &HistorySpec::zero(), t_end, dt, Some(f))?;
    let assembled = green_integrals(&eq, f, 0.0, t_end, dt, ds)?;
    Ok(assembled
        .iter()
        .map(|(t, v)| (direct.x_at(*t) - v).abs())
        .fold(0.0, f64::max))
}

/// Largest value of `int_{t0 + tau0}^t X0(t, s) a(s) ds` over the probe grid,
/// where `X0` is the fundamental function of `x' + a x(h) = 0` with `t0 = 0`
/// and `tau0` the largest lag of `h`. At most 1 when the window integral of
/// `a` over `[h(t), t]` stays below `1/e`.
pub fn lemma4_check(a: &Coefficient, h: &Delay, t_end: f64, dt: f64, ds: f64) -> Result<f64> {
    let tau0 = h
        .sup_lag()
        .ok_or_else(|| Error::Setup("needs a bounded delay".into()))?;
    let eq = NeutralEquation::new(0.0).with_delay(a.clone(), h.clone());
    let values = green_integrals(&eq, a, tau0, t_end, dt, ds)?;
    Ok(values.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max))
}

/// Largest excess of `sup_I |x'|` over
/// `(sup ||b|| sup_I |x| + ||f||) / (1 - sum ||a||)` across prefix intervals
/// `I = [t0, t]`, for the solution with zero history. Non-positive up to
/// rounding when the estimate holds.
pub fn lemma9_check(eq: &NeutralEquation, forcing: &Coefficient, t_end: f64, dt: f64) -> Result<f64> {
    let tr = integrate(eq, &HistorySpec::zero(), t_end, dt, Some(forcing))?;
    let t0 = eq.t0;
    let a_norm = eq.neutral_norm_sum();
    let mut b_norm: f64 = eq.delay.iter().map(|d| d.b.sup_norm(t0).value).sum();
    if let Some(k) = &eq.kernel {
        b_norm += k.induced_b(t0).sup.value;
    }
    let f_norm = forcing.sup_norm(t0).value;
    let (mut sup_x, mut sup_xd) = (0.0_f64, 0.0_f64);
    let mut worst = f64::NEG_INFINITY;
    for (x, xd) in tr.x.iter().zip(&tr.xdot) {
        sup_x = sup_x.max(x.abs());
        sup_xd = sup_xd.max(xd.abs());
        let bound = (b_norm * sup_x + f_norm) / (1.0 - a_norm);
        worst = worst.max(sup_xd - bound);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn zero_forcing_gives_zero_deviation() {
        let d = representation_check(
            &Coefficient::constant(0.3),
            &Delay::lag_of(1.0),
            &Coefficient::zero(),
            2.0,
            1e-2,
            0.1,
        )
        .unwrap();
        assert!(d < 1e-14);
    }

    #[test]
    fn lemma4_on_a_short_horizon() {
        let v = lemma4_check(&Coefficient::constant(1.0 / E), &Delay::lag_of(1.0), 6.0, 1e-2, 5e-2).unwrap();
        assert!(v <= 1.0 + 1e-3 && v > 0.5, "{v}");
    }

    #[test]
    fn lemma9_holds_for_a_forced_neutral_equation() {
        let eq = NeutralEquation::constant(0.4, 0.5, 0.7, 1.0);
        let w = lemma9_check(&eq, &Coefficient::sinusoid(0.0, 1.0, 2.0, 0.0), 20.0, 1e-3).unwrap();
        assert!(w <= 1e-6, "{w}");
    }
}
