//! `sigma(omega)`, the integral of the fundamental solution of
//! `x'(t) + x(t - omega) = 0`, and the positive-root scan of the
//! characteristic function `lambda - a lambda e^{sigma lambda} - b e^{tau lambda}`.

use std::f64::consts::{E, FRAC_PI_2};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Number of omega values scanned by the omega-dependent criteria.
pub const SIGMA_GRID_POINTS: usize = 200;

const TARGET_STEP: f64 = 1e-3;
const TAIL: f64 = 1e-10;
const MAX_STEPS: usize = 50_000_000;

/// `sigma(omega)` for `0 <= omega < pi/2`.
///
/// The fundamental solution `x_omega` (`x(0) = 1`, zero before 0) always has
/// `int_0^inf x_omega = 1`, so the quantity that grows without bound as
/// omega approaches pi/2 is `int_0^inf |x_omega|`; that is what is returned.
/// It equals 1 exactly for `omega <= 1/e`, where `x_omega > 0`, and is
/// computed here as `1 + 2 int x_omega^-`, which keeps it monotone in omega.
pub fn compute_sigma(omega: f64) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!("sigma needs omega >= 0, got {omega}")));
    }
    if omega >= FRAC_PI_2 {
        return Err(Error::Domain(format!(
            "sigma(omega) diverges for omega >= pi/2 (omega = {omega})"
        )));
    }
    if omega <= 1.0 / E {
        return Ok(1.0);
    }
    let n = (omega / TARGET_STEP).ceil() as usize;
    let dt = omega / n as f64;
    // x on the grid k dt, kept in a ring of the last n + 1 values. Over
    // [t_i, t_{i+1}] the delayed argument runs over [t_{i-n}, t_{i+1-n}],
    // which lies in the zero history while i < n.
    let mut ring = vec![0.0_f64; n + 1];
    ring[0] = 1.0;
    let at = |ring: &[f64], k: usize| ring[k % (n + 1)];
    let mut negative = 0.0;
    let window = (4.0 * omega / dt).ceil() as usize + n;
    let mut window_max = 0.0_f64;
    let mut since_reset = 0usize;
    for i in 0..MAX_STEPS {
        let xi = at(&ring, i);
        let next = if i >= n {
            xi - 0.5 * dt * (at(&ring, i - n) + at(&ring, i + 1 - n))
        } else {
            xi
        };
        negative += neg_part_integral(xi, next, dt);
        ring[(i + 1) % (n + 1)] = next;
        window_max = window_max.max(next.abs());
        since_reset += 1;
        if since_reset >= window {
            if window_max < TAIL && i > 2 * window {
                return Ok(1.0 + 2.0 * negative);
            }
            window_max = 0.0;
            since_reset = 0;
        }
    }
    Err(Error::Domain(format!(
        "sigma({omega}) did not settle within {MAX_STEPS} steps"
    )))
}

/// Integral of `max(-x, 0)` for x linear between `u` and `v` over a step.
fn neg_part_integral(u: f64, v: f64, dt: f64) -> f64 {
    match (u < 0.0, v < 0.0) {
        (false, false) => 0.0,
        (true, true) => -(u + v) * 0.5 * dt,
        (true, false) => {
            let frac = u / (u - v);
            -u * 0.5 * frac * dt
        }
        (false, true) => {
            let frac = v / (v - u);
            -v * 0.5 * frac * dt
        }
    }
}

/// The omega grid `[0, pi/2 - 0.01]` and sigma on it, computed once.
pub fn sigma_grid() -> &'static [(f64, f64)] {
    static GRID: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    GRID.get_or_init(|| {
        let hi = FRAC_PI_2 - 0.01;
        (0..SIGMA_GRID_POINTS)
            .into_par_iter()
            .map(|i| {
                let w = hi * i as f64 / (SIGMA_GRID_POINTS - 1) as f64;
                (w, compute_sigma(w).expect("grid stays below pi/2"))
            })
            .collect()
    })
}

/// Whether `F(l) = l - a l e^{sigma l} - b e^{tau l}` has a positive root.
///
/// `F(0) = -b < 0`, so any positive value of F certifies a root. F is sampled
/// at 10^4 log-spaced points on `(0, L]`, `L = 10 max(1, 1/sigma)`, and the
/// first sign change is refined by bisection. A root where F touches zero
/// without changing sign between samples can be missed.
pub fn char_root_positive(a: f64, b: f64, sigma: f64, tau: f64) -> bool {
    positive_root(a, b, sigma, tau).is_some()
}

pub(crate) fn positive_root(a: f64, b: f64, sigma: f64, tau: f64) -> Option<f64> {
    let f = |l: f64| l - a * l * (sigma * l).exp() - b * (tau * l).exp();
    let big = 10.0 * if sigma > 0.0 { (1.0 / sigma).max(1.0) } else { 1.0 };
    let n = 10_000;
    let lo = big * 1e-8;
    let ratio = (big / lo).powf(1.0 / (n - 1) as f64);
    let mut prev = (0.0, f(0.0));
    let mut l = lo;
    for _ in 0..n {
        let v = f(l);
        if v >= 0.0 {
            if v == 0.0 {
                return Some(l);
            }
            let (mut x0, mut x1) = (prev.0, l);
            while x1 - x0 > 1e-10 {
                let mid = 0.5 * (x0 + x1);
                if f(mid) < 0.0 {
                    x0 = mid;
                } else {
                    x1 = mid;
                }
            }
            return Some(0.5 * (x0 + x1));
        }
        prev = (l, v);
        l *= ratio;
    }
    None
}

/// Largest value of F over the scan grid (negative when no root is found).
pub(crate) fn char_max(a: f64, b: f64, sigma: f64, tau: f64) -> f64 {
    let f = |l: f64| l - a * l * (sigma * l).exp() - b * (tau * l).exp();
    let big = 10.0 * if sigma > 0.0 { (1.0 / sigma).max(1.0) } else { 1.0 };
    let n = 10_000;
    let lo = big * 1e-8;
    let ratio = (big / lo).powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| f(lo * ratio.powi(i))).fold(f(0.0), f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_is_one_up_to_inverse_e() {
        assert_eq!(compute_sigma(0.0).unwrap(), 1.0);
        assert_eq!(compute_sigma(1.0 / E).unwrap(), 1.0);
    }

    #[test]
    fn sigma_blows_up_near_half_pi() {
        assert!(compute_sigma(1.5).unwrap() > 10.0);
        assert!(matches!(compute_sigma(FRAC_PI_2), Err(Error::Domain(_))));
        assert!(compute_sigma(-0.1).is_err());
    }

    #[test]
    fn sigma_just_above_inverse_e_is_close_to_one() {
        let s = compute_sigma(0.4).unwrap();
        assert!((1.0..1.01).contains(&s), "{s}");
    }

    #[test]
    fn sigma_is_non_decreasing() {
        let vals: Vec<f64> = (0..50).map(|i| compute_sigma(1.5 * i as f64 / 49.0).unwrap()).collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{vals:?}");
        }
    }

    #[test]
    fn char_root_examples() {
        assert!(char_root_positive(0.1, 0.01, 0.1, 0.1));
        assert!(!char_root_positive(0.9, 1.0, 1.0, 1.0));
        let r = positive_root(0.0, 0.7, 0.0, 0.0).unwrap();
        assert!((r - 0.7).abs() < 1e-9);
        assert!(char_max(0.9, 1.0, 1.0, 1.0) < 0.0);
    }
}
