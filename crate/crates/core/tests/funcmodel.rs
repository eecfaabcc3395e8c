use ndde::funcmodel::{sampled_window_extrema, window_integral_range};
use ndde::{Coefficient, Delay};
use proptest::prelude::*;

fn coefficient() -> impl Strategy<Value = Coefficient> {
    prop_oneof![
        (-3.0..3.0f64).prop_map(Coefficient::constant),
        (-2.0..2.0f64, -1.5..1.5f64, 0.1..5.0f64, -3.0..3.0f64)
            .prop_map(|(c, amp, omega, phase)| Coefficient::sinusoid(c, amp, omega, phase)),
        (0.5..4.0f64, prop::collection::vec(-2.0..2.0f64, 1..5)).prop_map(|(period, values)| {
            let n = values.len();
            let breaks = (0..n).map(|i| period * i as f64 / n as f64).collect();
            Coefficient::piecewise(period, breaks, values)
        }),
        (-2.0..2.0f64).prop_map(Coefficient::reciprocal),
    ]
}

/// Adaptive Simpson on 64 panels (a single panel can be fooled by periodic
/// integrands); resolves the jumps of step functions by bisection.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const PANELS: usize = 64;
    let w = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| simpson_panel(f, a + i as f64 * w, a + (i + 1) as f64 * w, tol / PANELS as f64))
        .sum()
}

fn simpson_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn values_stay_within_certified_bounds(f in coefficient(), t0 in 0.5..5.0f64) {
        let sup = f.sup_bound(t0).value;
        let inf = f.inf_bound(t0).value;
        let norm = f.sup_norm(t0).value;
        for i in 0..10_000 {
            let t = t0 + i as f64 * 1e-2;
            let v = f.eval(t).unwrap();
            prop_assert!(v <= sup + 1e-12 && v >= inf - 1e-12, "{v} outside [{inf}, {sup}] at {t}");
            prop_assert!(v.abs() <= norm + 1e-12);
        }
    }

    #[test]
    fn integral_is_additive(f in coefficient(), x in 0.5..10.0f64, d1 in 0.0..5.0f64, d2 in 0.0..5.0f64) {
        let (y, z) = (x + d1, x + d1 + d2);
        let whole = f.integral(x, z).unwrap();
        let split = f.integral(x, y).unwrap() + f.integral(y, z).unwrap();
        prop_assert!((whole - split).abs() <= 1e-12 * whole.abs().max(1.0));
    }

    #[test]
    fn integral_matches_quadrature(f in coefficient(), x in 0.5..10.0f64, len in 0.01..6.0f64) {
        let exact = f.integral(x, x + len).unwrap();
        let g = |t: f64| f.eval(t).unwrap();
        let q = simpson(&g, x, x + len, 1e-12);
        prop_assert!((exact - q).abs() <= 1e-8 * exact.abs().max(1.0), "{exact} vs {q}");
    }

    #[test]
    fn sampled_window_extrema_stay_inside_exact_ones(
        c in 0.0..2.0f64, frac in 0.0..1.0f64, omega in 0.1..5.0f64, tau in 0.1..3.0f64,
    ) {
        let f = Coefficient::sinusoid(c, c * frac, omega, 0.0);
        let h = Delay::lag_of(tau);
        let exact = window_integral_range(&f, &h, 0.0).unwrap();
        prop_assert!(exact.sup.exact);
        let (inf, sup) = sampled_window_extrema(&f, &h, 0.0, 50.0, 5_000).unwrap();
        prop_assert!(!sup.exact);
        prop_assert!(sup.value <= exact.sup.value + 1e-12);
        prop_assert!(inf.value >= exact.inf.value - 1e-12);
    }
}

#[test]
fn negative_coefficients_have_no_window_supremum() {
    let f = Coefficient::sinusoid(0.1, 0.5, 1.0, 0.0);
    assert!(window_integral_range(&f, &Delay::lag_of(1.0), 0.0).is_err());
}
