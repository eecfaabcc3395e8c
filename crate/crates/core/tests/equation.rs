use ndde::equation::validate;
use ndde::{Coefficient, Delay, EquationFile, HistorySpec, Kernel, NeutralEquation};
use proptest::prelude::*;

fn delay() -> impl Strategy<Value = Delay> {
    prop_oneof![
        (0.0..3.0f64).prop_map(Delay::lag_of),
        (0.05..0.95f64).prop_map(Delay::proportional),
        (0.5..2.0f64, 0.0..0.5f64, 0.1..4.0f64).prop_map(|(tau, amp, omega)| Delay::sin_lag(tau, amp, omega)),
    ]
}

fn bounded_delay() -> impl Strategy<Value = Delay> {
    prop_oneof![
        (0.0..3.0f64).prop_map(Delay::lag_of),
        (0.5..2.0f64, 0.0..0.5f64, 0.1..4.0f64).prop_map(|(tau, amp, omega)| Delay::sin_lag(tau, amp, omega)),
    ]
}

fn coefficient() -> impl Strategy<Value = Coefficient> {
    prop_oneof![
        (-2.0..2.0f64).prop_map(Coefficient::constant),
        (-1.0..1.0f64, -1.0..1.0f64, 0.1..4.0f64, -3.0..3.0f64)
            .prop_map(|(c, amp, omega, phase)| Coefficient::sinusoid(c, amp, omega, phase)),
        (0.5..3.0f64, prop::collection::vec(-1.0..1.0f64, 1..4)).prop_map(|(period, values)| {
            let n = values.len();
            Coefficient::piecewise(period, (0..n).map(|i| period * i as f64 / n as f64).collect(), values)
        }),
    ]
}

fn kernel() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        (0.0..2.0f64, 0.0..3.0f64, bounded_delay()).prop_map(|(c, d, h)| Kernel::Exponential { c, d, h }),
        (0.0..2.0f64, bounded_delay()).prop_map(|(c, h)| Kernel::Uniform { c, h }),
    ]
}

fn file() -> impl Strategy<Value = EquationFile> {
    (
        prop::collection::vec((coefficient(), delay()), 0..3),
        prop::collection::vec((coefficient(), delay()), 0..3),
        prop::option::of(kernel()),
        prop::option::of((coefficient(), coefficient())),
        prop::option::of(coefficient()),
    )
        .prop_map(|(n, d, kernel, hist, forcing)| {
            let mut eq = NeutralEquation::new(1.0);
            for (a, g) in n {
                eq = eq.with_neutral(a, g);
            }
            for (b, h) in d {
                eq = eq.with_delay(b, h);
            }
            if let Some(k) = kernel {
                eq = eq.with_kernel(k);
            }
            let mut f = EquationFile::from_equation(&eq);
            f.history = hist.map(|(phi, psi)| HistorySpec { phi, psi });
            f.forcing = forcing;
            f
        })
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn spec_files_round_trip(f in file()) {
        let text = f.to_json();
        let back = EquationFile::from_json(&text).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn validate_is_total(f in file(), scale in -3.0..3.0f64) {
        // Push some parameters out of range as well.
        let mut eq = f.equation();
        if let Some(n) = eq.neutral.first_mut() {
            n.a = n.a.scaled(scale);
        }
        let findings = validate(&eq);
        prop_assert!(!findings.is_empty() || eq.neutral.is_empty());
    }

    #[test]
    fn induced_b_matches_quadrature(k in kernel(), t in 1.0..50.0f64) {
        let ib = k.induced_b(0.0);
        let lo = k.window().at(t);
        let q = simpson(|s| k.at(t, s), lo, t, 2_000);
        let v = ib.value(t);
        prop_assert!((v - q).abs() <= 1e-8 * v.abs().max(1e-300) + 1e-300, "{v} vs {q}");
        prop_assert!(v <= ib.sup.value + 1e-12 && v >= ib.inf.value - 1e-12);
        if let Some(c) = &ib.coefficient {
            prop_assert!((c.eval(t).unwrap() - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}

#[test]
fn unknown_keys_and_bad_parameters_are_rejected() {
    assert!(EquationFile::load(r#"{"t0": 0, "extra": 1}"#).is_err());
    assert!(EquationFile::load(
        r#"{"t0": 0, "delay": [{"b": {"kind": "constant", "c": 1}, "h": {"kind": "proportional", "lambda": 1.5}}]}"#
    )
    .is_err());
    let err = EquationFile::load("{\"t0\": 0,\n\"neutral\": 3}").unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}
