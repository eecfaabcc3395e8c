use ndde::simulator::{fundamental, integrate, integrate_on, Grid};
use ndde::{Coefficient, Delay, HistorySpec, Kernel, NeutralEquation};
use proptest::prelude::*;

fn equation() -> impl Strategy<Value = NeutralEquation> {
    (
        -0.8..0.8f64,
        prop_oneof![Just(0.5), Just(1.0)],
        0.0..2.0f64,
        prop_oneof![Just(0.0), Just(0.5), Just(1.5)],
        prop::option::of(0.0..1.0f64),
    )
        .prop_map(|(a, sigma, b, tau, kernel)| {
            let eq = NeutralEquation::new(0.0)
                .with_neutral(Coefficient::sinusoid(a * 0.8, a * 0.2, 1.0, 0.0), Delay::lag_of(sigma))
                .with_delay(Coefficient::constant(b), Delay::lag_of(tau));
            match kernel {
                Some(c) => eq.with_kernel(Kernel::Exponential {
                    c,
                    d: 1.0,
                    h: Delay::lag_of(1.0),
                }),
                None => eq,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solutions_are_homogeneous(eq in equation(), alpha in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64]) {
        let hist = HistorySpec {
            phi: Coefficient::sinusoid(1.0, 0.5, 2.0, 0.3),
            psi: Coefficient::sinusoid(0.0, 1.0, 2.0, 1.87),
        };
        let f = Coefficient::sinusoid(0.2, 0.3, 1.3, 0.0);
        let base = integrate(&eq, &hist, 10.0, 0.01, Some(&f)).unwrap();
        let scaled = integrate(&eq, &hist.scaled(alpha), 10.0, 0.01, Some(&f.scaled(alpha))).unwrap();
        let scale = base.x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (x, y) in base.x.iter().zip(&scaled.x) {
            prop_assert!((alpha * x - y).abs() <= 1e-10 * (alpha.abs() * scale), "{x} {y}");
        }
    }

    #[test]
    fn runs_are_bit_identical(eq in equation()) {
        let hist = HistorySpec::default();
        let one = integrate(&eq, &hist, 20.0, 0.01, None).unwrap();
        let two = integrate(&eq, &hist, 20.0, 0.01, None).unwrap();
        prop_assert_eq!(one.digest(), two.digest());
        prop_assert_eq!(&one.x, &two.x);
    }
}

/// Successive changes in `x(t_end)` as `dt` halves.
fn changes(eq: &NeutralEquation, hist: &HistorySpec, t_end: f64) -> Vec<f64> {
    let ends: Vec<f64> = (0..5)
        .map(|k| {
            let tr = integrate(eq, hist, t_end, 0.04 / 2f64.powi(k), None).unwrap();
            tr.x[tr.len() - 1]
        })
        .collect();
    ends.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

#[test]
fn halving_the_step_shrinks_the_change() {
    // Smooth data: consistent history, and a neutral term that only sees the
    // (smooth) history on the horizon.
    let smooth = HistorySpec {
        phi: Coefficient::sinusoid(0.0, 1.0, 1.0, std::f64::consts::FRAC_PI_2),
        psi: Coefficient::sinusoid(0.0, -1.0, 1.0, 0.0),
    };
    let problems = [
        NeutralEquation::new(0.0).with_delay(Coefficient::constant(0.7), Delay::lag_of(1.0)),
        NeutralEquation::new(0.0)
            .with_delay(Coefficient::constant(0.5), Delay::lag_of(0.0))
            .with_delay(Coefficient::sinusoid(0.3, 0.1, 2.0, 0.0), Delay::lag_of(0.5)),
        NeutralEquation::constant(0.3, 2.0, 0.5, 1.0),
    ];
    for eq in &problems {
        let d = changes(eq, &smooth, 1.6);
        for w in d.windows(2) {
            assert!(w[1] <= 0.6 * w[0], "{eq:?}: changes {d:?}");
        }
    }
}

#[test]
fn fundamental_function_starts_at_one_and_ignores_history() {
    let eq = NeutralEquation::constant(0.2, 0.5, 0.4, 1.0);
    let x = fundamental(&eq, 3.0, 10.0, 0.01).unwrap();
    assert_eq!(x.t[0], 3.0);
    assert_eq!(x.x[0], 1.0);
    // Until the first lag elapses, x' = -0.4 * 0 + 0.2 * 0.
    assert!((x.x_at(3.4) - 1.0).abs() < 1e-12);
}

#[test]
fn geometric_grid_tracks_the_uniform_one() {
    let eq = NeutralEquation::new(1.0)
        .with_neutral(Coefficient::constant(0.3), Delay::proportional(0.5))
        .with_delay(Coefficient::constant(0.5), Delay::proportional(0.8));
    let hist = HistorySpec::default();
    let geo = integrate_on(&eq, &hist, 20.0, Grid::Geometric { eta: 1e-4 }, None).unwrap();
    let uni = integrate(&eq, &hist, 20.0, 1e-3, None).unwrap();
    for t in [2.0, 5.0, 10.0, 20.0] {
        assert!(
            (geo.x_at(t) - uni.x_at(t)).abs() < 1e-3,
            "{t}: {} vs {}",
            geo.x_at(t),
            uni.x_at(t)
        );
    }
}
