//! Shared fixtures for the benchmarks.

use ndde::{Coefficient, Delay, Kernel, NeutralEquation};

/// The `a = b = 1/3` comparison family.
pub fn comparison(sigma: f64, tau: f64) -> NeutralEquation {
    NeutralEquation::constant(1.0 / 3.0, sigma, 1.0 / 3.0, tau)
}

/// Two neutral and `m` delay terms with sinusoidal coefficients; the subset
/// criteria enumerate `2^m` index sets on it.
pub fn many_delays(m: usize) -> NeutralEquation {
    let mut eq = NeutralEquation::new(0.0)
        .with_neutral(Coefficient::sinusoid(0.1, 0.05, 1.0, 0.0), Delay::lag_of(0.5))
        .with_neutral(Coefficient::constant(-0.1), Delay::sin_lag(1.0, 0.2, 2.0));
    for k in 0..m {
        let lag = 0.2 + 0.15 * k as f64;
        eq = eq.with_delay(Coefficient::sinusoid(0.3, 0.1, 1.0 + k as f64, 0.0), Delay::lag_of(lag));
    }
    eq
}

pub fn distributed() -> NeutralEquation {
    NeutralEquation::new(0.0)
        .with_neutral(Coefficient::constant(0.2), Delay::lag_of(0.5))
        .with_delay(Coefficient::constant(0.3), Delay::lag_of(1.0))
        .with_kernel(Kernel::Exponential {
            c: 1.0,
            d: 1.0,
            h: Delay::lag_of(1.0),
        })
}

pub fn pantograph() -> NeutralEquation {
    NeutralEquation::new(1.0)
        .with_neutral(Coefficient::constant(0.4), Delay::proportional(0.5))
        .with_delay(Coefficient::reciprocal(1.0), Delay::proportional(0.7))
}
