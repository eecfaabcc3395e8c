//! Method-of-steps integrator for
//! `x'(t) = sum a_k(t) x'(g_k(t)) - sum b_k(t) x(h_k(t)) - int_{h(t)}^t K(t,s) x(s) ds + f(t)`.
//!
//! Delayed values of `x` are read by linear interpolation of the stored
//! grid, delayed values of `x'` by piecewise-constant lookup (solutions are
//! only absolutely continuous, so `x'` is not interpolated). Each step solves
//! the implicit trapezoidal update for `(x, x')` by fixed-point iteration;
//! the neutral part contracts with factor `sum sup |a_k| < 1`.

mod decay;
mod diagnostics;
mod threshold;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use decay::{estimate_decay, Classification, DecayEstimate, GAMMA_MIN, R2_MIN};
pub use diagnostics::{lemma4_check, lemma9_check, representation_check};
pub use threshold::{aligned_dt, bisect_threshold, Oracle, SimConfig};

use crate::equation::{HistorySpec, NeutralEquation};
use crate::error::{Error, Result};
use crate::funcmodel::Coefficient;

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITER: usize = 100;
/// Delayed arguments this close to a grid node (in units of the local step)
/// are read at the node.
const SNAP: f64 = 1e-7;
const MAX_POINTS: usize = 50_000_000;

/// Time grid of an integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Grid {
    /// `t_i = t0 + i dt`
    Uniform { dt: f64 },
    /// `t_i = t0 (1 + eta)^i`; keeps proportional delays resolved over long
    /// horizons. Needs `t0 > 0`.
    Geometric { eta: f64 },
}

impl Grid {
    pub const DEFAULT_ETA: f64 = 1e-3;

    fn node(&self, t0: f64, i: usize) -> f64 {
        match *self {
            Grid::Uniform { dt } => t0 + i as f64 * dt,
            Grid::Geometric { eta } => t0 * (1.0 + eta).powi(i as i32),
        }
    }

    /// Fractional grid index of `s >= t0`.
    fn position(&self, t0: f64, s: f64) -> f64 {
        match *self {
            Grid::Uniform { dt } => (s - t0) / dt,
            Grid::Geometric { eta } => (s / t0).ln() / eta.ln_1p(),
        }
    }

    fn points(&self, t0: f64, t_end: f64) -> f64 {
        self.position(t0, t_end) - 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub grid: Grid,
    pub method: String,
    pub fingerprint: String,
}

/// Samples of a solution on the integration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// Right-derivative values used by the scheme.
    pub xdot: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("trajectories are never empty")
    }

    /// `x` at `s` by linear interpolation; `s` must lie in the grid span.
    pub fn x_at(&self, s: f64) -> f64 {
        let j = self.t.partition_point(|&t| t <= s);
        if j == 0 {
            return self.x[0];
        }
        if j >= self.t.len() {
            return *self.x.last().unwrap();
        }
        let (t0, t1) = (self.t[j - 1], self.t[j]);
        let w = (s - t0) / (t1 - t0);
        self.x[j - 1] * (1.0 - w) + self.x[j] * w
    }

    /// CSV with header `t,x,xdot`, 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(40 * self.len() + 16);
        out.push_str("t,x,xdot\n");
        for i in 0..self.len() {
            out.push_str(&format!("{:.8e},{:.8e},{:.8e}\n", self.t[i], self.x[i], self.xdot[i]));
        }
        out
    }

    /// SHA-256 of the raw sample bits; equal digests mean bit-identical runs.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in self.t.iter().chain(&self.x).chain(&self.xdot) {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Solution of `eq` with history `hist` on `[t0, t_end]` with step `dt`.
pub fn integrate(
    eq: &NeutralEquation,
    hist: &HistorySpec,
    t_end: f64,
    dt: f64,
    forcing: Option<&Coefficient>,
) -> Result<Trajectory> {
    integrate_on(eq, hist, t_end, Grid::Uniform { dt }, forcing)
}

/// As [`integrate`] on an arbitrary grid.
pub fn integrate_on(
    eq: &NeutralEquation,
    hist: &HistorySpec,
    t_end: f64,
    grid: Grid,
    forcing: Option<&Coefficient>,
) -> Result<Trajectory> {
    let x0 = hist.phi.eval(eq.t0)?;
    Solver::new(eq, hist, forcing, grid, t_end, x0)?.run()
}

/// Fundamental function `X(., s)`: zero history before `s` and `X(s, s) = 1`.
pub fn fundamental(eq: &NeutralEquation, s: f64, t_end: f64, dt: f64) -> Result<Trajectory> {
    if s < eq.t0 {
        return Err(Error::Setup(format!(
            "fundamental function needs s >= t0 (s = {s}, t0 = {})",
            eq.t0
        )));
    }
    let mut shifted = eq.clone();
    shifted.t0 = s;
    let zero = HistorySpec::zero();
    Solver::new(&shifted, &zero, None, Grid::Uniform { dt }, t_end, 1.0)?.run()
}

struct Solver<'a> {
    eq: &'a NeutralEquation,
    hist: &'a HistorySpec,
    forcing: Option<&'a Coefficient>,
    grid: Grid,
    t0: f64,
    n_steps: usize,
    t: Vec<f64>,
    x: Vec<f64>,
    xd: Vec<f64>,
    /// Quadrature spacing for the part of a kernel window before t0.
    hist_step: f64,
}

impl<'a> Solver<'a> {
    fn new(
        eq: &'a NeutralEquation,
        hist: &'a HistorySpec,
        forcing: Option<&'a Coefficient>,
        grid: Grid,
        t_end: f64,
        x0: f64,
    ) -> Result<Self> {
        eq.check_parameters()?;
        let sum = eq.neutral_norm_sum();
        if !(sum < 1.0) {
            return Err(Error::IllPosed(sum));
        }
        let t0 = eq.t0;
        if !(t_end > t0) {
            return Err(Error::Setup(format!("t_end = {t_end} must exceed t0 = {t0}")));
        }
        let hist_step = match grid {
            Grid::Uniform { dt } if dt > 0.0 && dt.is_finite() => dt,
            Grid::Geometric { eta } if eta > 0.0 && eta.is_finite() && t0 > 0.0 => t0 * eta,
            Grid::Uniform { dt } => return Err(Error::Setup(format!("dt must be positive, got {dt}"))),
            Grid::Geometric { .. } => return Err(Error::Setup("geometric grid needs eta > 0 and t0 > 0".into())),
        };
        let n = grid.points(t0, t_end).ceil().max(1.0);
        if n >= MAX_POINTS as f64 {
            return Err(Error::Setup(format!(
                "{n} grid points exceed the limit of {MAX_POINTS}"
            )));
        }
        let n_steps = n as usize;
        let has_reciprocal = eq
            .neutral
            .iter()
            .map(|k| &k.a)
            .chain(eq.delay.iter().map(|k| &k.b))
            .chain(forcing)
            .any(|c| matches!(c, Coefficient::Reciprocal { .. }));
        if has_reciprocal && t0 <= 0.0 {
            return Err(Error::Setup("reciprocal coefficients need t0 > 0".into()));
        }
        let mut s = Solver {
            eq,
            hist,
            forcing,
            grid,
            t0,
            n_steps,
            t: Vec::with_capacity(n_steps + 1),
            x: Vec::with_capacity(n_steps + 1),
            xd: Vec::with_capacity(n_steps + 1),
            hist_step,
        };
        s.t.push(t0);
        s.x.push(x0);
        s.xd.push(0.0);
        Ok(s)
    }

    fn run(mut self) -> Result<Trajectory> {
        self.solve_first()?;
        for i in 0..self.n_steps {
            self.step(i)?;
        }
        if let Some(k) = self.x.iter().chain(&self.xd).position(|v| !v.is_finite()) {
            let k = k % self.t.len();
            return Err(Error::Setup(format!("non-finite value at t = {}", self.t[k])));
        }
        Ok(Trajectory {
            t: self.t,
            x: self.x,
            xdot: self.xd,
            meta: TrajectoryMeta {
                grid: self.grid,
                method: "method of steps, implicit trapezoid with fixed-point x'".into(),
                fingerprint: self.eq.fingerprint(),
            },
        })
    }

    /// Index `j` and weight `w` with `s = (1 - w) t_j + w t_{j+1}`, snapped to nodes.
    fn locate(&self, s: f64) -> (usize, f64) {
        let last = self.t.len() - 1;
        let u = self.grid.position(self.t0, s);
        let r = u.round();
        if (u - r).abs() <= SNAP {
            return ((r.max(0.0) as usize).min(last), 0.0);
        }
        let j = u.floor().max(0.0) as usize;
        if j >= last {
            return (last, 0.0);
        }
        let w = (s - self.t[j]) / (self.t[j + 1] - self.t[j]);
        (j, w.clamp(0.0, 1.0))
    }

    fn before_start(&self, s: f64) -> bool {
        s < self.t0 && self.t0 - s > SNAP * self.hist_step
    }

    fn x_at(&self, s: f64) -> f64 {
        if self.before_start(s) {
            return self.hist.phi.value(s);
        }
        match self.locate(s) {
            (j, w) if w == 0.0 => self.x[j],
            (j, w) => self.x[j] * (1.0 - w) + self.x[j + 1] * w,
        }
    }

    fn xd_at(&self, s: f64) -> f64 {
        if self.before_start(s) {
            return self.hist.psi.value(s);
        }
        self.xd[self.locate(s).0]
    }

    /// Right-hand side at node `i` without the kernel term, as `(rest, c)`
    /// with `x'(t_i) = rest + c x'(t_i)`: neutral terms whose argument lands
    /// on the node itself are linear in the unknown and are eliminated exactly.
    fn rhs_point(&self, i: usize) -> (f64, f64) {
        let t = self.t[i];
        let mut v = 0.0;
        let mut own = 0.0;
        for k in &self.eq.neutral {
            let g = k.g.at(t);
            let a = k.a.value(t);
            if !self.before_start(g) && self.locate(g).0 == i {
                own += a;
            } else {
                v += a * self.xd_at(g);
            }
        }
        for k in &self.eq.delay {
            v -= k.b.value(t) * self.x_at(k.h.at(t));
        }
        if let Some(f) = self.forcing {
            v += f.value(t);
        }
        (v, own)
    }

    fn xdot_at(&self, i: usize, kernel: f64) -> f64 {
        let (rest, own) = self.rhs_point(i);
        (rest - kernel) / (1.0 - own)
    }

    /// `int_{h(t)}^t K(t, s) x(s) ds` at the last stored node, trapezoidal.
    fn kernel_term(&self) -> f64 {
        let Some(kernel) = &self.eq.kernel else {
            return 0.0;
        };
        let i = self.t.len() - 1;
        let t = self.t[i];
        let lo = kernel.window().at(t);
        let mut sum = 0.0;
        if self.before_start(lo) {
            let hi = self.t0.min(t);
            let n = ((hi - lo) / self.hist_step).ceil().max(1.0) as usize;
            let h = (hi - lo) / n as f64;
            let f = |s: f64| kernel.at(t, s) * self.hist.phi.value(s);
            sum += 0.5 * h * (f(lo) + f(hi));
            for m in 1..n {
                sum += h * f(lo + m as f64 * h);
            }
        }
        let start = lo.max(self.t0);
        if start < t {
            let (j, w) = self.locate(start);
            if j < i {
                // Partial first cell [start, t_{j+1}].
                let xs = if w == 0.0 { self.x[j] } else { self.x_at(start) };
                let s0 = if w == 0.0 { self.t[j] } else { start };
                sum +=
                    0.5 * (self.t[j + 1] - s0) * (kernel.at(t, s0) * xs + kernel.at(t, self.t[j + 1]) * self.x[j + 1]);
                for m in j + 1..i {
                    let (a, b) = (self.t[m], self.t[m + 1]);
                    sum += 0.5 * (b - a) * (kernel.at(t, a) * self.x[m] + kernel.at(t, b) * self.x[m + 1]);
                }
            }
        }
        sum
    }

    fn converged(change: f64, scale: f64) -> bool {
        // The absolute floor stops last-bit cycling among subnormals.
        change <= FIXED_POINT_TOL * scale || change <= 1e-300
    }

    /// `x'(t0)` from `x(t0)` and the history.
    fn solve_first(&mut self) -> Result<()> {
        let kernel = self.kernel_term();
        let mut xd = self.hist.psi.value(self.t0);
        self.xd[0] = xd;
        for _ in 0..FIXED_POINT_MAX_ITER {
            let next = self.xdot_at(0, kernel);
            let change = (next - xd).abs();
            xd = next;
            self.xd[0] = xd;
            if Self::converged(change, xd.abs().max(self.x[0].abs())) {
                return Ok(());
            }
        }
        Err(Error::FixedPoint {
            t: self.t0,
            residual: (self.xdot_at(0, kernel) - xd).abs(),
        })
    }

    fn step(&mut self, i: usize) -> Result<()> {
        let t1 = self.grid.node(self.t0, i + 1);
        let h = t1 - self.t[i];
        let (xi, xdi) = (self.x[i], self.xd[i]);
        self.t.push(t1);
        self.x.push(xi + h * xdi);
        self.xd.push(xdi);
        let last = i + 1;
        // The kernel term is affine in the pending value x_{i+1}.
        let (k0, k1) = if self.eq.kernel.is_some() {
            let guess = self.x[last];
            self.x[last] = 0.0;
            let k0 = self.kernel_term();
            self.x[last] = 1.0;
            let k1 = self.kernel_term() - k0;
            self.x[last] = guess;
            (k0, k1)
        } else {
            (0.0, 0.0)
        };
        let mut residual = f64::INFINITY;
        for _ in 0..FIXED_POINT_MAX_ITER {
            let xd_new = self.xdot_at(last, k0 + k1 * self.x[last]);
            let x_new = xi + 0.5 * h * (xdi + xd_new);
            residual = (xd_new - self.xd[last]).abs().max((x_new - self.x[last]).abs());
            self.xd[last] = xd_new;
            self.x[last] = x_new;
            if Self::converged(residual, xd_new.abs().max(x_new.abs())) {
                return Ok(());
            }
        }
        Err(Error::FixedPoint { t: t1, residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::Delay;
    use std::f64::consts::{E, FRAC_PI_2};

    fn ode(b: f64) -> NeutralEquation {
        NeutralEquation::new(0.0).with_delay(Coefficient::constant(b), Delay::lag_of(0.0))
    }

    #[test]
    fn pure_decay() {
        let tr = integrate(&ode(1.0), &HistorySpec::default(), 1.0, 1e-3, None).unwrap();
        assert!((tr.t_end() - 1.0).abs() < 1e-12);
        assert!((tr.x.last().unwrap() - (-1.0f64).exp()).abs() < 1e-4);
        assert_eq!(tr.x[0], 1.0);
        assert_eq!(tr.xdot[0], -1.0);
    }

    #[test]
    fn oscillation_boundary_neither_decays_nor_grows() {
        let eq = NeutralEquation::new(0.0).with_delay(Coefficient::constant(1.0), Delay::lag_of(FRAC_PI_2));
        let dt = FRAC_PI_2 / 1571.0;
        let tr = integrate(&eq, &HistorySpec::default(), 100.0, dt, None).unwrap();
        let tail = tr.x[tr.len() * 3 / 4..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(tail > 0.3 && tail < 3.0, "{tail}");
    }

    #[test]
    fn neutral_term_without_lag_uses_the_fixed_point() {
        // x' - x'/3 + x/3 = 0 is x' = -x/2.
        let eq = NeutralEquation::new(0.0)
            .with_neutral(Coefficient::constant(1.0 / 3.0), Delay::lag_of(0.0))
            .with_delay(Coefficient::constant(1.0 / 3.0), Delay::lag_of(0.0));
        let tr = integrate(&eq, &HistorySpec::default(), 2.0, 1e-3, None).unwrap();
        assert!((tr.x.last().unwrap() - (-1.0f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn fundamental_function_of_the_ode() {
        let tr = fundamental(&ode(1.0), 0.0, 3.0, 1e-3).unwrap();
        for (t, x) in tr.t.iter().zip(&tr.x).step_by(100) {
            assert!((x - (-t).exp()).abs() < 1e-4);
        }
        assert!(fundamental(&ode(1.0), -1.0, 3.0, 1e-3).is_err());
    }

    #[test]
    fn fundamental_function_is_positive_under_the_one_over_e_test() {
        let eq = NeutralEquation::new(0.0).with_delay(Coefficient::constant(1.0 / E), Delay::lag_of(1.0));
        let tr = fundamental(&eq, 0.0, 50.0, 1e-3).unwrap();
        assert!(tr.x.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn uniform_kernel_matches_equivalent_ode_system() {
        // x' = -int_{t-1}^t x: with phi = 1 on the history the solution is smooth
        // enough that halving dt changes x(5) very little.
        let eq = NeutralEquation::new(0.0).with_kernel(crate::equation::Kernel::Uniform {
            c: 1.0,
            h: Delay::lag_of(1.0),
        });
        let a = integrate(&eq, &HistorySpec::default(), 5.0, 1e-2, None).unwrap();
        let b = integrate(&eq, &HistorySpec::default(), 5.0, 5e-3, None).unwrap();
        assert!((a.xdot[0] + 1.0).abs() < 1e-12);
        assert!((a.x.last().unwrap() - b.x.last().unwrap()).abs() < 1e-4);
    }

    #[test]
    fn geometric_grid_nodes() {
        let g = Grid::Geometric { eta: 1e-3 };
        assert!((g.position(1.0, g.node(1.0, 500)) - 500.0).abs() < 1e-9);
        let eq = NeutralEquation::new(1.0).with_delay(Coefficient::reciprocal(1.0), Delay::proportional(0.5));
        let tr = integrate_on(&eq, &HistorySpec::default(), 100.0, g, None).unwrap();
        assert!(tr.t_end() >= 100.0 && tr.t_end() < 100.2);
    }

    #[test]
    fn ill_posed_and_bad_setup() {
        let eq = NeutralEquation::constant(1.0, 1.0, 0.1, 1.0);
        assert!(matches!(
            integrate(&eq, &HistorySpec::default(), 1.0, 1e-3, None),
            Err(Error::IllPosed(_))
        ));
        let eq = NeutralEquation::constant(0.1, 1.0, 0.1, 1.0);
        assert!(integrate(&eq, &HistorySpec::default(), -1.0, 1e-3, None).is_err());
        assert!(integrate(&eq, &HistorySpec::default(), 1.0, 0.0, None).is_err());
        assert!(integrate_on(&eq, &HistorySpec::default(), 1.0, Grid::Geometric { eta: 1e-3 }, None).is_err());
    }

    #[test]
    fn deterministic_and_csv() {
        let eq = NeutralEquation::constant(0.3, 1.0, 0.5, 1.0);
        let a = integrate(&eq, &HistorySpec::default(), 3.0, 1e-2, None).unwrap();
        let b = integrate(&eq, &HistorySpec::default(), 3.0, 1e-2, None).unwrap();
        assert_eq!(a.digest(), b.digest());
        let csv = a.to_csv();
        assert!(csv.starts_with("t,x,xdot\n0.00000000e0,1.00000000e0,"));
        assert_eq!(csv.lines().count(), a.len() + 1);
    }
}
