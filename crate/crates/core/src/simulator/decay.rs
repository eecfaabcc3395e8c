use serde::{Deserialize, Serialize};

use super::Trajectory;

/// Smallest fitted rate accepted as decay or growth.
pub const GAMMA_MIN: f64 = 1e-3;
pub const R2_MIN: f64 = 0.9;
const WINDOWS: usize = 20;
/// Window maxima below this are treated as exact zeros (underflowed decay).
const FLOOR: f64 = 1e-280;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Decaying,
    Growing,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    /// Fitted rate, positive when decaying; `+inf` when the tail vanished.
    pub gamma_hat: f64,
    #[serde(rename = "M_hat")]
    pub m_hat: f64,
    pub r2: f64,
    pub classification: Classification,
}

impl DecayEstimate {
    pub fn is_decaying(&self) -> bool {
        self.classification == Classification::Decaying
    }

    fn vanished() -> Self {
        DecayEstimate {
            gamma_hat: f64::INFINITY,
            m_hat: 0.0,
            r2: 1.0,
            classification: Classification::Decaying,
        }
    }
}

/// Fits `log max|x|` over 20 windows covering the last 75% of the horizon.
pub fn estimate_decay(traj: &Trajectory) -> DecayEstimate {
    estimate_decay_samples(&traj.t, &traj.x)
}

pub(crate) fn estimate_decay_samples(t: &[f64], x: &[f64]) -> DecayEstimate {
    let (t0, t_end) = (t[0], *t.last().unwrap());
    let start = t0 + 0.25 * (t_end - t0);
    let width = (t_end - start) / WINDOWS as f64;
    let mut maxima = [0.0_f64; WINDOWS];
    let first = t.partition_point(|&s| s < start);
    for (s, v) in t[first..].iter().zip(&x[first..]) {
        let w = (((s - start) / width) as usize).min(WINDOWS - 1);
        maxima[w] = maxima[w].max(v.abs());
    }
    let points: Vec<(f64, f64)> = maxima
        .iter()
        .enumerate()
        .filter(|(_, m)| **m >= FLOOR)
        .map(|(w, m)| (start + (w as f64 + 0.5) * width - t0, m.ln()))
        .collect();
    if points.len() < 2 {
        return DecayEstimate::vanished();
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let gamma_hat = -slope;
    // A tail that underflowed part way through is decay, even if the fit of
    // the remaining windows is short.
    let truncated = points.len() < WINDOWS && maxima[WINDOWS - 1] < FLOOR;
    let classification = if truncated || (gamma_hat >= GAMMA_MIN && r2 >= R2_MIN) {
        Classification::Decaying
    } else if gamma_hat <= -GAMMA_MIN && r2 >= R2_MIN {
        Classification::Growing
    } else {
        Classification::Inconclusive
    };
    DecayEstimate {
        gamma_hat,
        m_hat: intercept.exp(),
        r2,
        classification,
    }
}
