use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::MIN_RESOLUTION;

/// `xi2(t) = -tau * int_0^t (f2 - 1)`, tabulated over one period `[-a0, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalCorrector {
    tau: f64,
    period: f64,
    /// `f2` at `t_k = -a0 + k a0 / M`, `k = 0..M`.
    f2: Vec<f64>,
    /// `xi2` at `t_k`, `k = 0..=M`; both ends are zero.
    values: Vec<f64>,
}

/// Samples `f2` at the `m` nodes `-a0 + k a0 / m` of one period.
pub fn sample_period(f2: impl Fn(f64) -> f64, a0: f64, m: usize) -> Vec<f64> {
    (0..m).map(|k| f2(-a0 + k as f64 * a0 / m as f64)).collect()
}

/// Cumulative trapezoid rule backwards from `t = 0` with the Euler-Maclaurin
/// end correction `-dt^2/12 (f'(b) - f'(a))`, where `f'` comes from a
/// sixth-order periodic central difference. The correction vanishes over a
/// full period, so the endpoints stay exactly periodic. The samples must be
/// positive with unit (arithmetic) mean, or the corrector would not be periodic.
pub fn temporal_corrector(tau: f64, f2: &[f64], a0: f64) -> Result<TemporalCorrector> {
    if !(tau > 0.0) || !(a0 > 0.0) {
        return Err(Error::InvalidArgument("tau and the temporal period must be positive".into()));
    }
    if f2.len() < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!("need at least {MIN_RESOLUTION} samples of f2")));
    }
    if let Some(index) = f2.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Positivity { index, value: f2[index] });
    }
    let m = f2.len();
    let mean = f2.iter().sum::<f64>() / m as f64;
    if (mean - 1.0).abs() > 1e-12 {
        return Err(Error::Compatibility { mean });
    }
    let dt = a0 / m as f64;
    let at = |k: usize| f2[k % m];
    let slope = |k: usize| {
        let d = |j: usize| at(k + j) - at(k + m - j);
        (0.75 * d(1) - 0.15 * d(2) + d(3) / 60.0) / dt
    };
    let end_slope = slope(0);
    let mut trapezoid = 0.0;
    let mut values = vec![0.0; m + 1];
    for k in (1..m).rev() {
        trapezoid += dt * (0.5 * (at(k) + at(k + 1)) - 1.0);
        let correction = -dt * dt / 12.0 * (end_slope - slope(k));
        values[k] = tau * (trapezoid + correction);
    }
    Ok(TemporalCorrector { tau, period: a0, f2: f2.to_vec(), values })
}

impl TemporalCorrector {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    pub fn f2_samples(&self) -> &[f64] {
        &self.f2
    }

    pub fn f2_min(&self) -> f64 {
        self.f2.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn f2_max(&self) -> f64 {
        self.f2.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation, extended periodically to every `t`.
    pub fn value(&self, t: f64) -> f64 {
        let m = self.f2.len();
        let s = (t / self.period).rem_euclid(1.0) * m as f64;
        let k = (s.floor() as usize).min(m - 1);
        let frac = s - k as f64;
        (1.0 - frac) * self.values[k] + frac * self.values[k + 1]
    }
}
