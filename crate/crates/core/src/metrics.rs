//! Ride-comfort and road-holding figures of merit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::road::RoadScenario;
use crate::sim::Trajectory;
use crate::vehicle::FC_PITCH;
use crate::vehicle::FC_ROLL;
use crate::vehicle::ModelKind;

/// Default settling band on sprung displacement (m).
pub const DEFAULT_SETTLING_BAND: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RideFrequencies {
    pub ride_rate: f64,
    pub natural_freq: f64,
    pub damping_ratio: f64,
    /// `None` when the mode is critically damped or overdamped.
    pub damped_freq: Option<f64>,
}

impl RideFrequencies {
    /// Damped frequency, taking a non-oscillating mode as 0 Hz.
    pub fn damped_or_zero(&self) -> f64 {
        self.damped_freq.unwrap_or(0.0)
    }
}

/// Series ride rate, ride frequency, damping ratio and damped frequency of
/// one suspension corner carrying `ms`.
pub fn ride_frequencies(ks: f64, kt: f64, cs: f64, ms: f64) -> Result<RideFrequencies> {
    for (name, v) in [("ks", ks), ("kt", kt), ("ms", ms)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NumericDomain(format!("{name} = {v}")));
        }
    }
    if !(cs >= 0.0 && cs.is_finite()) {
        return Err(Error::NumericDomain(format!("cs = {cs}")));
    }
    let ride_rate = ks * kt / (ks + kt);
    let natural_freq = (ride_rate / ms).sqrt() / (2.0 * PI);
    let damping_ratio = cs / (4.0 * ks * ms).sqrt();
    Ok(RideFrequencies {
        ride_rate,
        natural_freq,
        damping_ratio,
        damped_freq: damped(natural_freq, damping_ratio),
    })
}

/// Natural frequency, damping ratio and damped frequency of a single-DOF mode
/// with the given stiffness, damping and inertia.
pub fn modal_frequencies(stiffness: f64, damping: f64, inertia: f64) -> RideFrequencies {
    let natural_freq = (stiffness / inertia).sqrt() / (2.0 * PI);
    let damping_ratio = damping / (2.0 * (stiffness * inertia).sqrt());
    RideFrequencies {
        ride_rate: stiffness,
        natural_freq,
        damping_ratio,
        damped_freq: damped(natural_freq, damping_ratio),
    }
}

fn damped(fn_: f64, zeta: f64) -> Option<f64> {
    (zeta < 1.0).then(|| fn_ * (1.0 - zeta * zeta).sqrt())
}

/// Root mean square of the samples (0 for an empty series).
pub fn rms_abs(series: &[f64]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    (series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64).sqrt()
}

pub fn max_abs(series: &[f64]) -> f64 {
    series.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Time, measured from `window.0` (the last event centre), after which the
/// series stays within `±band`; never earlier than `window.1` (the last
/// event's trailing edge). Returns `f64::INFINITY` if the series ends outside
/// the band. The band crossing is linearly interpolated between samples.
pub fn settling_time(times: &[f64], series: &[f64], window: Option<(f64, f64)>, band: f64) -> f64 {
    let (center, end) = window.unwrap_or((0.0, 0.0));
    let last_out = series.iter().rposition(|v| v.abs() > band);
    let settled_at = match last_out {
        None => times.first().copied().unwrap_or(0.0),
        Some(j) if j + 1 == series.len() => return f64::INFINITY,
        Some(j) => {
            let (a, b) = (series[j].abs(), series[j + 1].abs());
            times[j] + (a - band) / (a - b) * (times[j + 1] - times[j])
        }
    };
    settled_at.max(end) - center
}

/// Central differences inside, one-sided differences at the ends.
pub fn jerk_series(accel: &[f64], dt: f64) -> Vec<f64> {
    let n = accel.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut j = Vec::with_capacity(n);
    j.push((accel[1] - accel[0]) / dt);
    for k in 1..n - 1 {
        j.push((accel[k + 1] - accel[k - 1]) / (2.0 * dt));
    }
    j.push((accel[n - 1] - accel[n - 2]) / dt);
    j
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rms_sprung_accel: f64,
    pub peak_sprung_accel: f64,
    pub peak_sprung_disp: f64,
    pub peak_travel: Vec<f64>,
    pub peak_unsprung_disp: Vec<f64>,
    pub peak_jerk: f64,
    pub peak_force: Vec<f64>,
    /// `None` when the sprung mass never settles inside the band.
    pub settling_time: Option<f64>,
    /// Full car only (rad).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_pitch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_roll: Option<f64>,
}

impl MetricsReport {
    pub fn from_trajectory(traj: &Trajectory, scenario: &RoadScenario, band: f64) -> Self {
        let sprung = traj.state_series(0);
        let unsprung_states: &[usize] = match traj.model {
            ModelKind::Qc => &[2],
            ModelKind::Fc => &[6, 8, 10, 12],
        };
        let settling = settling_time(&traj.times, &sprung, scenario.last_event_window(), band);
        let (peak_pitch, peak_roll) = match traj.model {
            ModelKind::Qc => (None, None),
            ModelKind::Fc => (
                Some(max_abs(&traj.state_series(FC_PITCH))),
                Some(max_abs(&traj.state_series(FC_ROLL))),
            ),
        };
        Self {
            rms_sprung_accel: rms_abs(&traj.sprung_accel),
            peak_sprung_accel: max_abs(&traj.sprung_accel),
            peak_sprung_disp: max_abs(&sprung),
            peak_travel: traj.travel.iter().map(|t| max_abs(t)).collect(),
            peak_unsprung_disp: unsprung_states.iter().map(|&i| max_abs(&traj.state_series(i))).collect(),
            peak_jerk: max_abs(&traj.jerk),
            peak_force: (0..traj.n_forces()).map(|j| max_abs(&traj.force_series(j))).collect(),
            settling_time: settling.is_finite().then_some(settling),
            peak_pitch,
            peak_roll,
        }
    }
}
