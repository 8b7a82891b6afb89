//! Discrete PID control of the actuator forces.
//!
//! Each actuator regulates its corner's suspension travel to a zero
//! setpoint, so the error is `e = -(Zs - Zu)`. The integral uses the
//! trapezoidal rule and the derivative a backward difference; on the first
//! sample the derivative is zero and the integral is `e·dt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vehicle::{FC_OUT_TRAVEL, QC_OUT_TRAVEL};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub const fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("PID gain {name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.kp, self.ki, self.kd]
    }

    pub fn from_slice(genes: &[f64]) -> Self {
        Self::new(genes[0], genes[1], genes[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
    pub initialized: bool,
}

impl PidState {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// One controller sample. Returns the force and the advanced state.
pub fn pid_step(gains: &PidGains, state: &PidState, error: f64, dt: f64) -> Result<(f64, PidState)> {
    if !error.is_finite() {
        return Err(Error::NumericDomain(format!("PID error input {error}")));
    }
    if !(dt > 0.0) {
        return Err(Error::NumericDomain(format!("PID step dt = {dt}")));
    }
    let (integral, derivative) = if state.initialized {
        (
            state.integral + 0.5 * (error + state.prev_error) * dt,
            (error - state.prev_error) / dt,
        )
    } else {
        (error * dt, 0.0)
    };
    let u = gains.kp * error + gains.ki * integral + gains.kd * derivative;
    Ok((
        u,
        PidState {
            integral,
            prev_error: error,
            initialized: true,
        },
    ))
}

/// A PID loop with its own state and an optional anti-windup clamp on `|∫e|`.
#[derive(Debug, Clone, PartialEq)]
pub struct PidController {
    pub gains: PidGains,
    pub state: PidState,
    pub integral_limit: Option<f64>,
}

impl PidController {
    pub fn new(gains: PidGains) -> Result<Self> {
        gains.validate()?;
        Ok(Self {
            gains,
            state: PidState::default(),
            integral_limit: None,
        })
    }

    pub fn step(&mut self, error: f64, dt: f64) -> Result<f64> {
        let (mut u, mut next) = pid_step(&self.gains, &self.state, error, dt)?;
        if let Some(limit) = self.integral_limit {
            let clamped = next.integral.clamp(-limit, limit);
            u += self.gains.ki * (clamped - next.integral);
            next.integral = clamped;
        }
        self.state = next;
        Ok(u)
    }
}

/// Feedback law from sampled system outputs to actuator forces.
pub trait Controller {
    fn actuator_count(&self) -> usize;

    fn reset(&mut self);

    /// Compute one force per actuator from the sampled output vector.
    fn update(&mut self, outputs: &[f64], dt: f64, forces: &mut [f64]) -> Result<()>;
}

/// Independent PID loops, each fed by one suspension-travel output.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelPid {
    travel_rows: Vec<usize>,
    loops: Vec<PidController>,
}

impl TravelPid {
    pub fn new(travel_rows: Vec<usize>, gains: &[PidGains]) -> Result<Self> {
        if travel_rows.len() != gains.len() {
            return Err(Error::Dimension(format!(
                "{} travel outputs for {} gain sets",
                travel_rows.len(),
                gains.len()
            )));
        }
        let loops = gains.iter().map(|g| PidController::new(*g)).collect::<Result<_>>()?;
        Ok(Self { travel_rows, loops })
    }

    pub fn with_integral_limit(mut self, limit: Option<f64>) -> Self {
        for l in &mut self.loops {
            l.integral_limit = limit;
        }
        self
    }

    pub fn gains(&self) -> Vec<PidGains> {
        self.loops.iter().map(|l| l.gains).collect()
    }
}

impl Controller for TravelPid {
    fn actuator_count(&self) -> usize {
        self.loops.len()
    }

    fn reset(&mut self) {
        for l in &mut self.loops {
            l.state.reset();
        }
    }

    fn update(&mut self, outputs: &[f64], dt: f64, forces: &mut [f64]) -> Result<()> {
        for ((pid, &row), f) in self.loops.iter_mut().zip(&self.travel_rows).zip(forces.iter_mut()) {
            *f = pid.step(-outputs[row], dt)?;
        }
        Ok(())
    }
}

/// Quarter-car controller on the suspension-travel output.
pub fn make_qc_controller(gains: PidGains) -> Result<TravelPid> {
    TravelPid::new(vec![QC_OUT_TRAVEL], &[gains])
}

/// One PID per full-car corner in `fl, fr, rl, rr` order.
pub fn make_fc_controller(gains: [PidGains; 4]) -> Result<TravelPid> {
    TravelPid::new((FC_OUT_TRAVEL..FC_OUT_TRAVEL + 4).collect(), &gains)
}
