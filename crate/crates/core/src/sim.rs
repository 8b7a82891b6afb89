//! Fixed-step closed-loop simulation.
//!
//! Each step is a classical RK4 step of `ẋ = Ax + Bu`. Road velocities are
//! known functions of time and are evaluated at the RK4 stage times;
//! actuator forces are held over the step. Because the system is linear,
//! one RK4 step is an affine map of the state and the stage inputs, so the
//! map is assembled once per `(system, dt)` and reused for every step.
//!
//! The controller sees the outputs recorded at the previous sample.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::control::Controller;
use crate::error::{Error, Result};
use crate::metrics::jerk_series;
use crate::road::{step_count, RoadScenario, WheelProfile};
use crate::vehicle::{InputKind, ModelKind, StateSpaceSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub record_stride: usize,
    /// Symmetric per-actuator force limit (N).
    pub force_saturation: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 30.0,
            record_stride: 1,
            force_saturation: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("sim.dt must be > 0, got {}", self.dt)));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sim.duration must be >= dt, got {}",
                self.duration
            )));
        }
        if self.record_stride < 1 {
            return Err(Error::InvalidConfig("sim.record_stride must be >= 1".into()));
        }
        if let Some(limit) = self.force_saturation {
            if !(limit >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "sim.force_saturation must be >= 0, got {limit}"
                )));
            }
        }
        Ok(())
    }
}

/// Uniformly sampled simulation record. Multi-channel series are stored
/// sample-major: sample `k` of channel `i` is at `k * width + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model: ModelKind,
    /// Spacing of the recorded samples (`dt · record_stride`).
    pub sample_dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub outputs: Vec<f64>,
    pub road_inputs: Vec<f64>,
    pub forces: Vec<f64>,
    pub sprung_accel: Vec<f64>,
    pub jerk: Vec<f64>,
    /// Suspension travel per corner.
    pub travel: Vec<Vec<f64>>,
    pub state_labels: Vec<String>,
    pub output_labels: Vec<String>,
    pub road_labels: Vec<String>,
    pub force_labels: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_labels.len()
    }

    pub fn n_forces(&self) -> usize {
        self.force_labels.len()
    }

    pub fn n_road(&self) -> usize {
        self.road_labels.len()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        let n = self.n_states();
        &self.states[k * n..(k + 1) * n]
    }

    pub fn output(&self, k: usize) -> &[f64] {
        let p = self.n_outputs();
        &self.outputs[k * p..(k + 1) * p]
    }

    pub fn force(&self, k: usize) -> &[f64] {
        let f = self.n_forces();
        &self.forces[k * f..(k + 1) * f]
    }

    pub fn road_input(&self, k: usize) -> &[f64] {
        let r = self.n_road();
        &self.road_inputs[k * r..(k + 1) * r]
    }

    pub fn state_series(&self, i: usize) -> Vec<f64> {
        column(&self.states, self.n_states(), i)
    }

    pub fn output_series(&self, i: usize) -> Vec<f64> {
        column(&self.outputs, self.n_outputs(), i)
    }

    pub fn force_series(&self, j: usize) -> Vec<f64> {
        column(&self.forces, self.n_forces(), j)
    }
}

fn column(data: &[f64], width: usize, i: usize) -> Vec<f64> {
    data.iter().skip(i).step_by(width).copied().collect()
}

/// One RK4 step with inputs sampled at the step start, midpoint and end.
pub fn rk4_stage_step(
    system: &StateSpaceSystem,
    x: &DVector<f64>,
    u_start: &DVector<f64>,
    u_mid: &DVector<f64>,
    u_end: &DVector<f64>,
    dt: f64,
) -> Result<DVector<f64>> {
    let n = system.n_states();
    let m = system.n_inputs();
    if x.len() != n || u_start.len() != m || u_mid.len() != m || u_end.len() != m {
        return Err(Error::Dimension(format!(
            "rk4 step expects {n} states and {m} inputs"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: 0 });
    }
    let (a, b) = (&system.a, &system.b);
    let bu_mid = b * u_mid;
    let k1 = a * x + b * u_start;
    let k2 = a * (x + &k1 * (0.5 * dt)) + &bu_mid;
    let k3 = a * (x + &k2 * (0.5 * dt)) + &bu_mid;
    let k4 = a * (x + &k3 * dt) + b * u_end;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: 1 });
    }
    Ok(next)
}

/// Classical RK4 step with the input held over the step.
///
/// A non-finite state yields `Error::Divergence` with the step index relative
/// to this call (0 for the input, 1 for the result).
pub fn rk4_step(system: &StateSpaceSystem, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    rk4_stage_step(system, x, u, u, u, dt)
}

/// The RK4 step of a fixed `(system, dt)` as an affine map
/// `x' = Φx + G₀r(t) + Gₘr(t + dt/2) + G₁r(t + dt) + ΓF`.
#[derive(Debug, Clone)]
pub struct Propagator {
    n: usize,
    road: usize,
    force: usize,
    phi: Vec<f64>,
    g_start: Vec<f64>,
    g_mid: Vec<f64>,
    g_end: Vec<f64>,
    gamma: Vec<f64>,
}

impl Propagator {
    pub fn new(system: &StateSpaceSystem, dt: f64) -> Result<Self> {
        let n = system.n_states();
        let m = system.n_inputs();
        let road_cols: Vec<usize> = column_indices(system, true);
        let force_cols: Vec<usize> = column_indices(system, false);
        let zero_u = DVector::zeros(m);

        let mut phi = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            phi.set_column(j, &rk4_stage_step(system, &e, &zero_u, &zero_u, &zero_u, dt)?);
        }

        let zero_x = DVector::zeros(n);
        // Response to a unit input on column `j` applied at the selected stages.
        let response = |j: usize, stages: [bool; 3]| -> Result<DVector<f64>> {
            let mut e = DVector::zeros(m);
            e[j] = 1.0;
            let pick = |on: bool| if on { e.clone() } else { zero_u.clone() };
            rk4_stage_step(system, &zero_x, &pick(stages[0]), &pick(stages[1]), &pick(stages[2]), dt)
        };
        let assemble = |cols: &[usize], stages: [bool; 3]| -> Result<DMatrix<f64>> {
            let mut g = DMatrix::zeros(n, cols.len());
            for (c, &j) in cols.iter().enumerate() {
                g.set_column(c, &response(j, stages)?);
            }
            Ok(g)
        };
        let g_start = assemble(&road_cols, [true, false, false])?;
        let g_mid = assemble(&road_cols, [false, true, false])?;
        let g_end = assemble(&road_cols, [false, false, true])?;
        let gamma = assemble(&force_cols, [true, true, true])?;

        Ok(Self {
            n,
            road: road_cols.len(),
            force: force_cols.len(),
            phi: row_major(&phi),
            g_start: row_major(&g_start),
            g_mid: row_major(&g_mid),
            g_end: row_major(&g_end),
            gamma: row_major(&gamma),
        })
    }

    #[inline]
    pub fn step(&self, x: &[f64], r_start: &[f64], r_mid: &[f64], r_end: &[f64], forces: &[f64], out: &mut [f64]) {
        let (n, r, f) = (self.n, self.road, self.force);
        for i in 0..n {
            let mut acc = dot(&self.phi[i * n..(i + 1) * n], x);
            for j in 0..r {
                acc += self.g_start[i * r + j] * r_start[j] + self.g_mid[i * r + j] * r_mid[j] + self.g_end[i * r + j] * r_end[j];
            }
            for j in 0..f {
                acc += self.gamma[i * f + j] * forces[j];
            }
            out[i] = acc;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn column_indices(system: &StateSpaceSystem, road: bool) -> Vec<usize> {
    system
        .input_kinds()
        .iter()
        .enumerate()
        .filter(|(_, k)| matches!(k, InputKind::RoadVelocity(_)) == road)
        .map(|(j, _)| j)
        .collect()
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Nonzero entries of each row of `[C | D]`, with D columns reordered as road then force.
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn new(state_part: &DMatrix<f64>, input_part: &DMatrix<f64>, input_order: &[usize]) -> Self {
        let n = state_part.ncols();
        let rows = (0..state_part.nrows())
            .map(|i| {
                let mut row: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| state_part[(i, j)] != 0.0)
                    .map(|j| (j, state_part[(i, j)]))
                    .collect();
                for (slot, &j) in input_order.iter().enumerate() {
                    if input_part[(i, j)] != 0.0 {
                        row.push((n + slot, input_part[(i, j)]));
                    }
                }
                row
            })
            .collect();
        Self { rows }
    }

    /// `row · [x, r, F]`, summed state terms first.
    fn eval(&self, i: usize, x: &[f64], r: &[f64], f: &[f64]) -> f64 {
        let n = x.len();
        let nr = r.len();
        self.rows[i]
            .iter()
            .map(|&(j, c)| {
                let v = if j < n {
                    x[j]
                } else if j < n + nr {
                    r[j - n]
                } else {
                    f[j - n - nr]
                };
                c * v
            })
            .sum()
    }
}

pub fn simulate_passive(system: &StateSpaceSystem, scenario: &RoadScenario, config: &SimConfig) -> Result<Trajectory> {
    if system.is_active() {
        return Err(Error::ArityMismatch {
            controller: 0,
            system: system.actuator_count(),
        });
    }
    run(system, scenario, None, config)
}

pub fn simulate_active(
    system: &StateSpaceSystem,
    scenario: &RoadScenario,
    controller: &mut dyn Controller,
    config: &SimConfig,
) -> Result<Trajectory> {
    if controller.actuator_count() != system.actuator_count() || !system.is_active() {
        return Err(Error::ArityMismatch {
            controller: controller.actuator_count(),
            system: system.actuator_count(),
        });
    }
    run(system, scenario, Some(controller), config)
}

fn run(
    system: &StateSpaceSystem,
    scenario: &RoadScenario,
    mut controller: Option<&mut dyn Controller>,
    config: &SimConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let dt = config.dt;
    let stride = config.record_stride;
    let n = system.n_states();
    let p = system.n_outputs();
    let wheels = system.road_wheels();
    let profiles: Vec<WheelProfile> = wheels.iter().map(|&w| scenario.profile(w)).collect::<Result<_>>()?;
    let nr = wheels.len();
    let nf = system.actuator_count();

    let prop = Propagator::new(system, dt)?;
    let mut order = column_indices(system, true);
    order.extend(column_indices(system, false));
    let out_rows = SparseRows::new(&system.c, &system.d, &order);
    let accel_row = system.sprung_state() + 1;
    let accel = SparseRows::new(
        &system.a.rows(accel_row, 1).into_owned(),
        &system.b.rows(accel_row, 1).into_owned(),
        &order,
    );

    let steps = step_count(config.duration, dt);
    let records = steps / stride + 1;
    let mut traj = Trajectory {
        model: system.model(),
        sample_dt: dt * stride as f64,
        times: Vec::with_capacity(records),
        states: Vec::with_capacity(records * n),
        outputs: Vec::with_capacity(records * p),
        road_inputs: Vec::with_capacity(records * nr),
        forces: Vec::with_capacity(records * nf),
        sprung_accel: Vec::with_capacity(records),
        jerk: Vec::new(),
        travel: Vec::new(),
        state_labels: system.state_labels.clone(),
        output_labels: system.output_labels.clone(),
        road_labels: order[..nr].iter().map(|&j| system.input_labels[j].clone()).collect(),
        force_labels: order[nr..].iter().map(|&j| system.input_labels[j].clone()).collect(),
    };

    let eval_road = |t: f64, out: &mut [f64]| {
        for (o, prof) in out.iter_mut().zip(&profiles) {
            *o = prof.eval(t).1;
        }
    };

    let mut x = vec![0.0; n];
    let mut x_next = vec![0.0; n];
    let mut r0 = vec![0.0; nr];
    let mut rm = vec![0.0; nr];
    let mut r1 = vec![0.0; nr];
    let mut forces = vec![0.0; nf];
    let mut y = vec![0.0; p];
    let mut y_prev = vec![0.0; p];
    eval_road(0.0, &mut r0);

    if controller.is_some() {
        for (i, yi) in y_prev.iter_mut().enumerate() {
            *yi = out_rows.eval(i, &x, &r0, &forces);
        }
    }

    for k in 0..=steps {
        let t = k as f64 * dt;
        if let Some(ctrl) = controller.as_deref_mut() {
            ctrl.update(&y_prev, dt, &mut forces)?;
            if let Some(limit) = config.force_saturation {
                for f in &mut forces {
                    *f = f.clamp(-limit, limit);
                }
            }
        }
        let record = k % stride == 0;
        if record || controller.is_some() {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = out_rows.eval(i, &x, &r0, &forces);
            }
        }
        if record {
            traj.times.push(t);
            traj.states.extend_from_slice(&x);
            traj.outputs.extend_from_slice(&y);
            traj.road_inputs.extend_from_slice(&r0);
            traj.forces.extend_from_slice(&forces);
            traj.sprung_accel.push(accel.eval(0, &x, &r0, &forces));
        }
        if k == steps {
            break;
        }
        std::mem::swap(&mut y, &mut y_prev);

        eval_road(t + 0.5 * dt, &mut rm);
        eval_road((k + 1) as f64 * dt, &mut r1);
        prop.step(&x, &r0, &rm, &r1, &forces, &mut x_next);
        if !x_next.iter().sum::<f64>().is_finite() {
            return Err(Error::Divergence { step: k + 1 });
        }
        std::mem::swap(&mut x, &mut x_next);
        std::mem::swap(&mut r0, &mut r1);
    }

    traj.jerk = jerk_series(&traj.sprung_accel, traj.sample_dt);
    traj.travel = system.travel_outputs().iter().map(|&i| traj.output_series(i)).collect();
    Ok(traj)
}
