//! Linear state-space models of the quarter car (2 DOF) and full car (7 DOF).
//!
//! Quarter-car state vector: `[Zs, Żs, Zu, Żu, Zr]`, inputs `[Żr, Fa]`.
//!
//! Full-car state vector: `[Z, Ż, θ, θ̇, φ, φ̇]` for the body (heave, pitch,
//! roll), then `[Zu, Żu]` for each corner in `fl, fr, rl, rr` order, then the
//! four road displacements. Inputs are the four road velocities followed,
//! for active systems, by the four actuator forces.
//!
//! Corner sprung displacement follows the small-angle kinematics
//! `Z_s = Z + p·θ + r·φ` with pitch lever `p = -a` (front) or `+b` (rear)
//! and roll lever `r = +w/2` (left) or `-w/2` (right). Actuator forces push
//! the body up and the wheel down.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of states of the quarter-car model.
pub const QC_STATES: usize = 5;
/// Number of states of the full-car model.
pub const FC_STATES: usize = 18;

/// Quarter-car output rows: `[Zr, Zs, Żs, Zu, Żu, Zs - Zu]`.
pub const QC_OUT_ROAD: usize = 0;
pub const QC_OUT_SPRUNG: usize = 1;
pub const QC_OUT_UNSPRUNG: usize = 3;
pub const QC_OUT_TRAVEL: usize = 5;

/// Full-car output rows: the 18 states, then corner sprung displacements,
/// then corner suspension travels.
pub const FC_OUT_CORNER_SPRUNG: usize = 18;
pub const FC_OUT_TRAVEL: usize = 22;

/// Full-car state indices of the body coordinates.
pub const FC_HEAVE: usize = 0;
pub const FC_PITCH: usize = 2;
pub const FC_ROLL: usize = 4;

/// Which vehicle model a system was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Qc,
    Fc,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Qc => f.write_str("qc"),
            ModelKind::Fc => f.write_str("fc"),
        }
    }
}

/// A road-contact corner. The quarter car has a single one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Wheel {
    #[serde(rename = "qc")]
    Single,
    #[serde(rename = "fl")]
    FrontLeft,
    #[serde(rename = "fr")]
    FrontRight,
    #[serde(rename = "rl")]
    RearLeft,
    #[serde(rename = "rr")]
    RearRight,
}

impl Wheel {
    /// Full-car corners in state order.
    pub const CORNERS: [Wheel; 4] = [
        Wheel::FrontLeft,
        Wheel::FrontRight,
        Wheel::RearLeft,
        Wheel::RearRight,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Wheel::Single => "qc",
            Wheel::FrontLeft => "fl",
            Wheel::FrontRight => "fr",
            Wheel::RearLeft => "rl",
            Wheel::RearRight => "rr",
        }
    }

    pub fn is_front(self) -> bool {
        matches!(self, Wheel::FrontLeft | Wheel::FrontRight)
    }

    pub fn is_left(self) -> bool {
        matches!(self, Wheel::FrontLeft | Wheel::RearLeft)
    }

    /// The corner on the other side of the car.
    pub fn mirrored(self) -> Wheel {
        match self {
            Wheel::Single => Wheel::Single,
            Wheel::FrontLeft => Wheel::FrontRight,
            Wheel::FrontRight => Wheel::FrontLeft,
            Wheel::RearLeft => Wheel::RearRight,
            Wheel::RearRight => Wheel::RearLeft,
        }
    }
}

impl fmt::Display for Wheel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Quarter-car physical parameters (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QcParams {
    pub sprung_mass: f64,
    pub unsprung_mass: f64,
    pub spring_stiffness: f64,
    pub damper_coeff: f64,
    pub tire_stiffness: f64,
    pub tire_damping: f64,
}

impl Default for QcParams {
    fn default() -> Self {
        Self {
            sprung_mass: 375.0,
            unsprung_mass: 59.0,
            spring_stiffness: 35_000.0,
            damper_coeff: 1_000.0,
            tire_stiffness: 190_000.0,
            tire_damping: 2.0,
        }
    }
}

impl QcParams {
    pub fn validate(&self) -> Result<()> {
        positive("sprung_mass", self.sprung_mass)?;
        positive("unsprung_mass", self.unsprung_mass)?;
        positive("spring_stiffness", self.spring_stiffness)?;
        positive("damper_coeff", self.damper_coeff)?;
        positive("tire_stiffness", self.tire_stiffness)?;
        positive("tire_damping", self.tire_damping)
    }
}

/// Full-car physical parameters (SI units). `unsprung_mass` is per corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FcParams {
    pub sprung_mass: f64,
    pub unsprung_mass: f64,
    pub front_spring: f64,
    pub rear_spring: f64,
    pub front_damper: f64,
    pub rear_damper: f64,
    pub tire_stiffness: f64,
    pub tire_damping: f64,
    pub roll_inertia: f64,
    pub pitch_inertia: f64,
    pub cg_to_front: f64,
    pub cg_to_rear: f64,
    pub track_width: f64,
}

impl Default for FcParams {
    fn default() -> Self {
        Self {
            sprung_mass: 1500.0,
            unsprung_mass: 59.0,
            front_spring: 35_000.0,
            // Printed value, an order of magnitude below the front spring.
            rear_spring: 3_800.0,
            front_damper: 1_000.0,
            rear_damper: 1_100.0,
            tire_stiffness: 190_000.0,
            tire_damping: 2.0,
            roll_inertia: 460.0,
            pitch_inertia: 2100.0,
            cg_to_front: 1.4,
            cg_to_rear: 1.7,
            track_width: 3.0,
        }
    }
}

impl FcParams {
    pub fn validate(&self) -> Result<()> {
        positive("sprung_mass", self.sprung_mass)?;
        positive("unsprung_mass", self.unsprung_mass)?;
        positive("front_spring", self.front_spring)?;
        positive("rear_spring", self.rear_spring)?;
        positive("front_damper", self.front_damper)?;
        positive("rear_damper", self.rear_damper)?;
        positive("tire_stiffness", self.tire_stiffness)?;
        positive("tire_damping", self.tire_damping)?;
        positive("roll_inertia", self.roll_inertia)?;
        positive("pitch_inertia", self.pitch_inertia)?;
        positive("cg_to_front", self.cg_to_front)?;
        positive("cg_to_rear", self.cg_to_rear)?;
        positive("track_width", self.track_width)
    }

    pub fn wheelbase(&self) -> f64 {
        self.cg_to_front + self.cg_to_rear
    }

    /// Spring stiffness at a corner.
    pub fn spring(&self, wheel: Wheel) -> f64 {
        if wheel.is_front() {
            self.front_spring
        } else {
            self.rear_spring
        }
    }

    /// Damping coefficient at a corner.
    pub fn damper(&self, wheel: Wheel) -> f64 {
        if wheel.is_front() {
            self.front_damper
        } else {
            self.rear_damper
        }
    }

    /// Pitch lever arm of a corner: `Z_s = Z + pitch_lever·θ + roll_lever·φ`.
    pub fn pitch_lever(&self, wheel: Wheel) -> f64 {
        if wheel.is_front() {
            -self.cg_to_front
        } else {
            self.cg_to_rear
        }
    }

    pub fn roll_lever(&self, wheel: Wheel) -> f64 {
        if wheel.is_left() {
            0.5 * self.track_width
        } else {
            -0.5 * self.track_width
        }
    }

    /// Static share of the sprung mass carried by one corner.
    pub fn corner_mass(&self, wheel: Wheel) -> f64 {
        let share = if wheel.is_front() {
            self.cg_to_rear
        } else {
            self.cg_to_front
        };
        0.5 * self.sprung_mass * share / self.wheelbase()
    }
}

/// Corner sprung displacements `[fl, fr, rl, rr]` for body heave, pitch and roll.
pub fn corner_displacements(params: &FcParams, heave: f64, pitch: f64, roll: f64) -> [f64; 4] {
    Wheel::CORNERS.map(|w| heave + params.pitch_lever(w) * pitch + params.roll_lever(w) * roll)
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain { name, value })
    }
}

/// What a column of `B` represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    RoadVelocity(Wheel),
    Force(Wheel),
}

/// Continuous-time LTI system `ẋ = Ax + Bu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
    model: ModelKind,
    inputs: Vec<InputKind>,
}

impl StateSpaceSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        state_labels: Vec<String>,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
        model: ModelKind,
        inputs: Vec<InputKind>,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        let p = c.nrows();
        let checks = [
            (a.ncols() == n, "A must be square"),
            (b.nrows() == n, "rows(B) must equal the state count"),
            (c.ncols() == n, "cols(C) must equal the state count"),
            (d.nrows() == p && d.ncols() == m, "D must be outputs x inputs"),
            (state_labels.len() == n, "one label per state"),
            (input_labels.len() == m, "one label per input"),
            (output_labels.len() == p, "one label per output"),
            (inputs.len() == m, "one input kind per input"),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(Error::Dimension((*msg).to_string()));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            state_labels,
            input_labels,
            output_labels,
            model,
            inputs,
        })
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn input_kinds(&self) -> &[InputKind] {
        &self.inputs
    }

    /// Wheels whose road velocity drives the system, in input-column order.
    pub fn road_wheels(&self) -> Vec<Wheel> {
        self.inputs
            .iter()
            .filter_map(|k| match k {
                InputKind::RoadVelocity(w) => Some(*w),
                InputKind::Force(_) => None,
            })
            .collect()
    }

    pub fn road_input_count(&self) -> usize {
        self.road_wheels().len()
    }

    pub fn actuator_count(&self) -> usize {
        self.n_inputs() - self.road_input_count()
    }

    pub fn is_active(&self) -> bool {
        self.actuator_count() > 0
    }

    /// State index of the sprung (heave) displacement; its velocity is the next state.
    pub fn sprung_state(&self) -> usize {
        0
    }

    /// Output rows holding suspension travel, one per corner.
    pub fn travel_outputs(&self) -> Vec<usize> {
        match self.model {
            ModelKind::Qc => vec![QC_OUT_TRAVEL],
            ModelKind::Fc => (FC_OUT_TRAVEL..FC_OUT_TRAVEL + 4).collect(),
        }
    }

    /// State indices of the unsprung displacements, one per corner.
    pub fn unsprung_states(&self) -> Vec<usize> {
        match self.model {
            ModelKind::Qc => vec![2],
            ModelKind::Fc => (0..4).map(|i| 6 + 2 * i).collect(),
        }
    }

    /// State indices of the road displacements, one per corner.
    pub fn road_states(&self) -> Vec<usize> {
        match self.model {
            ModelKind::Qc => vec![4],
            ModelKind::Fc => (14..18).collect(),
        }
    }

    /// Corner each travel output and unsprung state belongs to.
    pub fn corners(&self) -> Vec<Wheel> {
        match self.model {
            ModelKind::Qc => vec![Wheel::Single],
            ModelKind::Fc => Wheel::CORNERS.to_vec(),
        }
    }

    /// Copy of the system with the actuator columns removed.
    pub fn to_passive(&self) -> StateSpaceSystem {
        let keep: Vec<usize> = (0..self.n_inputs())
            .filter(|&j| matches!(self.inputs[j], InputKind::RoadVelocity(_)))
            .collect();
        let b = self.b.select_columns(keep.iter());
        let d = self.d.select_columns(keep.iter());
        Self {
            a: self.a.clone(),
            b,
            c: self.c.clone(),
            d,
            state_labels: self.state_labels.clone(),
            input_labels: keep.iter().map(|&j| self.input_labels[j].clone()).collect(),
            output_labels: self.output_labels.clone(),
            model: self.model,
            inputs: keep.iter().map(|&j| self.inputs[j]).collect(),
        }
    }
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| (*s).to_string()).collect()
}

/// Quarter-car state-space system; `active` adds the actuator force input.
pub fn build_qc_system(params: &QcParams, active: bool) -> Result<StateSpaceSystem> {
    params.validate()?;
    let QcParams {
        sprung_mass: ms,
        unsprung_mass: mu,
        spring_stiffness: ks,
        damper_coeff: cs,
        tire_stiffness: kt,
        tire_damping: ct,
    } = *params;

    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(5, 5, &[
        0.0,      1.0,      0.0,              0.0,              0.0,
        -ks / ms, -cs / ms, ks / ms,          cs / ms,          0.0,
        0.0,      0.0,      0.0,              1.0,              0.0,
        ks / mu,  cs / mu,  -(ks + kt) / mu,  -(cs + ct) / mu,  kt / mu,
        0.0,      0.0,      0.0,              0.0,              0.0,
    ]);

    let m = if active { 2 } else { 1 };
    let mut b = DMatrix::zeros(5, m);
    b[(3, 0)] = ct / mu;
    b[(4, 0)] = 1.0;
    let mut inputs = vec![InputKind::RoadVelocity(Wheel::Single)];
    let mut input_labels = labels(&["dZr"]);
    if active {
        b[(1, 1)] = 1.0 / ms;
        b[(3, 1)] = -1.0 / mu;
        inputs.push(InputKind::Force(Wheel::Single));
        input_labels.push("Fa".into());
    }

    #[rustfmt::skip]
    let c = DMatrix::from_row_slice(6, 5, &[
        0.0, 0.0, 0.0,  0.0, 1.0,
        1.0, 0.0, 0.0,  0.0, 0.0,
        0.0, 1.0, 0.0,  0.0, 0.0,
        0.0, 0.0, 1.0,  0.0, 0.0,
        0.0, 0.0, 0.0,  1.0, 0.0,
        1.0, 0.0, -1.0, 0.0, 0.0,
    ]);
    let d = DMatrix::zeros(6, m);

    StateSpaceSystem::new(
        a,
        b,
        c,
        d,
        labels(&["Zs", "dZs", "Zu", "dZu", "Zr"]),
        input_labels,
        labels(&["Zr", "Zs", "dZs", "Zu", "dZu", "travel"]),
        ModelKind::Qc,
        inputs,
    )
}

/// Full-car state-space system assembled from the corner force balance.
pub fn build_fc_system(params: &FcParams, active: bool) -> Result<StateSpaceSystem> {
    params.validate()?;
    let p = params;
    let n = FC_STATES;
    let m = if active { 8 } else { 4 };
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, m);

    // (position state, inertia) of heave, pitch and roll.
    let body = [
        (FC_HEAVE, p.sprung_mass),
        (FC_PITCH, p.pitch_inertia),
        (FC_ROLL, p.roll_inertia),
    ];
    for &(pos, _) in &body {
        a[(pos, pos + 1)] = 1.0;
    }

    for (i, &wheel) in Wheel::CORNERS.iter().enumerate() {
        let k = p.spring(wheel);
        let c = p.damper(wheel);
        let levers = [1.0, p.pitch_lever(wheel), p.roll_lever(wheel)];
        let zu = 6 + 2 * i;
        let vu = zu + 1;
        let road = 14 + i;

        for (q, &(pos_q, inertia)) in body.iter().enumerate() {
            let lq = levers[q];
            for (r, &(pos_r, _)) in body.iter().enumerate() {
                let lr = levers[r];
                a[(pos_q + 1, pos_r)] -= k * lq * lr / inertia;
                a[(pos_q + 1, pos_r + 1)] -= c * lq * lr / inertia;
            }
            a[(pos_q + 1, zu)] += k * lq / inertia;
            a[(pos_q + 1, vu)] += c * lq / inertia;

            a[(vu, pos_q)] += k * lq / p.unsprung_mass;
            a[(vu, pos_q + 1)] += c * lq / p.unsprung_mass;
            if active {
                b[(pos_q + 1, 4 + i)] = lq / inertia;
            }
        }

        a[(zu, vu)] = 1.0;
        a[(vu, zu)] -= (k + p.tire_stiffness) / p.unsprung_mass;
        a[(vu, vu)] -= (c + p.tire_damping) / p.unsprung_mass;
        a[(vu, road)] = p.tire_stiffness / p.unsprung_mass;

        b[(vu, i)] = p.tire_damping / p.unsprung_mass;
        b[(road, i)] = 1.0;
        if active {
            b[(vu, 4 + i)] = -1.0 / p.unsprung_mass;
        }
    }

    let mut c = DMatrix::zeros(n + 8, n);
    for i in 0..n {
        c[(i, i)] = 1.0;
    }
    for (i, &wheel) in Wheel::CORNERS.iter().enumerate() {
        let levers = [
            (FC_HEAVE, 1.0),
            (FC_PITCH, p.pitch_lever(wheel)),
            (FC_ROLL, p.roll_lever(wheel)),
        ];
        for (state, lever) in levers {
            c[(FC_OUT_CORNER_SPRUNG + i, state)] = lever;
            c[(FC_OUT_TRAVEL + i, state)] = lever;
        }
        c[(FC_OUT_TRAVEL + i, 6 + 2 * i)] = -1.0;
    }
    let d = DMatrix::zeros(n + 8, m);

    let mut state_labels = labels(&["Z", "dZ", "theta", "dtheta", "phi", "dphi"]);
    for w in Wheel::CORNERS {
        state_labels.push(format!("Zu_{w}"));
        state_labels.push(format!("dZu_{w}"));
    }
    for w in Wheel::CORNERS {
        state_labels.push(format!("Zr_{w}"));
    }
    let mut output_labels = state_labels.clone();
    output_labels.extend(Wheel::CORNERS.iter().map(|w| format!("Zs_{w}")));
    output_labels.extend(Wheel::CORNERS.iter().map(|w| format!("travel_{w}")));

    let mut inputs: Vec<InputKind> = Wheel::CORNERS.iter().map(|&w| InputKind::RoadVelocity(w)).collect();
    let mut input_labels: Vec<String> = Wheel::CORNERS.iter().map(|w| format!("dZr_{w}")).collect();
    if active {
        inputs.extend(Wheel::CORNERS.iter().map(|&w| InputKind::Force(w)));
        input_labels.extend(Wheel::CORNERS.iter().map(|w| format!("F_{w}")));
    }

    StateSpaceSystem::new(
        a,
        b,
        c,
        d,
        state_labels,
        input_labels,
        output_labels,
        ModelKind::Fc,
        inputs,
    )
}

/// Which input column carries the actuator force of each corner.
pub fn actuator_force_distribution(system: &StateSpaceSystem) -> Result<Vec<(Wheel, usize)>> {
    let map: Vec<(Wheel, usize)> = system
        .input_kinds()
        .iter()
        .enumerate()
        .filter_map(|(j, k)| match k {
            InputKind::Force(w) => Some((*w, j)),
            InputKind::RoadVelocity(_) => None,
        })
        .collect();
    if map.is_empty() {
        Err(Error::NoActuator)
    } else {
        Ok(map)
    }
}
