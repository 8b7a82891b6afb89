//! GA fitness functions: the LQR quadratic trajectory cost and the
//! constraint-penalty cost `J = f + α·Σ max(0, gᵢ)`.
//!
//! Constraint margins follow the convention `gᵢ ≤ 0` ⇔ satisfied. Peak
//! quantities are maxima over the whole simulated horizon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{max_abs, modal_frequencies, ride_frequencies, rms_abs, RideFrequencies};
use crate::sim::Trajectory;
use crate::vehicle::{FcParams, ModelKind, Wheel};

/// Diagonal state and input penalties of `J = ½∫(xᵀQx + uᵀRu)dt`.
/// Input order is road velocities, then actuator forces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqrWeights {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

impl LqrWeights {
    pub fn new(q: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        let w = Self { q, r };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.iter().chain(&self.r).any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig("LQR weights must be finite and >= 0".into()));
        }
        if !self.q.iter().chain(&self.r).any(|&v| v > 0.0) {
            return Err(Error::InvalidConfig("at least one LQR weight must be positive".into()));
        }
        Ok(())
    }

    /// Shipped weights: heavy on body motion, light on wheels, none on the
    /// road states or road inputs, and a very small one on actuator force.
    pub fn default_for(model: ModelKind) -> Self {
        match model {
            ModelKind::Qc => Self {
                q: vec![1e4, 1e4, 100.0, 100.0, 0.0],
                r: vec![0.0, 1e-4],
            },
            ModelKind::Fc => {
                let mut q = vec![1e4; 6];
                q.extend([100.0; 8]);
                q.extend([0.0; 4]);
                let mut r = vec![0.0; 4];
                r.extend([1e-4; 4]);
                Self { q, r }
            }
        }
    }
}

/// Trapezoidal quadrature of `½(xᵀQx + uᵀRu)` over the recorded samples.
pub fn lqr_cost(traj: &Trajectory, weights: &LqrWeights) -> Result<f64> {
    let (n, nr, nf) = (traj.n_states(), traj.n_road(), traj.n_forces());
    if weights.q.len() != n || weights.r.len() != nr + nf {
        return Err(Error::Dimension(format!(
            "LQR weights are {}+{} but the trajectory has {n} states and {} inputs",
            weights.q.len(),
            weights.r.len(),
            nr + nf
        )));
    }
    let (r_road, r_force) = weights.r.split_at(nr);
    let integrand = |k: usize| -> f64 {
        let quad = |w: &[f64], v: &[f64]| w.iter().zip(v).map(|(w, v)| w * v * v).sum::<f64>();
        quad(&weights.q, traj.state(k)) + quad(r_road, traj.road_input(k)) + quad(r_force, traj.force(k))
    };
    let len = traj.len();
    if len < 2 {
        return Ok(0.0);
    }
    let mut sum = 0.5 * (integrand(0) + integrand(len - 1));
    for k in 1..len - 1 {
        sum += integrand(k);
    }
    Ok(0.5 * sum * traj.sample_dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    UpperBound,
    Range,
    Ordering,
}

/// One constraint of the penalty objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintSpec {
    pub id: u8,
    pub description: &'static str,
    pub kind: ConstraintKind,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub unit: &'static str,
}

impl ConstraintSpec {
    const fn upper(id: u8, description: &'static str, upper: f64, unit: &'static str) -> Self {
        Self {
            id,
            description,
            kind: ConstraintKind::UpperBound,
            lower: None,
            upper: Some(upper),
            unit,
        }
    }

    const fn range(id: u8, description: &'static str) -> Self {
        Self {
            id,
            description,
            kind: ConstraintKind::Range,
            lower: Some(COMFORT_BAND_HZ.0),
            upper: Some(COMFORT_BAND_HZ.1),
            unit: "Hz",
        }
    }

    /// Margin of a measured value: `value - upper`, or the larger of the two
    /// one-sided margins for a range. Orderings pass the difference through.
    pub fn margin(&self, value: f64) -> f64 {
        match self.kind {
            ConstraintKind::UpperBound => value - self.upper.unwrap_or(0.0),
            ConstraintKind::Range => {
                (self.lower.unwrap_or(f64::NEG_INFINITY) - value).max(value - self.upper.unwrap_or(f64::INFINITY))
            }
            ConstraintKind::Ordering => value,
        }
    }

    /// Divisor used when margins are normalized.
    pub fn scale(&self) -> f64 {
        match self.kind {
            ConstraintKind::Ordering => 1.0,
            _ => self.upper.unwrap_or(1.0),
        }
    }
}

pub const COMFORT_BAND_HZ: (f64, f64) = (0.8, 1.5);

pub const QC_CONSTRAINTS: [ConstraintSpec; 8] = [
    ConstraintSpec::upper(1, "RMS sprung acceleration", 0.315, "m/s^2"),
    ConstraintSpec::upper(2, "max suspension travel", 0.127, "m"),
    ConstraintSpec::upper(3, "max sprung acceleration", 4.5, "m/s^2"),
    ConstraintSpec::upper(4, "max tire deflection", 0.0508, "m"),
    ConstraintSpec::upper(5, "max unsprung displacement", 0.07, "m"),
    ConstraintSpec::range(6, "damped ride frequency"),
    ConstraintSpec::upper(7, "max sprung jerk", 18.0, "m/s^3"),
    ConstraintSpec::upper(8, "max actuator force", 400.0, "N"),
];

/// Full-car constraints; indices 7–10 are not used.
pub const FC_CONSTRAINTS: [ConstraintSpec; 20] = [
    ConstraintSpec::upper(1, "RMS heave acceleration", 0.315, "m/s^2"),
    ConstraintSpec::upper(2, "max suspension travel fl", 0.127, "m"),
    ConstraintSpec::upper(3, "max suspension travel fr", 0.127, "m"),
    ConstraintSpec::upper(4, "max suspension travel rl", 0.127, "m"),
    ConstraintSpec::upper(5, "max suspension travel rr", 0.127, "m"),
    ConstraintSpec::upper(6, "max heave acceleration", 4.5, "m/s^2"),
    ConstraintSpec::upper(11, "max unsprung displacement fl", 0.07, "m"),
    ConstraintSpec::upper(12, "max unsprung displacement fr", 0.07, "m"),
    ConstraintSpec::upper(13, "max unsprung displacement rl", 0.07, "m"),
    ConstraintSpec::upper(14, "max unsprung displacement rr", 0.07, "m"),
    ConstraintSpec::range(15, "front damped ride frequency"),
    ConstraintSpec::range(16, "rear damped ride frequency"),
    ConstraintSpec::upper(17, "max heave jerk", 18.0, "m/s^3"),
    ConstraintSpec {
        id: 18,
        description: "front ride frequency above rear (f_dr - f_df)",
        kind: ConstraintKind::Ordering,
        lower: None,
        upper: None,
        unit: "Hz",
    },
    ConstraintSpec::range(19, "damped pitch frequency"),
    ConstraintSpec::range(20, "damped roll frequency"),
    ConstraintSpec::upper(21, "max actuator force fl", 1000.0, "N"),
    ConstraintSpec::upper(22, "max actuator force fr", 1000.0, "N"),
    ConstraintSpec::upper(23, "max actuator force rl", 1500.0, "N"),
    ConstraintSpec::upper(24, "max actuator force rr", 1500.0, "N"),
];

/// Evaluated constraint: the measured quantity and its margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintMargin {
    pub id: u8,
    pub description: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub margin: f64,
    pub satisfied: bool,
    #[serde(skip)]
    pub scale: f64,
}

impl ConstraintMargin {
    fn new(spec: &ConstraintSpec, value: f64) -> Self {
        let margin = spec.margin(value);
        Self {
            id: spec.id,
            description: spec.description.to_string(),
            value,
            lower: spec.lower,
            upper: spec.upper,
            margin,
            satisfied: margin <= 0.0,
            scale: spec.scale(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    pub alpha: f64,
    /// Divide each margin by its threshold before summing.
    pub normalize: bool,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            alpha: 10_000.0,
            normalize: false,
        }
    }
}

/// Range of α used for the full car.
pub const FC_ALPHA_RANGE: (f64, f64) = (8_000.0, 10_000.0);

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("penalty alpha must be > 0, got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn penalized_margins(&self, margins: &[ConstraintMargin]) -> Vec<f64> {
        margins
            .iter()
            .map(|m| if self.normalize { m.margin / m.scale } else { m.margin })
            .collect()
    }
}

/// `f + α·Σ max(0, gᵢ)`.
pub fn cb_cost(f: f64, margins: &[f64], alpha: f64) -> f64 {
    f + alpha * margins.iter().map(|g| g.max(0.0)).sum::<f64>()
}

/// Quarter-car constraints g1–g8; g8 only when the trajectory has an actuator.
pub fn evaluate_qc_constraints(traj: &Trajectory, frequencies: &RideFrequencies) -> Vec<ConstraintMargin> {
    let zu = traj.state_series(2);
    let zr = traj.state_series(4);
    let tire: Vec<f64> = zu.iter().zip(&zr).map(|(u, r)| u - r).collect();
    let values = [
        rms_abs(&traj.sprung_accel),
        max_abs(&traj.travel[0]),
        max_abs(&traj.sprung_accel),
        max_abs(&tire),
        max_abs(&zu),
        frequencies.damped_or_zero(),
        max_abs(&traj.jerk),
    ];
    let mut out: Vec<ConstraintMargin> = QC_CONSTRAINTS
        .iter()
        .zip(values)
        .map(|(spec, v)| ConstraintMargin::new(spec, v))
        .collect();
    if traj.n_forces() > 0 {
        out.push(ConstraintMargin::new(&QC_CONSTRAINTS[7], max_abs(&traj.force_series(0))));
    }
    out
}

/// Ride, pitch and roll frequencies of the full car.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcFrequencies {
    pub front: RideFrequencies,
    pub rear: RideFrequencies,
    pub pitch: RideFrequencies,
    pub roll: RideFrequencies,
}

/// Front/rear ride frequencies use the static corner load as sprung mass;
/// pitch and roll use the diagonal stiffness and damping of the body
/// equations with the body inertias.
pub fn fc_frequencies(p: &FcParams) -> Result<FcFrequencies> {
    let corner = |w: Wheel| ride_frequencies(p.spring(w), p.tire_stiffness, p.damper(w), p.corner_mass(w));
    let (a, b, w) = (p.cg_to_front, p.cg_to_rear, p.track_width);
    let pitch = modal_frequencies(
        2.0 * (a * a * p.front_spring + b * b * p.rear_spring),
        2.0 * (a * a * p.front_damper + b * b * p.rear_damper),
        p.pitch_inertia,
    );
    let roll = modal_frequencies(
        0.5 * w * w * (p.front_spring + p.rear_spring),
        0.5 * w * w * (p.front_damper + p.rear_damper),
        p.roll_inertia,
    );
    Ok(FcFrequencies {
        front: corner(Wheel::FrontLeft)?,
        rear: corner(Wheel::RearLeft)?,
        pitch,
        roll,
    })
}

/// Full-car constraints g1–g6, g11–g24; g21–g24 only for active trajectories.
pub fn evaluate_fc_constraints(traj: &Trajectory, freq: &FcFrequencies) -> Vec<ConstraintMargin> {
    let (f_df, f_dr) = (freq.front.damped_or_zero(), freq.rear.damped_or_zero());
    let mut values = vec![rms_abs(&traj.sprung_accel)];
    values.extend(traj.travel.iter().map(|t| max_abs(t)));
    values.push(max_abs(&traj.sprung_accel));
    values.extend([6, 8, 10, 12].iter().map(|&i| max_abs(&traj.state_series(i))));
    values.extend([
        f_df,
        f_dr,
        max_abs(&traj.jerk),
        f_dr - f_df,
        freq.pitch.damped_or_zero(),
        freq.roll.damped_or_zero(),
    ]);
    if traj.n_forces() == 4 {
        values.extend((0..4).map(|j| max_abs(&traj.force_series(j))));
    }
    FC_CONSTRAINTS
        .iter()
        .zip(values)
        .map(|(spec, v)| ConstraintMargin::new(spec, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn synthetic(model: ModelKind, states: Vec<Vec<f64>>, forces: Vec<Vec<f64>>, dt: f64) -> Trajectory {
        let len = states[0].len();
        let n = states.len();
        let nf = forces.len();
        let mut flat = Vec::with_capacity(len * n);
        let mut ff = Vec::with_capacity(len * nf);
        for k in 0..len {
            flat.extend(states.iter().map(|s| s[k]));
            ff.extend(forces.iter().map(|s| s[k]));
        }
        Trajectory {
            model,
            sample_dt: dt,
            times: (0..len).map(|k| k as f64 * dt).collect(),
            states: flat,
            outputs: Vec::new(),
            road_inputs: vec![0.0; len],
            forces: ff,
            sprung_accel: vec![0.0; len],
            jerk: vec![0.0; len],
            travel: vec![vec![0.0; len]],
            state_labels: (0..n).map(|i| format!("x{i}")).collect(),
            output_labels: Vec::new(),
            road_labels: vec!["r".into()],
            force_labels: (0..nf).map(|i| format!("f{i}")).collect(),
        }
    }

    #[test]
    fn lqr_cost_of_exponential() {
        let dt = 1e-3;
        let x: Vec<f64> = (0..=30_000).map(|k| (-(k as f64) * dt).exp()).collect();
        let traj = synthetic(ModelKind::Qc, vec![x], vec![], dt);
        let w = LqrWeights::new(vec![2.0], vec![0.0]).unwrap();
        let j = lqr_cost(&traj, &w).unwrap();
        // ½∫₀³⁰ 2e^{-2t} dt = ½(1 - e^{-60})
        assert!((j - 0.5).abs() < 1e-6, "{j}");

        let w2 = LqrWeights::new(vec![4.0], vec![0.0]).unwrap();
        assert!((lqr_cost(&traj, &w2).unwrap() - 2.0 * j).abs() < 1e-15);
    }

    #[test]
    fn lqr_cost_zero_and_dimension_checks() {
        let traj = synthetic(ModelKind::Qc, vec![vec![0.0; 100]; 5], vec![vec![0.0; 100]], 1e-3);
        let w = LqrWeights::default_for(ModelKind::Qc);
        assert_eq!(lqr_cost(&traj, &w).unwrap(), 0.0);
        let bad = LqrWeights::new(vec![1.0; 3], vec![1.0]).unwrap();
        assert!(matches!(lqr_cost(&traj, &bad), Err(Error::Dimension(_))));
        assert!(LqrWeights::new(vec![0.0], vec![0.0]).is_err());
        assert!(LqrWeights::new(vec![-1.0], vec![1.0]).is_err());
    }

    #[test]
    fn g1_boundary_and_margin() {
        assert_eq!(QC_CONSTRAINTS[0].margin(0.315), 0.0);
        assert!((QC_CONSTRAINTS[0].margin(0.2) + 0.115).abs() < 1e-15);
        let g6 = QC_CONSTRAINTS[5];
        assert!((g6.margin(0.7) - 0.1).abs() < 1e-12);
        assert!((g6.margin(1.6) - 0.1).abs() < 1e-12);
        assert!((g6.margin(1.2) + 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_trajectory_satisfies_qc_constraints() {
        let traj = synthetic(ModelKind::Qc, vec![vec![0.0; 100]; 5], vec![vec![0.0; 100]], 1e-3);
        let freq = RideFrequencies {
            ride_rate: 1.0,
            natural_freq: 1.2,
            damping_ratio: 0.0,
            damped_freq: Some(1.2),
        };
        let m = evaluate_qc_constraints(&traj, &freq);
        assert_eq!(m.len(), 8);
        assert!(m.iter().all(|c| c.margin <= 0.0 && c.satisfied));

        let passive = synthetic(ModelKind::Qc, vec![vec![0.0; 100]; 5], vec![], 1e-3);
        assert_eq!(evaluate_qc_constraints(&passive, &freq).len(), 7);
    }

    #[test]
    fn fc_force_margins_and_ordering() {
        let mut traj = synthetic(
            ModelKind::Fc,
            vec![vec![0.0; 50]; 18],
            vec![vec![900.0; 50], vec![-900.0; 50], vec![0.0; 50], vec![0.0; 50]],
            1e-3,
        );
        traj.travel = vec![vec![0.0; 50]; 4];
        let p = FcParams {
            rear_spring: 20_000.0,
            ..FcParams::default()
        };
        let freq = fc_frequencies(&p).unwrap();
        let m = evaluate_fc_constraints(&traj, &freq);
        assert_eq!(m.len(), 20);
        let by_id = |id: u8| m.iter().find(|c| c.id == id).unwrap();
        assert!((by_id(21).margin + 100.0).abs() < 1e-12);
        assert!((by_id(22).margin + 100.0).abs() < 1e-12);
        assert!(m.iter().all(|c| !(7..=10).contains(&c.id)));
        // Front corners carry more load here but the spring is stiffer.
        assert!(freq.front.damped_freq.unwrap() > freq.rear.damped_freq.unwrap());
        assert!(by_id(18).margin < 0.0);
        for id in [1, 2, 3, 4, 5, 6, 11, 12, 13, 14, 17, 21, 22, 23, 24] {
            assert!(by_id(id).satisfied, "g{id}");
        }
    }

    #[test]
    fn cb_cost_examples() {
        assert_eq!(cb_cost(0.2, &[-1.0, 0.0, -0.5], 10_000.0), 0.2);
        assert!((cb_cost(0.2, &[0.01, -3.0], 10_000.0) - 100.2).abs() < 1e-9);
        assert!((cb_cost(0.2, &[0.01, 0.02], 10_000.0) - 300.2).abs() < 1e-9);
    }

    #[test]
    fn normalization_divides_by_threshold() {
        let cfg = PenaltyConfig {
            alpha: 1.0,
            normalize: true,
        };
        let m = vec![ConstraintMargin::new(&QC_CONSTRAINTS[7], 800.0)];
        assert_eq!(cfg.penalized_margins(&m), vec![1.0]);
    }

    #[test]
    fn pitch_and_roll_frequencies() {
        let p = FcParams::default();
        let f = fc_frequencies(&p).unwrap();
        let k_pitch = 2.0 * (1.96 * 35_000.0 + 2.89 * 3_800.0);
        let expected = (k_pitch / 2100.0f64).sqrt() / (2.0 * std::f64::consts::PI);
        assert!((f.pitch.natural_freq - expected).abs() < 1e-12);
        let k_roll = 4.5 * (35_000.0 + 3_800.0);
        let expected = (k_roll / 460.0f64).sqrt() / (2.0 * std::f64::consts::PI);
        assert!((f.roll.natural_freq - expected).abs() < 1e-12);
    }
}
