//! Glue between the GA and the simulator: decision-vector layouts, decoding
//! into vehicle parameters and PID gains, and the two fitness functions.

use serde::{Deserialize, Serialize};

use crate::control::{make_fc_controller, make_qc_controller, PidGains, TravelPid};
use crate::error::{Error, Result};
use crate::ga::{run_ga, Bounds, Evaluation, GaConfig, GaProblem, GaResult};
use crate::metrics::{ride_frequencies, rms_abs};
use crate::objectives::{
    cb_cost, evaluate_fc_constraints, evaluate_qc_constraints, fc_frequencies, lqr_cost, ConstraintMargin,
    LqrWeights, PenaltyConfig,
};
use crate::road::RoadScenario;
use crate::sim::{simulate_active, simulate_passive, SimConfig, Trajectory};
use crate::vehicle::{build_fc_system, build_qc_system, FcParams, ModelKind, QcParams, Wheel};

pub const SPRING_BOUNDS: (f64, f64) = (15_000.0, 80_000.0);
pub const DAMPER_BOUNDS: (f64, f64) = (400.0, 5_500.0);
pub const GAIN_BOUNDS: (f64, f64) = (1.0, 150_000.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Lqr,
    Cb,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::Lqr => "lqr",
            Objective::Cb => "cb",
        })
    }
}

/// Which genes the GA searches: PID gains only, or suspension spring and
/// damper rates followed by the gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionLayout {
    GainsOnly,
    Full,
}

impl DecisionLayout {
    /// LQR tunes the gains on the stock suspension; CB tunes everything.
    pub fn default_for(objective: Objective) -> Self {
        match objective {
            Objective::Lqr => DecisionLayout::GainsOnly,
            Objective::Cb => DecisionLayout::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum VehicleParams {
    Qc(QcParams),
    Fc(FcParams),
}

impl VehicleParams {
    pub fn model(&self) -> ModelKind {
        match self {
            VehicleParams::Qc(_) => ModelKind::Qc,
            VehicleParams::Fc(_) => ModelKind::Fc,
        }
    }

    pub fn wheelbase(&self) -> f64 {
        match self {
            VehicleParams::Qc(_) => FcParams::default().wheelbase(),
            VehicleParams::Fc(p) => p.wheelbase(),
        }
    }
}

/// Passive trajectory of a vehicle over a scenario.
pub fn simulate_vehicle_passive(vehicle: &VehicleParams, scenario: &RoadScenario, sim: &SimConfig) -> Result<Trajectory> {
    let sys = match vehicle {
        VehicleParams::Qc(p) => build_qc_system(p, false)?,
        VehicleParams::Fc(p) => build_fc_system(p, false)?,
    };
    simulate_passive(&sys, scenario, sim)
}

/// Closed-loop trajectory with one PID per actuator.
pub fn simulate_vehicle_active(
    vehicle: &VehicleParams,
    gains: &[PidGains],
    integral_limit: Option<f64>,
    scenario: &RoadScenario,
    sim: &SimConfig,
) -> Result<Trajectory> {
    let (sys, controller): (_, TravelPid) = match vehicle {
        VehicleParams::Qc(p) => {
            let [g] = gains else {
                return Err(Error::ArityMismatch {
                    controller: gains.len(),
                    system: 1,
                });
            };
            (build_qc_system(p, true)?, make_qc_controller(*g)?)
        }
        VehicleParams::Fc(p) => {
            let g: [PidGains; 4] = gains.try_into().map_err(|_| Error::ArityMismatch {
                controller: gains.len(),
                system: 4,
            })?;
            (build_fc_system(p, true)?, make_fc_controller(g)?)
        }
    };
    let mut controller = controller.with_integral_limit(integral_limit);
    simulate_active(&sys, scenario, &mut controller, sim)
}

/// Constraint margins of a trajectory under the vehicle's own parameters.
pub fn constraint_report(vehicle: &VehicleParams, traj: &Trajectory) -> Result<Vec<ConstraintMargin>> {
    Ok(match vehicle {
        VehicleParams::Qc(p) => {
            let f = ride_frequencies(p.spring_stiffness, p.tire_stiffness, p.damper_coeff, p.sprung_mass)?;
            evaluate_qc_constraints(traj, &f)
        }
        VehicleParams::Fc(p) => evaluate_fc_constraints(traj, &fc_frequencies(p)?),
    })
}

/// A decoded decision vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub vehicle: VehicleParams,
    pub gains: Vec<PidGains>,
}

/// Everything computed for one candidate.
#[derive(Debug, Clone)]
pub struct CandidateReport {
    pub trajectory: Trajectory,
    /// The objective value the GA minimizes.
    pub cost: f64,
    pub lqr_cost: f64,
    pub rms_sprung_accel: f64,
    pub margins: Vec<ConstraintMargin>,
    pub max_margin: f64,
}

/// A fully specified tuning problem.
#[derive(Debug, Clone)]
pub struct TuningSetup {
    pub objective: Objective,
    pub layout: DecisionLayout,
    /// Baseline vehicle; genes outside the layout keep these values.
    pub vehicle: VehicleParams,
    pub scenario: RoadScenario,
    pub sim: SimConfig,
    pub lqr: LqrWeights,
    pub penalty: PenaltyConfig,
    pub integral_limit: Option<f64>,
}

impl TuningSetup {
    pub fn new(objective: Objective, vehicle: VehicleParams, scenario: RoadScenario) -> Self {
        let model = vehicle.model();
        Self {
            objective,
            layout: DecisionLayout::default_for(objective),
            vehicle,
            scenario,
            sim: SimConfig::default(),
            lqr: LqrWeights::default_for(model),
            penalty: PenaltyConfig::default(),
            integral_limit: None,
        }
    }

    pub fn model(&self) -> ModelKind {
        self.vehicle.model()
    }

    fn corner_codes(&self) -> Vec<&'static str> {
        match self.model() {
            ModelKind::Qc => vec![""],
            ModelKind::Fc => Wheel::CORNERS.iter().map(|w| w.code()).collect(),
        }
    }

    fn suspension_genes(&self) -> Vec<(String, (f64, f64))> {
        if self.layout == DecisionLayout::GainsOnly {
            return Vec::new();
        }
        match self.model() {
            ModelKind::Qc => vec![("ks".into(), SPRING_BOUNDS), ("cs".into(), DAMPER_BOUNDS)],
            ModelKind::Fc => vec![
                ("ksf".into(), SPRING_BOUNDS),
                ("ksr".into(), SPRING_BOUNDS),
                ("csf".into(), DAMPER_BOUNDS),
                ("csr".into(), DAMPER_BOUNDS),
            ],
        }
    }

    fn genes(&self) -> Vec<(String, (f64, f64))> {
        let mut genes = self.suspension_genes();
        for corner in self.corner_codes() {
            for k in ["kp", "ki", "kd"] {
                let name = if corner.is_empty() {
                    k.to_string()
                } else {
                    format!("{k}_{corner}")
                };
                genes.push((name, GAIN_BOUNDS));
            }
        }
        genes
    }

    pub fn gene_names(&self) -> Vec<String> {
        self.genes().into_iter().map(|(n, _)| n).collect()
    }

    pub fn bounds(&self) -> Bounds {
        let (lower, upper) = self.genes().into_iter().map(|(_, b)| b).unzip();
        Bounds::new(lower, upper).expect("static bounds are valid")
    }

    pub fn decode(&self, genes: &[f64]) -> Result<Candidate> {
        let n_susp = self.suspension_genes().len();
        let expected = n_susp + 3 * self.corner_codes().len();
        if genes.len() != expected {
            return Err(Error::Dimension(format!("decision vector of length {} (expected {expected})", genes.len())));
        }
        let (susp, pid) = genes.split_at(n_susp);
        let mut vehicle = self.vehicle;
        match (&mut vehicle, susp) {
            (VehicleParams::Qc(p), [ks, cs]) => {
                p.spring_stiffness = *ks;
                p.damper_coeff = *cs;
            }
            (VehicleParams::Fc(p), [ksf, ksr, csf, csr]) => {
                p.front_spring = *ksf;
                p.rear_spring = *ksr;
                p.front_damper = *csf;
                p.rear_damper = *csr;
            }
            _ => {}
        }
        Ok(Candidate {
            vehicle,
            gains: pid.chunks(3).map(PidGains::from_slice).collect(),
        })
    }

    pub fn encode(&self, candidate: &Candidate) -> Vec<f64> {
        let mut genes = Vec::new();
        if self.layout == DecisionLayout::Full {
            match candidate.vehicle {
                VehicleParams::Qc(p) => genes.extend([p.spring_stiffness, p.damper_coeff]),
                VehicleParams::Fc(p) => genes.extend([p.front_spring, p.rear_spring, p.front_damper, p.rear_damper]),
            }
        }
        genes.extend(candidate.gains.iter().flat_map(|g| g.as_array()));
        genes
    }

    pub fn evaluate(&self, candidate: &Candidate) -> Result<CandidateReport> {
        let trajectory = simulate_vehicle_active(
            &candidate.vehicle,
            &candidate.gains,
            self.integral_limit,
            &self.scenario,
            &self.sim,
        )?;
        let margins = constraint_report(&candidate.vehicle, &trajectory)?;
        let rms = rms_abs(&trajectory.sprung_accel);
        let lqr = lqr_cost(&trajectory, &self.lqr)?;
        let cost = match self.objective {
            Objective::Lqr => lqr,
            Objective::Cb => cb_cost(rms, &self.penalty.penalized_margins(&margins), self.penalty.alpha),
        };
        let max_margin = margins.iter().map(|m| m.margin).fold(f64::NEG_INFINITY, f64::max);
        Ok(CandidateReport {
            trajectory,
            cost,
            lqr_cost: lqr,
            rms_sprung_accel: rms,
            margins,
            max_margin,
        })
    }

    /// GA fitness; failed or divergent simulations score +∞.
    pub fn fitness(&self, genes: &[f64]) -> Evaluation {
        match self.decode(genes).and_then(|c| self.evaluate(&c)) {
            Ok(r) if r.cost.is_finite() => Evaluation {
                cost: r.cost,
                max_margin: r.max_margin,
            },
            _ => Evaluation::FAILED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.vehicle {
            VehicleParams::Qc(p) => p.validate()?,
            VehicleParams::Fc(p) => p.validate()?,
        }
        self.scenario.validate()?;
        self.sim.validate()?;
        self.lqr.validate()?;
        self.penalty.validate()
    }

    pub fn optimize(&self, ga: &GaConfig) -> Result<GaResult> {
        self.validate()?;
        let problem = GaProblem {
            gene_names: self.gene_names(),
            bounds: self.bounds(),
            fitness: |g: &[f64]| self.fitness(g),
        };
        run_ga(&problem, ga)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::default_scenario;

    fn qc_setup(objective: Objective) -> TuningSetup {
        TuningSetup::new(
            objective,
            VehicleParams::Qc(QcParams::default()),
            default_scenario(ModelKind::Qc),
        )
    }

    #[test]
    fn layouts_and_bounds() {
        let s = qc_setup(Objective::Cb);
        assert_eq!(s.gene_names(), ["ks", "cs", "kp", "ki", "kd"]);
        let b = s.bounds();
        assert_eq!(b.lower, [15_000.0, 400.0, 1.0, 1.0, 1.0]);
        assert_eq!(b.upper, [80_000.0, 5_500.0, 150_000.0, 150_000.0, 150_000.0]);
        assert_eq!(qc_setup(Objective::Lqr).gene_names(), ["kp", "ki", "kd"]);

        let fc = TuningSetup::new(
            Objective::Cb,
            VehicleParams::Fc(FcParams::default()),
            default_scenario(ModelKind::Fc),
        );
        let names = fc.gene_names();
        assert_eq!(names.len(), 16);
        assert_eq!(&names[..5], ["ksf", "ksr", "csf", "csr", "kp_fl"]);
        assert_eq!(names[15], "kd_rr");
    }

    #[test]
    fn decode_encode_round_trip() {
        let s = qc_setup(Objective::Cb);
        let genes = [73_462.0, 2_578.0, 12_225.0, 22_241.0, 841.7];
        let c = s.decode(&genes).unwrap();
        match c.vehicle {
            VehicleParams::Qc(p) => {
                assert_eq!(p.spring_stiffness, 73_462.0);
                assert_eq!(p.damper_coeff, 2_578.0);
                assert_eq!(p.sprung_mass, 375.0);
            }
            _ => unreachable!(),
        }
        assert_eq!(c.gains, [PidGains::new(12_225.0, 22_241.0, 841.7)]);
        assert_eq!(s.encode(&c), genes);
        assert!(s.decode(&genes[..4]).is_err());
    }

    #[test]
    fn fitness_of_table_gains_is_finite() {
        let s = qc_setup(Objective::Cb);
        let e = s.fitness(&[35_000.0, 1_000.0, 12_225.0, 22_241.0, 841.7]);
        assert!(e.cost.is_finite() && e.cost > 0.0);
        let l = qc_setup(Objective::Lqr).fitness(&[227.13, 1.20, 5878.56]);
        assert!(l.cost.is_finite() && l.cost > 0.0);
    }

    #[test]
    fn active_arity_mismatch() {
        let v = VehicleParams::Fc(FcParams::default());
        let r = simulate_vehicle_active(
            &v,
            &[PidGains::default()],
            None,
            &default_scenario(ModelKind::Fc),
            &SimConfig::default(),
        );
        assert!(matches!(r, Err(Error::ArityMismatch { .. })));
    }
}
