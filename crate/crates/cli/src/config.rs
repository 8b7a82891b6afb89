//! Run configuration: one JSON document whose sections mirror the library
//! configs. Every field has a default, so `{}` is a valid passive
//! quarter-car run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use suspension_core::control::PidGains;
use suspension_core::ga::GaConfig;
use suspension_core::metrics::DEFAULT_SETTLING_BAND;
use suspension_core::objectives::{LqrWeights, PenaltyConfig};
use suspension_core::road::{DoubleBumpLayout, RoadScenario};
use suspension_core::sim::SimConfig;
use suspension_core::tuning::{DecisionLayout, Objective, TuningSetup, VehicleParams};
use suspension_core::vehicle::{FcParams, ModelKind, QcParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suspension {
    Passive,
    Active,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidSection {
    /// Fixed gains for `simulate`, one set per actuator (`fl, fr, rl, rr` for the full car).
    pub gains: Option<Vec<PidGains>>,
    pub integral_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    /// Defaults to active when PID gains are given, passive otherwise.
    pub suspension: Option<Suspension>,
    pub objective: Option<Objective>,
    pub layout: Option<DecisionLayout>,
    pub seed: Option<u64>,
    pub qc: QcParams,
    pub fc: FcParams,
    pub road: DoubleBumpLayout,
    /// Explicit event list; replaces the double-bump layout when present.
    pub scenario: Option<RoadScenario>,
    pub sim: SimConfig,
    pub ga: GaConfig,
    pub pid: PidSection,
    /// Defaults to the model's shipped weights.
    pub lqr: Option<LqrWeights>,
    pub penalty: PenaltyConfig,
    /// Half-width (m) of the sprung-displacement band used for settling time.
    pub settling_band: f64,
    /// Also simulate the passive baseline and overlay it in the plots.
    pub compare_passive: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Qc,
            suspension: None,
            objective: None,
            layout: None,
            seed: None,
            qc: QcParams::default(),
            fc: FcParams::default(),
            road: DoubleBumpLayout::default(),
            scenario: None,
            sim: SimConfig::default(),
            ga: GaConfig::default(),
            pid: PidSection::default(),
            lqr: None,
            penalty: PenaltyConfig::default(),
            settling_band: DEFAULT_SETTLING_BAND,
            compare_passive: true,
            output_dir: None,
        }
    }
}

/// Parse a config, naming the offending key on failure.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("config key `{path}`: {}", e.into_inner())
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

impl RunConfig {
    pub fn vehicle(&self) -> VehicleParams {
        match self.model {
            ModelKind::Qc => VehicleParams::Qc(self.qc),
            ModelKind::Fc => VehicleParams::Fc(self.fc),
        }
    }

    pub fn actuator_count(&self) -> usize {
        match self.model {
            ModelKind::Qc => 1,
            ModelKind::Fc => 4,
        }
    }

    pub fn suspension(&self) -> Suspension {
        self.suspension.unwrap_or(if self.pid.gains.is_some() {
            Suspension::Active
        } else {
            Suspension::Passive
        })
    }

    pub fn scenario(&self) -> Result<RoadScenario> {
        let s = match &self.scenario {
            Some(s) => s.clone(),
            None => self
                .road
                .scenario(self.model, self.vehicle().wheelbase())
                .context("config key `road`")?,
        };
        let expected = suspension_core::road::wheels_of(self.model);
        if s.wheels != expected {
            bail!(
                "config key `scenario.wheels`: expected {:?} for the {} model",
                expected.iter().map(|w| w.code()).collect::<Vec<_>>(),
                self.model
            );
        }
        s.validate().context("config key `scenario`")?;
        Ok(s)
    }

    /// Checks shared by every command.
    pub fn validate_common(&self) -> Result<()> {
        match self.model {
            ModelKind::Qc => self.qc.validate().context("config key `qc`")?,
            ModelKind::Fc => self.fc.validate().context("config key `fc`")?,
        }
        self.sim.validate().context("config key `sim`")?;
        self.scenario()?;
        if !(self.settling_band > 0.0) {
            bail!("config key `settling_band`: must be > 0, got {}", self.settling_band);
        }
        if let Some(limit) = self.pid.integral_limit {
            if !(limit > 0.0) {
                bail!("config key `pid.integral_limit`: must be > 0, got {limit}");
            }
        }
        Ok(())
    }

    pub fn validate_simulate(&self) -> Result<()> {
        self.validate_common()?;
        if self.suspension() == Suspension::Active {
            let Some(gains) = &self.pid.gains else {
                bail!("config key `pid.gains`: required for an active simulation");
            };
            if gains.len() != self.actuator_count() {
                bail!(
                    "config key `pid.gains`: {} gain sets given, the {} model has {} actuators",
                    gains.len(),
                    self.model,
                    self.actuator_count()
                );
            }
            for (i, g) in gains.iter().enumerate() {
                g.validate().with_context(|| format!("config key `pid.gains[{i}]`"))?;
            }
        }
        Ok(())
    }

    pub fn validate_optimize(&self) -> Result<()> {
        self.validate_common()?;
        if self.objective.is_none() {
            bail!("config key `objective`: required for optimize (lqr or cb)");
        }
        if self.seed.is_none() {
            bail!("config key `seed`: optimize runs need an explicit seed (or --seed)");
        }
        if self.suspension == Some(Suspension::Passive) {
            bail!("config key `suspension`: optimize tunes an active suspension");
        }
        if self.pid.gains.is_some() {
            bail!("config key `pid.gains`: gains are optimized, not given, in an optimize run");
        }
        self.ga.validate().context("config key `ga`")?;
        self.penalty.validate().context("config key `penalty`")?;
        if let Some(w) = &self.lqr {
            w.validate().context("config key `lqr`")?;
        }
        Ok(())
    }

    pub fn tuning_setup(&self) -> Result<TuningSetup> {
        let objective = self.objective.context("config key `objective`: missing")?;
        let mut setup = TuningSetup::new(objective, self.vehicle(), self.scenario()?);
        if let Some(layout) = self.layout {
            setup.layout = layout;
        }
        setup.sim = self.sim.clone();
        if let Some(w) = &self.lqr {
            setup.lqr = w.clone();
        }
        setup.penalty = self.penalty;
        setup.integral_limit = self.pid.integral_limit;
        Ok(setup)
    }
}
