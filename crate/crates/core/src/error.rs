use thiserror::Error;

use crate::vehicle::Wheel;

/// Errors raised by model construction, simulation and optimization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    ParameterDomain { name: &'static str, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("system has no actuator inputs")]
    NoActuator,

    #[error("wheel `{0}` is not part of this road scenario")]
    UnknownWheel(Wheel),

    #[error("non-finite or out-of-domain value: {0}")]
    NumericDomain(String),

    #[error("simulation diverged at step {step}")]
    Divergence { step: usize },

    #[error("controller drives {controller} actuators but the system has {system}")]
    ArityMismatch { controller: usize, system: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
