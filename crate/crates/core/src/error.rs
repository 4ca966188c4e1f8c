use alloc::boxed::Box;
use core::fmt;

/// Errors shared by the plant model, controllers and scenario runner.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    /// A physical or algorithm parameter failed validation.
    InvalidParam { name: &'static str, value: f64 },
    /// Battery terminal voltage must be strictly positive to compute current.
    NonPositiveVoltage { volts: f64 },
    /// Brake line pressure cannot be negative.
    NegativePressure { pascals: f64 },
    /// Controller or integrator sample time must be strictly positive.
    NonPositiveSampleTime { seconds: f64 },
    /// A profile or scenario definition is malformed.
    InvalidProfile(&'static str),
    /// Search bounds are malformed (empty, inverted or non-finite).
    InvalidBounds(&'static str),
    /// A gain table has no cells to interpolate.
    EmptyTable,
    /// A cached activation record does not match the network it is replayed on.
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// Wraps an error with the closed-loop step index at which it occurred.
    AtStep { step: usize, source: Box<SimError> },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidParam { name, value } => {
                write!(f, "invalid parameter {name} = {value}")
            }
            SimError::NonPositiveVoltage { volts } => {
                write!(f, "battery terminal voltage must be positive, got {volts} V")
            }
            SimError::NegativePressure { pascals } => {
                write!(f, "brake pressure must be non-negative, got {pascals} Pa")
            }
            SimError::NonPositiveSampleTime { seconds } => {
                write!(f, "sample time must be positive, got {seconds} s")
            }
            SimError::InvalidProfile(what) => write!(f, "invalid profile: {what}"),
            SimError::InvalidBounds(what) => write!(f, "invalid bounds: {what}"),
            SimError::EmptyTable => write!(f, "gain table is empty"),
            SimError::ShapeMismatch { expected, got } => write!(
                f,
                "activation cache shape {got:?} does not match network shape {expected:?}"
            ),
            SimError::AtStep { step, source } => write!(f, "at step {step}: {source}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimError {}

impl SimError {
    /// Attaches a closed-loop step index to an error bubbling out of the runner.
    pub fn at_step(self, step: usize) -> SimError {
        SimError::AtStep {
            step,
            source: Box::new(self),
        }
    }
}
