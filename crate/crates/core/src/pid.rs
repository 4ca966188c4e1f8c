//! Discrete PID in incremental (velocity) form with trapezoidal integration.
//!
//! Each step produces a control increment from the last three tracking
//! errors; accumulating the clamped control gives inherent anti-windup
//! because a saturated actuator simply stops integrating.

use crate::error::SimError;

/// Proportional, integral and derivative gains.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Gains {
    pub const ZERO: Gains = Gains {
        kp: 0.0,
        ki: 0.0,
        kd: 0.0,
    };
}

/// The control increment is computed in percent of full scale and divided by
/// this constant to land in the normalized [-1, 1] actuator range.
pub const PERCENT_SCALE: f64 = 100.0;

/// Increment weights for the last three errors:
/// `du = alpha * e + beta * e_prev + gamma * e_prev2`.
///
/// Algebraically `alpha + beta + gamma == ki * ts`, so a constant error
/// integrates at exactly the integral rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl PidCoefficients {
    /// Maps gains and a sample time to increment weights.
    pub fn new(gains: Gains, ts: f64) -> Result<PidCoefficients, SimError> {
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(SimError::NonPositiveSampleTime { seconds: ts });
        }
        Ok(Self::raw(gains, ts))
    }

    fn raw(gains: Gains, ts: f64) -> PidCoefficients {
        let Gains { kp, ki, kd } = gains;
        PidCoefficients {
            alpha: kp + kd / ts + ki * ts / 2.0,
            beta: ki * ts / 2.0 - 2.0 * kd / ts - kp,
            gamma: kd / ts,
        }
    }

    /// Raw (percent-scale) control increment for the current error history.
    pub fn increment(&self, e: f64, e_prev: f64, e_prev2: f64) -> f64 {
        self.alpha * e + self.beta * e_prev + self.gamma * e_prev2
    }
}

/// Error and control history carried between steps. Zeroed at startup.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub e_prev: f64,
    pub e_prev2: f64,
    pub u_prev: f64,
}

/// Fresh controller history.
pub fn pid_reset() -> PidState {
    PidState::default()
}

/// One controller update: returns the clamped control in [-1, 1] and the
/// shifted history. `ts` must be strictly positive.
pub fn pid_step(state: &PidState, gains: Gains, e: f64, ts: f64) -> (f64, PidState) {
    debug_assert!(ts > 0.0, "sample time must be positive");
    let c = PidCoefficients::raw(gains, ts);
    let du = c.increment(e, state.e_prev, state.e_prev2) / PERCENT_SCALE;
    let u = (state.u_prev + du).clamp(-1.0, 1.0);
    (
        u,
        PidState {
            e_prev: e,
            e_prev2: state.e_prev,
            u_prev: u,
        },
    )
}
