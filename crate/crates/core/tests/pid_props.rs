//! Property tests for the incremental PID against an independently coded
//! positional trapezoid PID.

use cruise_core::pid::{pid_step, Gains, PidCoefficients, PidState};
use proptest::prelude::*;

/// Positional trapezoid PID in the same percent scale as the incremental
/// coefficients: proportional on the current error, trapezoid-integrated
/// error, backward-difference derivative. Written from the textbook form on
/// purpose; it shares no code with the incremental implementation.
fn positional_trapezoid(gains: Gains, ts: f64, errors: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(errors.len());
    let mut integral = 0.0;
    let mut e_prev = 0.0;
    for &e in errors {
        integral += ts * (e + e_prev) / 2.0;
        out.push(gains.kp * e + gains.ki * integral + gains.kd * (e - e_prev) / ts);
        e_prev = e;
    }
    out
}

fn gains_strategy() -> impl Strategy<Value = Gains> {
    (0.0..1000.0, 0.0..10.0, 0.0..200.0).prop_map(|(kp, ki, kd)| Gains { kp, ki, kd })
}

proptest! {
    /// Accumulating the raw increments reproduces the positional controller
    /// output at every step, before saturation.
    #[test]
    fn incremental_accumulates_to_positional_output(
        gains in gains_strategy(),
        ts in 1e-3..0.1_f64,
        errors in prop::collection::vec(-10.0..10.0_f64, 100),
    ) {
        let coeffs = PidCoefficients::new(gains, ts).unwrap();
        let oracle = positional_trapezoid(gains, ts, &errors);
        let mut acc = 0.0;
        let mut e_prev = 0.0;
        let mut e_prev2 = 0.0;
        let mut scale: f64 = 1.0;
        for (k, &e) in errors.iter().enumerate() {
            acc += coeffs.increment(e, e_prev, e_prev2);
            scale = scale.max(oracle[k].abs());
            prop_assert!(
                (acc - oracle[k]).abs() <= 1e-9 * scale,
                "step {k}: incremental {acc} vs positional {}    ",
                oracle[k]
            );
            e_prev2 = e_prev;
            e_prev = e;
        }
    }

    /// The coefficient sum collapses to the integral rate. The bound is the
    /// standard floating-point summation error for three addends, since the
    /// individual coefficients can dwarf their sum.
    #[test]
    fn coefficient_sum_is_integral_rate(gains in gains_strategy(), ts in 1e-3..0.1_f64) {
        let c = PidCoefficients::new(gains, ts).unwrap();
        let sum = c.alpha + c.beta + c.gamma;
        let target = gains.ki * ts;
        let budget = 8.0 * f64::EPSILON
            * (c.alpha.abs() + c.beta.abs() + c.gamma.abs() + target.abs());
        prop_assert!(
            (sum - target).abs() <= budget,
            "sum {sum} vs ki*ts {target}, budget {budget}"
        );
    }

    /// The applied control never leaves the actuator range, whatever the
    /// error sequence does.
    #[test]
    fn control_stays_saturated(
        gains in gains_strategy(),
        errors in prop::collection::vec(-50.0..50.0_f64, 200),
    ) {
        let mut state = PidState::default();
        for &e in &errors {
            let (u, next) = pid_step(&state, gains, e, 0.01);
            prop_assert!((-1.0..=1.0).contains(&u), "control {u} escaped saturation");
            state = next;
        }
    }

    /// With integral and derivative action off, each raw increment is exactly
    /// the proportional gain times the error difference.
    #[test]
    fn proportional_increment_is_scaled_error_difference(
        kp in 0.0..1000.0_f64,
        e in -10.0..10.0_f64,
        e_prev in -10.0..10.0_f64,
    ) {
        let gains = Gains { kp, ki: 0.0, kd: 0.0 };
        let c = PidCoefficients::new(gains, 0.01).unwrap();
        let du = c.increment(e, e_prev, 3.3);
        let expect = kp * (e - e_prev);
        prop_assert!(
            (du - expect).abs() <= 1e-12 * (1.0 + expect.abs()),
            "increment {du} vs kp*(e - e_prev) {expect}"
        );
    }
}
