//! Property tests for the plant operations and the integrator's force
//! bookkeeping.

use cruise_core::plant::{
    actuator_step, battery_step, brake_torque, pacejka, plant_step, switching_logic,
    BatteryState, Disturbance, VehicleParams, VehicleState,
};
use proptest::prelude::*;

fn params() -> VehicleParams {
    VehicleParams::default()
}

proptest! {
    #[test]
    fn pacejka_is_odd_and_bounded(fz in 0.0..2.0e4_f64, slip in -2.0..2.0_f64) {
        let p = params();
        let fx = pacejka(fz, slip, &p);
        let mirrored = pacejka(fz, -slip, &p);
        prop_assert!(
            (fx + mirrored).abs() <= 1e-9 * (1.0 + fx.abs()),
            "odd symmetry broken: f({slip}) = {fx}, f({}) = {mirrored}",
            -slip
        );
        prop_assert!(
            fx.abs() <= fz * p.pacejka_d * (1.0 + 1e-12),
            "|{fx}| exceeds the peak cap {}",
            fz * p.pacejka_d
        );
    }

    #[test]
    fn brake_torque_is_homogeneous_in_pressure(
        pressure in 0.0..1.0e7_f64,
        a in 0.0..5.0_f64,
    ) {
        let p = params();
        let scaled = brake_torque(a * pressure, &p).unwrap();
        let base = brake_torque(pressure, &p).unwrap();
        prop_assert!(
            (scaled - a * base).abs() <= 1e-9 * (1.0 + scaled.abs()),
            "homogeneity broken: T({a}*P) = {scaled} vs {a}*T(P) = {}",
            a * base
        );
    }

    #[test]
    fn soc_moves_against_the_current_sign(
        soc in 0.0..1.0_f64,
        current in -200.0..200.0_f64,
        dt in 0.001..1.0_f64,
    ) {
        let p = params();
        let b = BatteryState { soc, terminal_volts: 350.0, current_amps: 0.0 };
        let next = battery_step(&b, current, &p, dt);
        if current > 0.0 {
            prop_assert!(next.soc <= soc, "discharge raised soc {soc} -> {}", next.soc);
        } else if current < 0.0 {
            prop_assert!(next.soc >= soc, "regen lowered soc {soc} -> {}", next.soc);
        } else {
            prop_assert!(next.soc == soc);
        }
    }

    /// Explicit Euler of the unity-gain lag is a contraction toward the
    /// command for any step not longer than the time constant.
    #[test]
    fn actuator_contracts_toward_command(
        x in 0.0..1.0_f64,
        cmd in 0.0..1.0_f64,
        tau in 0.1..2.0_f64,
        dt_frac in 0.01..1.0_f64,
    ) {
        let dt = dt_frac * tau;
        let next = actuator_step(x, cmd, tau, dt);
        prop_assert!(
            (next - cmd).abs() <= (x - cmd).abs() + 1e-15,
            "moved away from command: |{x} - {cmd}| < |{next} - {cmd}|"
        );
    }

    #[test]
    fn switching_outputs_are_exclusive_and_reconstruct_u(u in -1.0..1.0_f64) {
        let (accel, brake) = switching_logic(u);
        prop_assert!(accel * brake == 0.0, "both pedals pressed: ({accel}, {brake})");
        prop_assert!((0.0..=1.0).contains(&accel));
        prop_assert!((0.0..=1.0).contains(&brake));
        prop_assert!((accel - brake - u).abs() <= 1e-15);
    }

    /// Random short drive: the reported force components must balance the
    /// realized acceleration at every step, and the speed may never go
    /// negative, including stopping transitions.
    #[test]
    fn force_balance_holds_over_random_drives(
        v0 in 0.0..30.0_f64,
        theta in -0.17..0.17_f64,
        wind in -10.0..15.0_f64,
        controls in prop::collection::vec(-1.0..1.0_f64, 50),
    ) {
        let p = params();
        let d = Disturbance { theta_rad: theta, wind_ms: wind };
        let mut s = VehicleState::at_rest(&p, 0.8);
        s.speed_ms = v0;
        for (k, &u) in controls.iter().enumerate() {
            let (next, f) = plant_step(&s, u, &d, &p, 0.01).unwrap();
            let residual =
                p.mass_kg * f.accel_ms2 + f.aero_n + f.grade_n + f.rolling_n - f.traction_n;
            let scale =
                f.traction_n.abs() + f.aero_n.abs() + f.grade_n.abs() + f.rolling_n.abs() + 1.0;
            prop_assert!(
                residual.abs() <= 1e-9 * scale,
                "step {k}: residual {residual} vs scale {scale}"
            );
            prop_assert!(next.speed_ms >= 0.0, "step {k}: speed {}", next.speed_ms);
            s = next;
        }
    }

    /// The step function is pure: replaying identical inputs yields a
    /// bit-identical state.
    #[test]
    fn plant_step_is_deterministic(
        v in 0.0..30.0_f64,
        u in -1.0..1.0_f64,
        theta in -0.17..0.17_f64,
        wind in -10.0..15.0_f64,
    ) {
        let p = params();
        let d = Disturbance { theta_rad: theta, wind_ms: wind };
        let mut s = VehicleState::at_rest(&p, 0.7);
        s.speed_ms = v;
        let a = plant_step(&s, u, &d, &p, 0.01).unwrap();
        let b = plant_step(&s, u, &d, &p, 0.01).unwrap();
        prop_assert_eq!(a, b);
    }
}
