//! Longitudinal vehicle model: point-mass chassis, electric drive through a
//! reduction gear, friction brakes, first-order pedal actuators and a battery
//! with an open-circuit-voltage/internal-resistance cell model.
//!
//! All operations are pure functions over explicit state records; `plant_step`
//! composes them into one fixed-step explicit-Euler update.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::SimError;

/// Axle(s) through which drive torque reaches the road.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrivenAxle {
    Front,
    Rear,
    Both,
}

/// Physical constants of the modeled vehicle. Defaults describe a compact
/// front-driven electric hatchback; every field can be overridden.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub mass_kg: f64,
    pub gravity_ms2: f64,
    pub air_density_kgpm3: f64,
    pub drag_coeff: f64,
    pub frontal_area_m2: f64,
    pub rolling_coeff: f64,
    /// Reduction ratio between motor shaft and wheel shaft.
    pub gear_ratio: f64,
    pub wheel_radius_m: f64,
    pub max_motor_torque_nm: f64,
    /// Electric path efficiency, applied against the power flow direction.
    pub motor_efficiency: f64,
    pub max_brake_pressure_pa: f64,
    /// Pad/disc friction coefficient.
    pub pad_friction: f64,
    /// Brake actuator bore diameter.
    pub brake_bore_m: f64,
    pub brake_mean_radius_m: f64,
    pub brake_pad_count: u32,
    pub cells_series: u32,
    pub cells_parallel: u32,
    /// Charge capacity of one parallel branch, ampere seconds.
    pub branch_capacity_as: f64,
    /// Per-cell open-circuit voltage over state of charge, piecewise linear.
    pub voc_table: Vec<(f64, f64)>,
    /// Per-cell internal resistance (ohm) over state of charge, piecewise linear.
    pub rint_table: Vec<(f64, f64)>,
    pub cg_height_m: f64,
    pub front_axle_to_cg_m: f64,
    pub rear_axle_to_cg_m: f64,
    pub accel_time_const_s: f64,
    pub brake_time_const_s: f64,
    pub pacejka_b: f64,
    pub pacejka_c: f64,
    /// Peak friction coefficient; also the traction cap as a fraction of axle load.
    pub pacejka_d: f64,
    pub pacejka_e: f64,
    pub driven_axle: DrivenAxle,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            mass_kg: 1468.0,
            gravity_ms2: 9.81,
            air_density_kgpm3: 1.225,
            drag_coeff: 0.29,
            frontal_area_m2: 2.22,
            rolling_coeff: 0.007,
            gear_ratio: 3.4,
            wheel_radius_m: 0.329,
            max_motor_torque_nm: 220.0,
            motor_efficiency: 0.95,
            max_brake_pressure_pa: 1.0e7,
            pad_friction: 0.9,
            brake_bore_m: 0.04,
            brake_mean_radius_m: 0.1778,
            brake_pad_count: 2,
            cells_series: 96,
            cells_parallel: 2,
            branch_capacity_as: 132.0 * 3600.0,
            voc_table: vec![(0.0, 3.0), (1.0, 4.15)],
            rint_table: vec![(0.0, 1.0e-3), (1.0, 1.0e-3)],
            cg_height_m: 0.35,
            front_axle_to_cg_m: 1.455,
            rear_axle_to_cg_m: 1.132,
            accel_time_const_s: 0.75,
            brake_time_const_s: 1.0,
            pacejka_b: 10.0,
            pacejka_c: 1.9,
            pacejka_d: 1.0,
            pacejka_e: 0.97,
            driven_axle: DrivenAxle::Front,
        }
    }
}

impl VehicleParams {
    /// Rejects non-physical parameter sets. Call once before a run; the step
    /// functions assume a validated record.
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("mass_kg", self.mass_kg),
            ("gravity_ms2", self.gravity_ms2),
            ("air_density_kgpm3", self.air_density_kgpm3),
            ("drag_coeff", self.drag_coeff),
            ("frontal_area_m2", self.frontal_area_m2),
            ("rolling_coeff", self.rolling_coeff),
            ("gear_ratio", self.gear_ratio),
            ("wheel_radius_m", self.wheel_radius_m),
            ("max_motor_torque_nm", self.max_motor_torque_nm),
            ("max_brake_pressure_pa", self.max_brake_pressure_pa),
            ("pad_friction", self.pad_friction),
            ("brake_bore_m", self.brake_bore_m),
            ("brake_mean_radius_m", self.brake_mean_radius_m),
            ("branch_capacity_as", self.branch_capacity_as),
            ("cg_height_m", self.cg_height_m),
            ("front_axle_to_cg_m", self.front_axle_to_cg_m),
            ("rear_axle_to_cg_m", self.rear_axle_to_cg_m),
            ("accel_time_const_s", self.accel_time_const_s),
            ("brake_time_const_s", self.brake_time_const_s),
            ("pacejka_b", self.pacejka_b),
            ("pacejka_c", self.pacejka_c),
            ("pacejka_d", self.pacejka_d),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(SimError::InvalidParam { name, value });
            }
        }
        if !self.pacejka_e.is_finite() {
            return Err(SimError::InvalidParam {
                name: "pacejka_e",
                value: self.pacejka_e,
            });
        }
        if !(self.motor_efficiency > 0.0 && self.motor_efficiency <= 1.0) {
            return Err(SimError::InvalidParam {
                name: "motor_efficiency",
                value: self.motor_efficiency,
            });
        }
        if self.brake_pad_count == 0 {
            return Err(SimError::InvalidParam {
                name: "brake_pad_count",
                value: 0.0,
            });
        }
        if self.cells_series == 0 || self.cells_parallel == 0 {
            return Err(SimError::InvalidParam {
                name: "battery_cells",
                value: 0.0,
            });
        }
        validate_soc_table("voc_table", &self.voc_table)?;
        validate_soc_table("rint_table", &self.rint_table)?;
        Ok(())
    }
}

fn validate_soc_table(name: &'static str, table: &[(f64, f64)]) -> Result<(), SimError> {
    if table.is_empty() {
        return Err(SimError::InvalidParam { name, value: 0.0 });
    }
    for pair in table.windows(2) {
        if !(pair[1].0 > pair[0].0) {
            return Err(SimError::InvalidParam {
                name,
                value: pair[1].0,
            });
        }
    }
    for &(soc, y) in table {
        if !(soc.is_finite() && (0.0..=1.0).contains(&soc) && y.is_finite()) {
            return Err(SimError::InvalidParam { name, value: soc });
        }
    }
    Ok(())
}

/// Piecewise-linear lookup with clamped ends.
fn table_lookup(table: &[(f64, f64)], x: f64) -> f64 {
    if x <= table[0].0 {
        return table[0].1;
    }
    let last = table[table.len() - 1];
    if x >= last.0 {
        return last.1;
    }
    for pair in table.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        if x <= x1 {
            let t = (x - x0) / (x1 - x0);
            return y0 + t * (y1 - y0);
        }
    }
    last.1
}

/// External conditions acting on the vehicle at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Disturbance {
    /// Road grade angle, radians; positive is uphill.
    pub theta_rad: f64,
    /// Longitudinal wind speed, m/s; positive is a headwind.
    pub wind_ms: f64,
}

/// Battery pack state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    /// State of charge in [0, 1].
    pub soc: f64,
    /// Pack terminal voltage, volts.
    pub terminal_volts: f64,
    /// Pack current of the step that produced this state; positive discharges.
    pub current_amps: f64,
}

/// Full plant state advanced by `plant_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub speed_ms: f64,
    /// Accelerator pedal position in [0, 1] after actuator lag.
    pub accel_frac: f64,
    /// Brake pedal position in [0, 1] after actuator lag.
    pub brake_frac: f64,
    pub battery: BatteryState,
    pub time_s: f64,
}

impl VehicleState {
    /// Vehicle at standstill with released pedals and an idle battery.
    pub fn at_rest(params: &VehicleParams, initial_soc: f64) -> VehicleState {
        let soc = initial_soc.clamp(0.0, 1.0);
        let volts = f64::from(params.cells_series) * table_lookup(&params.voc_table, soc);
        VehicleState {
            speed_ms: 0.0,
            accel_frac: 0.0,
            brake_frac: 0.0,
            battery: BatteryState {
                soc,
                terminal_volts: volts,
                current_amps: 0.0,
            },
            time_s: 0.0,
        }
    }
}

/// Force components realized over one integration step. The integrator
/// guarantees `mass * accel_ms2 == traction_n - aero_n - grade_n - rolling_n`
/// up to rounding, including stopping and standstill steps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepForces {
    /// Net drive minus brake force at the contact patch, after traction caps.
    pub traction_n: f64,
    pub aero_n: f64,
    pub grade_n: f64,
    pub rolling_n: f64,
    pub accel_ms2: f64,
}

/// Aerodynamic, grade and rolling resistance at speed `v` under `d`.
/// Aero drag is signed with the square preserved through `v_rel * |v_rel|`,
/// so a tailwind faster than the vehicle pushes it forward.
pub fn resistive_forces(params: &VehicleParams, v: f64, d: &Disturbance) -> (f64, f64, f64) {
    let v_rel = v + d.wind_ms;
    let f_aero =
        0.5 * params.air_density_kgpm3 * params.drag_coeff * params.frontal_area_m2 * v_rel * v_rel.abs();
    let weight = params.mass_kg * params.gravity_ms2;
    let f_grade = weight * d.theta_rad.sin();
    let f_rolling = weight * params.rolling_coeff * d.theta_rad.cos();
    (f_aero, f_grade, f_rolling)
}

/// Ideal reduction gear: both outputs are the inputs scaled by the ratio.
/// Feeding motor torque and wheel-side speed returns wheel torque and
/// motor-side speed, which conserves power.
pub fn gearbox(torque_in_nm: f64, speed_in_rads: f64, gear_ratio: f64) -> (f64, f64) {
    (gear_ratio * torque_in_nm, gear_ratio * speed_in_rads)
}

/// Motor torque saturation and battery current draw. `speed_rads` is the
/// motor shaft speed. Efficiency divides the current while driving and
/// multiplies it while regenerating; negative current charges the battery.
pub fn electric_drive(
    torque_ref_nm: f64,
    speed_rads: f64,
    terminal_volts: f64,
    params: &VehicleParams,
) -> Result<(f64, f64), SimError> {
    if !(terminal_volts > 0.0) {
        return Err(SimError::NonPositiveVoltage {
            volts: terminal_volts,
        });
    }
    let t_e = torque_ref_nm.clamp(-params.max_motor_torque_nm, params.max_motor_torque_nm);
    let power = t_e * speed_rads;
    let current = if power >= 0.0 {
        power / (terminal_volts * params.motor_efficiency)
    } else {
        power * params.motor_efficiency / terminal_volts
    };
    Ok((t_e, current))
}

/// Wheel torque to contact force and vehicle speed to wheel angular speed.
pub fn wheel(torque_nm: f64, speed_ms: f64, wheel_radius_m: f64) -> (f64, f64) {
    (torque_nm / wheel_radius_m, speed_ms / wheel_radius_m)
}

/// Magic-formula longitudinal tire force for vertical load `f_z_n` and slip
/// ratio `slip`. The peak value `f_z_n * D` is what the integrator uses as a
/// traction cap.
pub fn pacejka(f_z_n: f64, slip: f64, params: &VehicleParams) -> f64 {
    let bk = params.pacejka_b * slip;
    let inner = bk - params.pacejka_e * (bk - bk.atan());
    f_z_n * params.pacejka_d * (params.pacejka_c * inner.atan()).sin()
}

/// Total friction torque of the disc brakes for a line pressure.
pub fn brake_torque(pressure_pa: f64, params: &VehicleParams) -> Result<f64, SimError> {
    if pressure_pa < 0.0 {
        return Err(SimError::NegativePressure {
            pascals: pressure_pa,
        });
    }
    Ok(params.pad_friction
        * pressure_pa
        * core::f64::consts::PI
        * params.brake_bore_m
        * params.brake_bore_m
        * params.brake_mean_radius_m
        * f64::from(params.brake_pad_count)
        / 4.0)
}

/// Coulomb-counting charge update followed by the terminal voltage at the new
/// state of charge. `current_amps` is the pack current; each parallel branch
/// carries its share.
pub fn battery_step(
    b: &BatteryState,
    current_amps: f64,
    params: &VehicleParams,
    dt: f64,
) -> BatteryState {
    let branch_amps = current_amps / f64::from(params.cells_parallel);
    let soc = (b.soc - branch_amps * dt / params.branch_capacity_as).clamp(0.0, 1.0);
    let cell_volts =
        table_lookup(&params.voc_table, soc) - branch_amps * table_lookup(&params.rint_table, soc);
    BatteryState {
        soc,
        terminal_volts: f64::from(params.cells_series) * cell_volts,
        current_amps,
    }
}

/// First-order actuator lag discretized with explicit Euler, output clamped
/// to the physical pedal range [0, 1].
pub fn actuator_step(position: f64, command: f64, time_const_s: f64, dt: f64) -> f64 {
    (position + (dt / time_const_s) * (command - position)).clamp(0.0, 1.0)
}

/// Splits the signed control into exclusive accelerator and brake commands.
pub fn switching_logic(u: f64) -> (f64, f64) {
    if u >= 0.0 {
        (u, 0.0)
    } else {
        (0.0, -u)
    }
}

/// Static front and rear axle loads from the CG position (no load transfer).
pub fn static_axle_loads(params: &VehicleParams) -> (f64, f64) {
    let weight = params.mass_kg * params.gravity_ms2;
    let wheelbase = params.front_axle_to_cg_m + params.rear_axle_to_cg_m;
    let front = weight * params.rear_axle_to_cg_m / wheelbase;
    let rear = weight * params.front_axle_to_cg_m / wheelbase;
    (front, rear)
}

/// Advances the plant by one explicit-Euler step of length `dt` under the
/// normalized control `u` in [-1, 1] and disturbance `d`.
///
/// The vehicle cannot reverse: a step that would integrate the speed below
/// zero is treated as reaching standstill partway through the step, with all
/// force components scaled by the traveled fraction so the reported force
/// balance stays exact. At standstill with insufficient launch force every
/// component reports zero (static friction holds the vehicle).
pub fn plant_step(
    state: &VehicleState,
    u: f64,
    d: &Disturbance,
    params: &VehicleParams,
    dt: f64,
) -> Result<(VehicleState, StepForces), SimError> {
    if !(dt > 0.0) {
        return Err(SimError::NonPositiveSampleTime { seconds: dt });
    }
    let (accel_cmd, brake_cmd) = switching_logic(u.clamp(-1.0, 1.0));
    let accel_frac = actuator_step(state.accel_frac, accel_cmd, params.accel_time_const_s, dt);
    let brake_frac = actuator_step(state.brake_frac, brake_cmd, params.brake_time_const_s, dt);

    let v = state.speed_ms;
    let (_, wheel_omega) = wheel(0.0, v, params.wheel_radius_m);
    // Motor shaft spins gear_ratio times faster than the wheel.
    let (_, motor_omega) = gearbox(0.0, wheel_omega, params.gear_ratio);
    let torque_ref = accel_frac * params.max_motor_torque_nm;
    let (motor_torque, current) =
        electric_drive(torque_ref, motor_omega, state.battery.terminal_volts, params)?;
    let (wheel_torque, _) = gearbox(motor_torque, wheel_omega, params.gear_ratio);
    let (drive_force, _) = wheel(wheel_torque, v, params.wheel_radius_m);

    let pressure = brake_frac * params.max_brake_pressure_pa;
    let brake_force = brake_torque(pressure, params)? / params.wheel_radius_m;

    // Tire force saturation at the peak of the magic formula per loaded axle.
    let (f_z_front, f_z_rear) = static_axle_loads(params);
    let drive_cap = params.pacejka_d
        * match params.driven_axle {
            DrivenAxle::Front => f_z_front,
            DrivenAxle::Rear => f_z_rear,
            DrivenAxle::Both => f_z_front + f_z_rear,
        };
    let brake_cap = params.pacejka_d * (f_z_front + f_z_rear);
    let drive = drive_force.clamp(-drive_cap, drive_cap);
    let brake = brake_force.min(brake_cap);

    let (f_aero, f_grade, f_rolling) = resistive_forces(params, v, d);
    let total = drive - brake - f_aero - f_grade - f_rolling;
    let mass = params.mass_kg;

    let forces;
    let speed_next;
    if v <= 0.0 && total <= 0.0 {
        // Held at standstill; no component does work.
        forces = StepForces::default();
        speed_next = 0.0;
    } else if total < 0.0 && v + total / mass * dt < 0.0 {
        // Reaches standstill partway through the step.
        let fraction = (mass * v / dt) / -total;
        forces = StepForces {
            traction_n: fraction * (drive - brake),
            aero_n: fraction * f_aero,
            grade_n: fraction * f_grade,
            rolling_n: fraction * f_rolling,
            accel_ms2: -v / dt,
        };
        speed_next = 0.0;
    } else {
        let accel = total / mass;
        forces = StepForces {
            traction_n: drive - brake,
            aero_n: f_aero,
            grade_n: f_grade,
            rolling_n: f_rolling,
            accel_ms2: accel,
        };
        speed_next = (v + accel * dt).max(0.0);
    }

    let battery = battery_step(&state.battery, current, params, dt);
    let next = VehicleState {
        speed_ms: speed_next,
        accel_frac,
        brake_frac,
        battery,
        time_s: state.time_s + dt,
    };
    Ok((next, forces))
}
