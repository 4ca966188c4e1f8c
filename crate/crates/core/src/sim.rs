//! Scenario definitions, the closed-loop runner and step-response metrics.
//!
//! A scenario is three time profiles (speed reference, road grade, wind) plus
//! a duration. The runner drives any `SpeedController` against the plant on a
//! uniform time grid and records one row per controller period.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::SimError;
use crate::pid::{pid_step, Gains, PidState};
use crate::plant::{plant_step, Disturbance, VehicleParams, VehicleState};

/// How a profile behaves between breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Hold the value of the latest breakpoint at or before `t`.
    Step,
    /// Linear interpolation between neighboring breakpoints.
    Linear,
}

/// A piecewise signal over time. Before the first breakpoint the first value
/// holds; after the last breakpoint the last value holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    breakpoints: Vec<(f64, f64)>,
    interpolation: Interpolation,
}

impl Profile {
    /// Breakpoint times must be finite and strictly increasing.
    pub fn new(
        breakpoints: Vec<(f64, f64)>,
        interpolation: Interpolation,
    ) -> Result<Profile, SimError> {
        if breakpoints.is_empty() {
            return Err(SimError::InvalidProfile("no breakpoints"));
        }
        for &(t, v) in &breakpoints {
            if !(t.is_finite() && v.is_finite()) {
                return Err(SimError::InvalidProfile("non-finite breakpoint"));
            }
        }
        for pair in breakpoints.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(SimError::InvalidProfile(
                    "breakpoint times must be strictly increasing",
                ));
            }
        }
        Ok(Profile {
            breakpoints,
            interpolation,
        })
    }

    /// Constant signal.
    pub fn constant(value: f64) -> Profile {
        Profile {
            breakpoints: vec![(0.0, value)],
            interpolation: Interpolation::Step,
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Signal value at time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let bps = &self.breakpoints;
        if t <= bps[0].0 {
            return bps[0].1;
        }
        let last = bps[bps.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        // Index of the last breakpoint at or before t; t < last.0 here.
        let idx = bps.partition_point(|bp| bp.0 <= t) - 1;
        match self.interpolation {
            Interpolation::Step => bps[idx].1,
            Interpolation::Linear => {
                let (t0, v0) = bps[idx];
                let (t1, v1) = bps[idx + 1];
                v0 + (t - t0) / (t1 - t0) * (v1 - v0)
            }
        }
    }
}

/// A tracking task: reference speed under time-varying grade and wind.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub duration_s: f64,
    pub speed_ref: Profile,
    /// Road grade angle over time, radians.
    pub slope: Profile,
    /// Headwind speed over time, m/s.
    pub wind: Profile,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(SimError::InvalidProfile(
                "scenario duration must be strictly positive",
            ));
        }
        Ok(())
    }
}

/// Runner settings independent of the vehicle and scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Controller period and integrator step, seconds.
    pub ts: f64,
    /// Battery state of charge at scenario start.
    pub initial_soc: f64,
    /// Vehicle speed at scenario start, m/s; pedals start released.
    pub initial_speed_ms: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            ts: 0.01,
            initial_soc: 0.9,
            initial_speed_ms: 0.0,
        }
    }
}

/// One sample of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRow {
    pub t: f64,
    pub v_ref: f64,
    pub v: f64,
    pub e: f64,
    pub u: f64,
    pub accel_frac: f64,
    pub brake_frac: f64,
    pub theta_rad: f64,
    pub wind_ms: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub soc: f64,
}

/// Uniformly sampled closed-loop trace. Holds `duration / ts + 1` rows; the
/// final row repeats the last applied control and gains since the controller
/// runs once per integration step.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub label: String,
    pub ts: f64,
    pub rows: Vec<RunRow>,
}

impl RunRecord {
    /// Mean squared tracking error over every recorded row.
    pub fn mse(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.rows.iter().map(|r| r.e * r.e).sum();
        sum / self.rows.len() as f64
    }
}

/// A speed controller driven once per sample by the runner. Implementations
/// own whatever state they carry between steps.
pub trait SpeedController {
    /// Computes the normalized control in [-1, 1] for the current reference
    /// and measurement, and reports the gains in effect this step.
    fn step(
        &mut self,
        v_ref: f64,
        v: f64,
        theta_rad: f64,
        wind_ms: f64,
        ts: f64,
    ) -> Result<(f64, Gains), SimError>;
}

/// PID with fixed gains.
#[derive(Debug, Clone)]
pub struct FixedPid {
    pub gains: Gains,
    state: PidState,
}

impl FixedPid {
    pub fn new(gains: Gains) -> FixedPid {
        FixedPid {
            gains,
            state: PidState::default(),
        }
    }
}

impl SpeedController for FixedPid {
    fn step(
        &mut self,
        v_ref: f64,
        v: f64,
        _theta_rad: f64,
        _wind_ms: f64,
        ts: f64,
    ) -> Result<(f64, Gains), SimError> {
        let (u, next) = pid_step(&self.state, self.gains, v_ref - v, ts);
        self.state = next;
        Ok((u, self.gains))
    }
}

/// Runs `controller` against the plant over `scenario`, starting at the
/// configured initial speed (rest by default) with pedals released.
///
/// Row `k` records the state at `t = k * ts` together with the control
/// computed from it and applied over the following step. Errors from the
/// controller or plant carry the failing step index.
pub fn run_closed_loop(
    controller: &mut dyn SpeedController,
    scenario: &Scenario,
    params: &VehicleParams,
    sim: &SimConfig,
) -> Result<RunRecord, SimError> {
    params.validate()?;
    scenario.validate()?;
    if !(sim.ts > 0.0 && sim.ts.is_finite()) {
        return Err(SimError::NonPositiveSampleTime { seconds: sim.ts });
    }
    if !(sim.initial_speed_ms >= 0.0 && sim.initial_speed_ms.is_finite()) {
        return Err(SimError::InvalidParam {
            name: "initial_speed_ms",
            value: sim.initial_speed_ms,
        });
    }
    let steps = (scenario.duration_s / sim.ts).round() as usize;
    if steps == 0 {
        return Err(SimError::InvalidProfile(
            "scenario shorter than one sample period",
        ));
    }

    let mut state = VehicleState::at_rest(params, sim.initial_soc);
    state.speed_ms = sim.initial_speed_ms;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut held = (0.0, Gains::ZERO);
    for k in 0..=steps {
        let t = k as f64 * sim.ts;
        let v_ref = scenario.speed_ref.eval(t);
        let theta_rad = scenario.slope.eval(t);
        let wind_ms = scenario.wind.eval(t);
        let (u, gains) = if k < steps {
            let out = controller
                .step(v_ref, state.speed_ms, theta_rad, wind_ms, sim.ts)
                .map_err(|e| e.at_step(k))?;
            held = out;
            out
        } else {
            held
        };
        rows.push(RunRow {
            t,
            v_ref,
            v: state.speed_ms,
            e: v_ref - state.speed_ms,
            u,
            accel_frac: state.accel_frac,
            brake_frac: state.brake_frac,
            theta_rad,
            wind_ms,
            kp: gains.kp,
            ki: gains.ki,
            kd: gains.kd,
            soc: state.battery.soc,
        });
        if k < steps {
            let d = Disturbance { theta_rad, wind_ms };
            let (next, _) = plant_step(&state, u, &d, params, sim.ts).map_err(|e| e.at_step(k))?;
            state = next;
        }
    }
    Ok(RunRecord {
        label: scenario.label.clone(),
        ts: sim.ts,
        rows,
    })
}

/// Step-response quality measures over a recorded run. Rise and settling
/// time are absent when the trace never makes the corresponding crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    /// Time from the 10% to the 90% crossing of the step target.
    pub rise_time_s: Option<f64>,
    /// First time after which the speed stays within 2% of the step target.
    pub settling_time_s: Option<f64>,
    /// Peak excursion above the step target, percent, clamped at zero.
    pub overshoot_pct: Option<f64>,
}

/// First time the speed reaches `threshold` from below. Absent when the
/// trace starts at or above the threshold (no crossing exists).
fn first_crossing(rows: &[RunRow], threshold: f64) -> Option<f64> {
    if rows[0].v >= threshold {
        return None;
    }
    rows.iter().find(|r| r.v >= threshold).map(|r| r.t)
}

/// Computes tracking and step-response metrics against the step target
/// `step_final`. With a non-positive target only the MSE is defined.
pub fn compute_metrics(record: &RunRecord, step_final: f64) -> Metrics {
    let mse = record.mse();
    if !(step_final > 0.0) || record.rows.is_empty() {
        return Metrics {
            mse,
            rise_time_s: None,
            settling_time_s: None,
            overshoot_pct: None,
        };
    }
    let rows = &record.rows;

    let t10 = first_crossing(rows, 0.1 * step_final);
    let t90 = first_crossing(rows, 0.9 * step_final);
    let rise_time_s = match (t10, t90) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };

    let band = 0.02 * step_final;
    let last_outside = rows.iter().rposition(|r| (r.v - step_final).abs() > band);
    let settling_time_s = match last_outside {
        None => Some(0.0),
        Some(i) if i + 1 < rows.len() => Some(rows[i + 1].t),
        Some(_) => None, // still outside the band at the end of the run
    };

    let v_max = rows.iter().map(|r| r.v).fold(f64::NEG_INFINITY, f64::max);
    let overshoot_pct = Some((100.0 * (v_max - step_final) / step_final).max(0.0));

    Metrics {
        mse,
        rise_time_s,
        settling_time_s,
        overshoot_pct,
    }
}

fn multi_step_speed_profile() -> Profile {
    Profile::new(
        vec![(0.0, 0.0), (5.0, 15.0), (20.0, 25.0), (35.0, 10.0), (50.0, 20.0)],
        Interpolation::Step,
    )
    .expect("static profile")
}

/// Multi-step speed tracking on a flat, calm road.
pub fn scenario_sc1() -> Scenario {
    Scenario {
        label: String::from("sc1"),
        duration_s: 60.0,
        speed_ref: multi_step_speed_profile(),
        slope: Profile::constant(0.0),
        wind: Profile::constant(0.0),
    }
}

/// The sc1 speed profile with triangular wind and grade sweeps layered on
/// top: wind 0 -> 15 -> -10 -> 0 m/s, grade 0 -> 10 -> -10 -> 0 degrees.
pub fn scenario_sc2() -> Scenario {
    let wind = Profile::new(
        vec![(0.0, 0.0), (10.0, 0.0), (25.0, 15.0), (40.0, -10.0), (55.0, 0.0)],
        Interpolation::Linear,
    )
    .expect("static profile");
    let ten_deg = 10.0_f64.to_radians();
    let slope = Profile::new(
        vec![
            (0.0, 0.0),
            (10.0, 0.0),
            (25.0, ten_deg),
            (40.0, -ten_deg),
            (55.0, 0.0),
        ],
        Interpolation::Linear,
    )
    .expect("static profile");
    Scenario {
        label: String::from("sc2"),
        duration_s: 60.0,
        speed_ref: multi_step_speed_profile(),
        slope,
        wind,
    }
}

/// The sc2 task relabeled for runs driven by a disturbance-indexed gain
/// table rather than fixed gains.
pub fn scenario_sc3_demo() -> Scenario {
    Scenario {
        label: String::from("sc3_demo"),
        ..scenario_sc2()
    }
}

/// Disturbed step benchmark: 0 -> 10 m/s at t = 1 s on a 3 degree climb in a
/// 5 m/s headwind, 20 s horizon.
pub fn benchmark_step() -> Scenario {
    Scenario {
        label: String::from("benchmark"),
        duration_s: 20.0,
        speed_ref: Profile::new(vec![(0.0, 0.0), (1.0, 10.0)], Interpolation::Step)
            .expect("static profile"),
        slope: Profile::constant(3.0_f64.to_radians()),
        wind: Profile::constant(5.0),
    }
}

/// Looks up a shipped scenario by name.
pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    match name {
        "sc1" => Some(scenario_sc1()),
        "sc2" => Some(scenario_sc2()),
        "sc3_demo" => Some(scenario_sc3_demo()),
        "benchmark" => Some(benchmark_step()),
        _ => None,
    }
}
