//! TOML run configuration. Every section is optional and every field inside
//! a section is optional: an empty file (or no file at all) resolves to the
//! built-in vehicle, runner and tuner defaults, and a config only states
//! what it changes.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use cruise_core::{
    builtin_scenario, DrivenAxle, GaConfig, Gains, GridSpec, Interpolation, NnConfig, Profile,
    Scenario, SimConfig, VehicleParams,
};

use crate::error::CliError;

/// Gains used when a fixed controller is requested without any: the shipped
/// tuner's result on the flat drive scenario with the default seed.
pub const DEFAULT_FIXED_GAINS: Gains = Gains {
    kp: 17.07376459828741,
    ki: 8.885686185483605,
    kd: 0.0,
};

fn config_err(err: impl core::fmt::Display) -> CliError {
    CliError::Config(err.to_string())
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub vehicle: VehicleOverrides,
    pub sim: SimOverrides,
    pub controller: ControllerConfig,
    pub scenario: Option<ScenarioConfig>,
    pub ga: GaOverrides,
    pub grid: GridOverrides,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Load from a TOML file, or all defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fold command-line flags into the loaded file. The seed drives both
    /// tuner runs and network weight initialization so one flag pins a whole
    /// command.
    pub fn apply_cli(&mut self, seed: Option<u64>, ts: Option<f64>, out: Option<PathBuf>) {
        if let Some(seed) = seed {
            self.ga.seed = Some(seed);
            self.controller.nn.init_seed = Some(seed);
        }
        if let Some(ts) = ts {
            self.sim.ts = Some(ts);
        }
        if let Some(out) = out {
            self.output.dir = Some(out);
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleOverrides {
    pub mass_kg: Option<f64>,
    pub gravity_ms2: Option<f64>,
    pub air_density_kgpm3: Option<f64>,
    pub drag_coeff: Option<f64>,
    pub frontal_area_m2: Option<f64>,
    pub rolling_coeff: Option<f64>,
    pub gear_ratio: Option<f64>,
    pub wheel_radius_m: Option<f64>,
    pub max_motor_torque_nm: Option<f64>,
    pub motor_efficiency: Option<f64>,
    pub max_brake_pressure_pa: Option<f64>,
    pub pad_friction: Option<f64>,
    pub brake_bore_m: Option<f64>,
    pub brake_mean_radius_m: Option<f64>,
    pub brake_pad_count: Option<u32>,
    pub cells_series: Option<u32>,
    pub cells_parallel: Option<u32>,
    pub branch_capacity_as: Option<f64>,
    pub voc_table: Option<Vec<(f64, f64)>>,
    pub rint_table: Option<Vec<(f64, f64)>>,
    pub cg_height_m: Option<f64>,
    pub front_axle_to_cg_m: Option<f64>,
    pub rear_axle_to_cg_m: Option<f64>,
    pub accel_time_const_s: Option<f64>,
    pub brake_time_const_s: Option<f64>,
    pub pacejka_b: Option<f64>,
    pub pacejka_c: Option<f64>,
    pub pacejka_d: Option<f64>,
    pub pacejka_e: Option<f64>,
    /// "front", "rear" or "both".
    pub driven_axle: Option<String>,
}

impl VehicleOverrides {
    pub fn resolve(&self) -> Result<VehicleParams, CliError> {
        let mut p = VehicleParams::default();
        macro_rules! copy_over {
            ($($field:ident),* $(,)?) => {
                $( if let Some(v) = self.$field { p.$field = v; } )*
            };
        }
        copy_over!(
            mass_kg,
            gravity_ms2,
            air_density_kgpm3,
            drag_coeff,
            frontal_area_m2,
            rolling_coeff,
            gear_ratio,
            wheel_radius_m,
            max_motor_torque_nm,
            motor_efficiency,
            max_brake_pressure_pa,
            pad_friction,
            brake_bore_m,
            brake_mean_radius_m,
            brake_pad_count,
            cells_series,
            cells_parallel,
            branch_capacity_as,
            cg_height_m,
            front_axle_to_cg_m,
            rear_axle_to_cg_m,
            accel_time_const_s,
            brake_time_const_s,
            pacejka_b,
            pacejka_c,
            pacejka_d,
            pacejka_e,
        );
        if let Some(table) = &self.voc_table {
            p.voc_table = table.clone();
        }
        if let Some(table) = &self.rint_table {
            p.rint_table = table.clone();
        }
        if let Some(axle) = &self.driven_axle {
            p.driven_axle = match axle.as_str() {
                "front" => DrivenAxle::Front,
                "rear" => DrivenAxle::Rear,
                "both" => DrivenAxle::Both,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown driven_axle {other:?}, expected \"front\", \"rear\" or \"both\""
                    )))
                }
            };
        }
        p.validate().map_err(config_err)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOverrides {
    pub ts: Option<f64>,
    pub initial_soc: Option<f64>,
    pub initial_speed_ms: Option<f64>,
    /// Optional scenario horizon override, seconds.
    pub duration_s: Option<f64>,
}

impl SimOverrides {
    pub fn resolve(&self) -> SimConfig {
        let mut sim = SimConfig::default();
        if let Some(ts) = self.ts {
            sim.ts = ts;
        }
        if let Some(soc) = self.initial_soc {
            sim.initial_soc = soc;
        }
        if let Some(v0) = self.initial_speed_ms {
            sim.initial_speed_ms = v0;
        }
        sim
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// "fixed", "table" or "nn"; a --controller flag wins over this.
    pub variant: Option<String>,
    pub kp: Option<f64>,
    pub ki: Option<f64>,
    pub kd: Option<f64>,
    /// Gain table CSV for the "table" variant.
    pub table_path: Option<PathBuf>,
    pub nn: NnOverrides,
}

impl ControllerConfig {
    pub fn fixed_gains(&self) -> Gains {
        Gains {
            kp: self.kp.unwrap_or(DEFAULT_FIXED_GAINS.kp),
            ki: self.ki.unwrap_or(DEFAULT_FIXED_GAINS.ki),
            kd: self.kd.unwrap_or(DEFAULT_FIXED_GAINS.kd),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NnOverrides {
    pub n_hidden: Option<usize>,
    pub learning_rate: Option<f64>,
    pub gain_scale: Option<[f64; 3]>,
    pub input_scale: Option<[f64; 4]>,
    pub init_seed: Option<u64>,
    pub init_range: Option<f64>,
}

impl NnOverrides {
    pub fn resolve(&self) -> Result<NnConfig, CliError> {
        let mut cfg = NnConfig::default();
        if let Some(h) = self.n_hidden {
            cfg.n_hidden = h;
        }
        if let Some(lr) = self.learning_rate {
            cfg.learning_rate = lr;
        }
        if let Some(scale) = self.gain_scale {
            cfg.gain_scale = scale;
        }
        if let Some(scale) = self.input_scale {
            cfg.input_scale = scale;
        }
        if let Some(seed) = self.init_seed {
            cfg.init_seed = seed;
        }
        if let Some(range) = self.init_range {
            cfg.init_range = range;
        }
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Builtin name ("sc1", "sc2", "sc3_demo", "benchmark") used as the base.
    pub name: Option<String>,
    pub label: Option<String>,
    pub duration_s: Option<f64>,
    pub speed_ref: Option<ProfileConfig>,
    pub slope: Option<ProfileConfig>,
    pub wind: Option<ProfileConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// "step" (default) or "linear".
    pub interpolation: Option<String>,
    /// `[[t0, v0], [t1, v1], ...]`, times strictly increasing.
    pub breakpoints: Vec<(f64, f64)>,
}

impl ProfileConfig {
    pub fn resolve(&self) -> Result<Profile, CliError> {
        let interpolation = match self.interpolation.as_deref() {
            None | Some("step") => Interpolation::Step,
            Some("linear") => Interpolation::Linear,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "unknown interpolation {other:?}, expected \"step\" or \"linear\""
                )))
            }
        };
        Profile::new(self.breakpoints.clone(), interpolation).map_err(config_err)
    }
}

fn named_builtin(name: &str) -> Result<Scenario, CliError> {
    builtin_scenario(name)
        .ok_or_else(|| CliError::Config(format!("unknown scenario {name:?}")))
}

/// Pick the scenario for a run: an explicit --scenario flag names a builtin,
/// otherwise the config's scenario section (builtin base plus overrides, or
/// fully inline profiles), otherwise the flat drive cycle. The sim section's
/// duration override applies last.
pub fn resolve_scenario(cfg: &RunConfig, flag: Option<&str>) -> Result<Scenario, CliError> {
    let mut scenario = if let Some(name) = flag {
        named_builtin(name)?
    } else if let Some(sc) = &cfg.scenario {
        let mut base = match &sc.name {
            Some(name) => named_builtin(name)?,
            None => {
                let Some(speed_ref) = &sc.speed_ref else {
                    return Err(CliError::Config(
                        "scenario needs a builtin name or a speed_ref profile".into(),
                    ));
                };
                Scenario {
                    label: "custom".into(),
                    duration_s: 60.0,
                    speed_ref: speed_ref.resolve()?,
                    slope: Profile::constant(0.0),
                    wind: Profile::constant(0.0),
                }
            }
        };
        if let Some(label) = &sc.label {
            base.label = label.clone();
        }
        if let Some(d) = sc.duration_s {
            base.duration_s = d;
        }
        if sc.name.is_some() {
            if let Some(p) = &sc.speed_ref {
                base.speed_ref = p.resolve()?;
            }
        }
        if let Some(p) = &sc.slope {
            base.slope = p.resolve()?;
        }
        if let Some(p) = &sc.wind {
            base.wind = p.resolve()?;
        }
        base
    } else {
        named_builtin("sc1")?
    };
    if let Some(d) = cfg.sim.duration_s {
        scenario.duration_s = d;
    }
    scenario.validate().map_err(config_err)?;
    Ok(scenario)
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaOverrides {
    pub population_size: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub mutation_sigma: Option<f64>,
    pub elite_fraction: Option<f64>,
    pub lower_bounds: Option<[f64; 3]>,
    pub upper_bounds: Option<[f64; 3]>,
    pub seed: Option<u64>,
    pub fitness_cap: Option<f64>,
}

impl GaOverrides {
    pub fn resolve(&self) -> Result<GaConfig, CliError> {
        let mut cfg = GaConfig::default();
        if let Some(n) = self.population_size {
            cfg.population_size = n;
        }
        if let Some(n) = self.generations {
            cfg.generations = n;
        }
        if let Some(r) = self.crossover_rate {
            cfg.crossover_rate = r;
        }
        if let Some(r) = self.mutation_rate {
            cfg.mutation_rate = r;
        }
        if let Some(s) = self.mutation_sigma {
            cfg.mutation_sigma = s;
        }
        if let Some(f) = self.elite_fraction {
            cfg.elite_fraction = f;
        }
        if let Some(b) = self.lower_bounds {
            cfg.lower_bounds = b;
        }
        if let Some(b) = self.upper_bounds {
            cfg.upper_bounds = b;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(cap) = self.fitness_cap {
            cfg.fitness_cap = cap;
        }
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridOverrides {
    pub v_ref: Option<Vec<f64>>,
    pub theta_rad: Option<Vec<f64>>,
    pub wind_ms: Option<Vec<f64>>,
    pub node_duration_s: Option<f64>,
    pub node_step_ms: Option<f64>,
}

impl GridOverrides {
    pub fn resolve(&self) -> Result<GridSpec, CliError> {
        let mut grid = GridSpec::default();
        if let Some(axis) = &self.v_ref {
            grid.v_ref = axis.clone();
        }
        if let Some(axis) = &self.theta_rad {
            grid.theta_rad = axis.clone();
        }
        if let Some(axis) = &self.wind_ms {
            grid.wind_ms = axis.clone();
        }
        if let Some(d) = self.node_duration_s {
            grid.node_duration_s = d;
        }
        if let Some(s) = self.node_step_ms {
            grid.node_step_ms = s;
        }
        grid.validate().map_err(config_err)?;
        Ok(grid)
    }

    /// Merge another override block on top of this one (used by --grid files).
    pub fn merged_with(&self, over: &GridOverrides) -> GridOverrides {
        GridOverrides {
            v_ref: over.v_ref.clone().or_else(|| self.v_ref.clone()),
            theta_rad: over.theta_rad.clone().or_else(|| self.theta_rad.clone()),
            wind_ms: over.wind_ms.clone().or_else(|| self.wind_ms.clone()),
            node_duration_s: over.node_duration_s.or(self.node_duration_s),
            node_step_ms: over.node_step_ms.or(self.node_step_ms),
        }
    }
}

/// Parse a standalone grid override file (top-level keys, same names as the
/// [grid] section).
pub fn load_grid_file(path: &Path) -> Result<GridOverrides, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}
