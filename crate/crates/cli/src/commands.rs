//! Subcommand implementations. Each returns `Ok(())` for exit 0 or a
//! `CliError` carrying the exit code; anything worth reporting on a failure
//! path goes to standard error in `main`.

use std::fs;
use std::path::{Path, PathBuf};

use cruise_core::{
    build_gain_table, compute_metrics, run_closed_loop, tune, FixedPid, Metrics, NnPid, RunRecord,
    Scenario, SimError, SpeedController, TablePid,
};

use crate::config::{load_grid_file, resolve_scenario, RunConfig};
use crate::error::CliError;
use crate::io::{self, MetricsRow};

fn run_err(e: SimError) -> CliError {
    CliError::Run(e.to_string())
}

fn config_err(e: SimError) -> CliError {
    CliError::Config(e.to_string())
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Run(format!("{}: {e}", dir.display())))
}

/// Final commanded speed of the scenario, used as the step target for the
/// rise/settling/overshoot metrics.
fn step_target(scenario: &Scenario) -> f64 {
    scenario
        .speed_ref
        .breakpoints()
        .last()
        .map(|&(_, v)| v)
        .unwrap_or(0.0)
}

fn make_controller(
    cfg: &RunConfig,
    variant_flag: Option<&str>,
    table_flag: Option<&Path>,
) -> Result<Box<dyn SpeedController>, CliError> {
    let variant = variant_flag
        .map(str::to_owned)
        .or_else(|| cfg.controller.variant.clone())
        .unwrap_or_else(|| "fixed".into());
    match variant.as_str() {
        "fixed" => Ok(Box::new(FixedPid::new(cfg.controller.fixed_gains()))),
        "table" => {
            let path = table_flag
                .map(Path::to_path_buf)
                .or_else(|| cfg.controller.table_path.clone())
                .ok_or_else(|| {
                    CliError::Config(
                        "table controller needs --table or controller.table_path".into(),
                    )
                })?;
            Ok(Box::new(TablePid::new(io::read_gain_table(&path)?)))
        }
        "nn" => {
            let nn_cfg = cfg.controller.nn.resolve()?;
            Ok(Box::new(NnPid::new(nn_cfg).map_err(config_err)?))
        }
        other => Err(CliError::Config(format!(
            "unknown controller {other:?}, expected \"fixed\", \"table\" or \"nn\""
        ))),
    }
}

fn simulate_record(
    cfg: &RunConfig,
    controller: &mut dyn SpeedController,
    scenario: &Scenario,
) -> Result<(RunRecord, Metrics), CliError> {
    let params = cfg.vehicle.resolve()?;
    let sim = cfg.sim.resolve();
    let record = run_closed_loop(controller, scenario, &params, &sim).map_err(run_err)?;
    let metrics = compute_metrics(&record, step_target(scenario));
    Ok((record, metrics))
}

pub fn cmd_simulate(
    cfg: &RunConfig,
    controller_flag: Option<&str>,
    scenario_flag: Option<&str>,
    table_flag: Option<&Path>,
) -> Result<(), CliError> {
    let scenario = resolve_scenario(cfg, scenario_flag)?;
    let mut controller = make_controller(cfg, controller_flag, table_flag)?;
    let (record, metrics) = simulate_record(cfg, controller.as_mut(), &scenario)?;

    let out = cfg.out_dir();
    ensure_out_dir(&out)?;
    io::write_trace(&out.join("trace.csv"), &record)?;
    io::write_metrics(
        &out.join("metrics.csv"),
        &[MetricsRow {
            label: record.label.clone(),
            metrics,
        }],
    )?;
    println!(
        "simulate {}: {} rows, mse {}",
        record.label,
        record.rows.len(),
        record.mse()
    );
    Ok(())
}

pub fn cmd_tune(cfg: &RunConfig, scenario_flag: Option<&str>) -> Result<(), CliError> {
    let params = cfg.vehicle.resolve()?;
    let sim = cfg.sim.resolve();
    let scenario = resolve_scenario(cfg, scenario_flag)?;
    let ga = cfg.ga.resolve()?;
    let result = tune(&ga, &scenario, &params, &sim).map_err(run_err)?;

    let out = cfg.out_dir();
    ensure_out_dir(&out)?;
    io::write_gains(&out.join("gains.csv"), result.best.gains)?;
    io::write_history(&out.join("fitness_history.csv"), &result.history)?;
    let g = result.best.gains;
    println!(
        "tune {}: kp {} ki {} kd {} fitness {}",
        scenario.label,
        g.kp,
        g.ki,
        g.kd,
        result.best.fitness.unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn cmd_build_table(cfg: &RunConfig, grid_flag: Option<&Path>) -> Result<(), CliError> {
    let params = cfg.vehicle.resolve()?;
    let sim = cfg.sim.resolve();
    let ga = cfg.ga.resolve()?;
    let grid_overrides = match grid_flag {
        Some(path) => cfg.grid.merged_with(&load_grid_file(path)?),
        None => cfg.grid.clone(),
    };
    let grid = grid_overrides.resolve()?;
    let build = build_gain_table(&ga, &grid, &params, &sim).map_err(run_err)?;

    let out = cfg.out_dir();
    ensure_out_dir(&out)?;
    io::write_gain_table(&out.join("gain_table.csv"), &build.table)?;
    println!(
        "build-table: {} nodes ({} failed)",
        build.table.cells().len(),
        build.failures.len()
    );
    for f in &build.failures {
        eprintln!(
            "node (v_ref={}, theta_rad={}, v_w={}) failed: {}",
            f.v_ref, f.theta_rad, f.wind_ms, f.reason
        );
    }
    if !build.failures.is_empty() {
        return Err(CliError::NodeFailures {
            count: build.failures.len(),
        });
    }
    Ok(())
}

/// Paths to previously tuned artifacts that become extra sweep rows.
#[derive(Debug, Default)]
pub struct SweepGainFiles {
    pub gains_sc1: Option<PathBuf>,
    pub gains_sc2: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    h_list: &[usize],
    lr_list: &[f64],
    gain_files: &SweepGainFiles,
) -> Result<(), CliError> {
    if h_list.is_empty() || lr_list.is_empty() {
        return Err(CliError::Config(
            "sweep needs nonempty --h and --lr lists".into(),
        ));
    }
    let scenario = resolve_scenario(cfg, Some("benchmark"))?;

    let mut rows = Vec::new();
    for &h in h_list {
        for &lr in lr_list {
            let mut nn_cfg = cfg.controller.nn.resolve()?;
            nn_cfg.n_hidden = h;
            nn_cfg.learning_rate = lr;
            let mut controller = NnPid::new(nn_cfg).map_err(config_err)?;
            let (_, metrics) = simulate_record(cfg, &mut controller, &scenario)?;
            rows.push(MetricsRow {
                label: format!("nn_h{h}_lr{lr}"),
                metrics,
            });
        }
    }
    if let Some(path) = &gain_files.gains_sc1 {
        let mut controller = FixedPid::new(io::read_gains(path)?);
        let (_, metrics) = simulate_record(cfg, &mut controller, &scenario)?;
        rows.push(MetricsRow {
            label: "ga_sc1".into(),
            metrics,
        });
    }
    if let Some(path) = &gain_files.gains_sc2 {
        let mut controller = FixedPid::new(io::read_gains(path)?);
        let (_, metrics) = simulate_record(cfg, &mut controller, &scenario)?;
        rows.push(MetricsRow {
            label: "ga_sc2".into(),
            metrics,
        });
    }
    if let Some(path) = &gain_files.table {
        let mut controller = TablePid::new(io::read_gain_table(path)?);
        let (_, metrics) = simulate_record(cfg, &mut controller, &scenario)?;
        rows.push(MetricsRow {
            label: "ga_table".into(),
            metrics,
        });
    }

    let out = cfg.out_dir();
    ensure_out_dir(&out)?;
    io::write_metrics(&out.join("sweep_metrics.csv"), &rows)?;
    println!("sweep: {} rows", rows.len());
    Ok(())
}
