use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cruise_cli::commands::{self, SweepGainFiles};
use cruise_cli::config::RunConfig;
use cruise_cli::CliError;

#[derive(Parser)]
#[command(
    name = "cruise",
    version,
    about = "EV speed-control simulator: fixed, gain-table and NN-adapted PID"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for tuner runs and network weight initialization.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default "out").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Controller period and integration step, seconds.
    #[arg(long)]
    ts: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv and metrics.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Controller variant: "fixed", "table" or "nn".
        #[arg(long)]
        controller: Option<String>,
        /// Builtin scenario: "sc1", "sc2", "sc3_demo" or "benchmark".
        #[arg(long)]
        scenario: Option<String>,
        /// Gain table CSV for the table controller.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Tune fixed gains on a scenario; write gains.csv and fitness_history.csv.
    Tune {
        #[command(flatten)]
        common: Common,
        /// Builtin scenario to tune against (default "sc1").
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Tune gains for every grid node and write gain_table.csv.
    BuildTable {
        #[command(flatten)]
        common: Common,
        /// Grid override TOML (same keys as the [grid] config section).
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Step-response benchmark over network sizes and learning rates, plus
    /// optional rows for previously tuned gain artifacts.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Hidden layer sizes, comma separated.
        #[arg(long = "h", value_delimiter = ',')]
        h: Vec<usize>,
        /// Learning rates, comma separated.
        #[arg(long = "lr", value_delimiter = ',')]
        lr: Vec<f64>,
        /// gains.csv tuned on the flat drive cycle; adds a "ga_sc1" row.
        #[arg(long)]
        gains_sc1: Option<PathBuf>,
        /// gains.csv tuned on the disturbed drive cycle; adds a "ga_sc2" row.
        #[arg(long)]
        gains_sc2: Option<PathBuf>,
        /// gain_table.csv; adds a "ga_table" row.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    cfg.apply_cli(common.seed, common.ts, common.out.clone());
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            common,
            controller,
            scenario,
            table,
        } => {
            let cfg = load(&common)?;
            commands::cmd_simulate(
                &cfg,
                controller.as_deref(),
                scenario.as_deref(),
                table.as_deref(),
            )
        }
        Command::Tune { common, scenario } => {
            let cfg = load(&common)?;
            commands::cmd_tune(&cfg, scenario.as_deref())
        }
        Command::BuildTable { common, grid } => {
            let cfg = load(&common)?;
            commands::cmd_build_table(&cfg, grid.as_deref())
        }
        Command::Sweep {
            common,
            h,
            lr,
            gains_sc1,
            gains_sc2,
            table,
        } => {
            let cfg = load(&common)?;
            let gain_files = SweepGainFiles {
                gains_sc1,
                gains_sc2,
                table,
            };
            commands::cmd_sweep(&cfg, &h, &lr, &gain_files)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are not failures; anything else is a usage
            // problem and shares the config-error exit code.
            use clap::error::ErrorKind;
            let ok = matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
