use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use coman::sim::{self, ControllerKind, Overrides, ScenarioConfig, SimError};

#[derive(Parser)]
#[command(name = "coman", version, about = "Run cooperative manipulation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Controller {
    #[value(name = "ability_aware", alias = "ability-aware")]
    AbilityAware,
    #[value(name = "ability_agnostic", alias = "ability-agnostic")]
    AbilityAgnostic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write logs and metrics to a directory.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Control period in seconds.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum)]
        controller: Option<Controller>,
        #[arg(long, value_enum)]
        manip_opt: Option<Switch>,
        /// Broadcast delivery delay in ticks.
        #[arg(long)]
        bus_delay: Option<u64>,
    },
    /// Recompute metrics from the logs in a run directory.
    Report {
        #[arg(long)]
        out: PathBuf,
        /// Seconds to exclude from the start of the averages.
        #[arg(long)]
        warmup: Option<f64>,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            duration,
            dt,
            controller,
            manip_opt,
            bus_delay,
        } => {
            let mut cfg = ScenarioConfig::load(&scenario)?;
            cfg.apply(&Overrides {
                seed,
                duration,
                dt,
                controller: controller.map(|c| match c {
                    Controller::AbilityAware => ControllerKind::AbilityAware,
                    Controller::AbilityAgnostic => ControllerKind::AbilityAgnostic,
                }),
                manip_opt: manip_opt.map(|m| matches!(m, Switch::On)),
                bus_delay,
            });
            cfg.validate()?;
            log::info!("running `{}`: {} ticks at dt = {}", cfg.name, cfg.n_ticks(), cfg.dt);
            let started = std::time::Instant::now();
            let output = sim::run_scenario(&cfg)?;
            log::info!("finished in {:.2} s", started.elapsed().as_secs_f64());
            sim::write_outputs(&out, &cfg, &output)?;
            print!("{}", output.metrics.summary());
        }
        Command::Report { out, warmup } => {
            let metrics = sim::report_from_dir(&out, warmup)?;
            sim::write_metrics(&out, &metrics)?;
            print!("{}", metrics.summary());
        }
        Command::Validate { scenario } => {
            let cfg = ScenarioConfig::load(&scenario)?;
            cfg.validate()?;
            println!(
                "{}: ok ({} robots, {} ticks, {} events)",
                scenario.display(),
                cfg.robots.len(),
                cfg.n_ticks(),
                cfg.events.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
