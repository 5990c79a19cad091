use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ftmav::config::{fault_case, Mode, ScenarioConfig};
use ftmav::format::{fmt_num, write_file, Table};
use ftmav::metrics::{export_metrics, log_trajectories};
use ftmav::planning::{pipeline_table, plan_table, PlanningContext};
use ftmav::tables::{reproduce_table, sweep_table};
use ftmav::{run_simulation, HarnessError};
use ftmav_core::actuation::build_actuation_matrix;
use ftmav_core::maneuverability::{fault_sweep, ControlPolytope, FaultCase};

#[derive(Parser)]
#[command(name = "ftmav", version, about = "Fault-tolerant multirotor simulation, analysis and planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop simulation; writes the log CSV to `output.log` or stdout.
    Simulate { config: PathBuf },
    /// Hover controllability sweep over all fault sets of the given order.
    AnalyzeControllability {
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
    },
    /// Halfspaces of the admissible control set, optionally with failed motors (1-based).
    BuildPolytope {
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        faults: Vec<usize>,
    },
    /// Plan at the mission duration; writes to `output.plan` or stdout.
    Plan {
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Minimum times, violation scan and RSP re-plan for the configured fault sets.
    RspPipeline { config: PathBuf },
    /// Regenerates a result table by id.
    ReproduceTable { id: String },
    /// Path-error metrics of a simulation log against a mission configuration.
    Metrics { log: PathBuf, mission: PathBuf },
}

fn emit(text: &str, path: Option<&str>) -> Result<(), HarnessError> {
    match path {
        Some(p) => write_file(Path::new(p), text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn polytope_table(poly: &ControlPolytope) -> Table {
    let mut t = Table::new(&["a", "b", "c", "d", "e"]);
    for h in &poly.halfspaces {
        let mut row: Vec<String> = h.normal.iter().map(|v| fmt_num(*v)).collect();
        row.push(fmt_num(h.offset));
        t.push(row);
    }
    t
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let log = run_simulation(&cfg)?;
            emit(&log.table().to_csv(), cfg.output.log.as_deref())?;
            if let Some(failure) = log.failure {
                return Err(HarnessError::Numerical(format!("run aborted at t = {}: {failure}", log.rows.last().map_or(0.0, |r| r.t))));
            }
            Ok(())
        }
        Command::AnalyzeControllability { config, order } => {
            let cfg = ScenarioConfig::load(&config)?;
            let report = fault_sweep(&cfg.params()?, order as usize)?;
            emit(&sweep_table(&report).to_csv(), None)
        }
        Command::BuildPolytope { config, faults } => {
            let cfg = ScenarioConfig::load(&config)?;
            let p = cfg.params()?;
            let n = p.rotor_count();
            let case = if faults.is_empty() { FaultCase::new(Vec::new()) } else { fault_case(&faults, n)? };
            let a = build_actuation_matrix(&p).map_err(|e| HarnessError::Numerical(e.to_string()))?;
            let poly = ControlPolytope::for_capacity(&a, &case.capacity(n), p.omega_max)?;
            emit(&polytope_table(&poly).to_csv(), None)
        }
        Command::Plan { config, mode } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            cfg.planner.mode = mode;
            cfg.validate()?;
            let plan = PlanningContext::new(&cfg)?.plan(mode)?;
            if !plan.feasible {
                eprintln!(
                    "warning: waypoint deviation {} exceeds tolerance {}",
                    fmt_num(plan.max_waypoint_deviation()),
                    fmt_num(cfg.mission.waypoint_tol)
                );
            }
            emit(&plan_table(&plan).to_csv(), cfg.output.plan.as_deref())
        }
        Command::RspPipeline { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            if cfg.planner.faults.is_empty() {
                return Err(HarnessError::Config("rsp-pipeline needs planner.faults".into()));
            }
            let ctx = PlanningContext::new(&cfg)?;
            let report = ctx.pipeline(&cfg.mission.grid())?;
            emit(&pipeline_table(&report).to_csv(), None)
        }
        Command::ReproduceTable { id } => emit(&reproduce_table(&id)?.to_csv(), None),
        Command::Metrics { log, mission } => {
            let cfg = ScenarioConfig::load(&mission)?;
            let text = std::fs::read_to_string(&log).map_err(|e| HarnessError::io(&log, e))?;
            let (flown, reference) = log_trajectories(&Table::from_csv(&text)?)?;
            let ctx = PlanningContext::new(&cfg)?;
            let rip = ctx.plan(Mode::Rip)?.trajectory();
            let csv = export_metrics(&flown, &ctx.mission, &reference, &rip);
            emit(&csv, cfg.output.metrics.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
