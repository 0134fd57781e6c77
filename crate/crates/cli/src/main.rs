use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use perimeter_core::config::RunConfig;
use perimeter_core::harness::{
    calibrate_demand, read_nfd, run_scenario, sweep_seeds, write_nfd, write_run_outputs,
    write_setpoint, write_table, ControllerSpec,
};
use perimeter_core::sensing::extract_set_point;
use perimeter_core::Error;

#[derive(Parser)]
#[command(
    name = "perimeter",
    version,
    about = "Perimeter gating experiments on a grid network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (TOML). Built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate and print the resolved configuration without running.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its CSV and summary files.
    Run(Common),
    /// Extract the set point from an uncontrolled run or an existing scatter.
    Setpoint {
        #[command(flatten)]
        common: Common,
        /// Use this `nfd.csv` instead of running the uncontrolled scenario.
        #[arg(long)]
        nfd: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        bin_width_veh_per_km: f64,
    },
    /// Run the configured parameter sweep and write `table.csv`.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated seed list; rows are pooled over it.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Search the demand peak until the uncontrolled peak density falls in
    /// the configured band.
    CalibrateDemand(Common),
    /// Print the default configuration.
    DefaultConfig,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn config(e: Error) -> Self {
        Failure::Config(one_line(&e.to_string()))
    }

    fn runtime(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidParameter { .. }
            | Error::InvalidRegion(_)
            | Error::EmptyRegion => Failure::config(e),
            other => Failure::Runtime(one_line(&other.to_string())),
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn load(c: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p).map_err(Failure::config)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate().map_err(Failure::config)?;
    Ok(cfg)
}

fn print_resolved(cfg: &RunConfig) -> Result<(), Failure> {
    let text = cfg.to_toml().map_err(Failure::config)?;
    print!("{text}");
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Runtime(one_line(&format!("{}: {e}", path.display())));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::DefaultConfig => print_resolved(&RunConfig::default()),
        Command::Run(c) => {
            let cfg = load(&c)?;
            if c.dry_run {
                return print_resolved(&cfg);
            }
            let (net, region) = cfg.network().map_err(Failure::config)?;
            let spec = cfg.scenario_spec().map_err(Failure::config)?;
            let r = run_scenario(&net, &region, &spec).map_err(Failure::runtime)?;
            write_run_outputs(&cfg.out_dir, &r).map_err(Failure::runtime)?;
            let m = r.metrics;
            println!(
                "{}: {} vehicles, travel time {:.1} s, delay {:.1} s, speed {:.2} km/h, peak density {:.1} veh/km -> {}",
                r.meta.label,
                m.vehicles,
                m.mean_travel_time_s,
                m.mean_delay_s,
                m.mean_speed_kmh,
                r.peak_density(),
                cfg.out_dir.display()
            );
            if r.conservation_violations > 0 {
                return Err(Failure::Runtime(format!(
                    "{} conservation violations",
                    r.conservation_violations
                )));
            }
            Ok(())
        }
        Command::Setpoint {
            common,
            nfd,
            bin_width_veh_per_km,
        } => {
            let cfg = load(&common)?;
            if common.dry_run {
                return print_resolved(&cfg);
            }
            let scatter = match nfd {
                Some(p) => read_nfd(&p).map_err(Failure::config)?,
                None => {
                    let (net, region) = cfg.network().map_err(Failure::config)?;
                    let mut spec = cfg.scenario_spec().map_err(Failure::config)?;
                    spec.controller = ControllerSpec::None;
                    let r = run_scenario(&net, &region, &spec).map_err(Failure::runtime)?;
                    let s = r.nfd();
                    write_nfd(&cfg.out_dir.join("nfd.csv"), &s).map_err(Failure::runtime)?;
                    s
                }
            };
            let sp = extract_set_point(&scatter, bin_width_veh_per_km).map_err(Failure::runtime)?;
            write_setpoint(&cfg.out_dir.join("setpoint.toml"), &sp).map_err(Failure::runtime)?;
            println!(
                "set point {:.2} veh/km, max flow {:.1} veh/h{}",
                sp.kbar_veh_per_km,
                sp.q_max_veh_per_h,
                sp.warning
                    .map(|w| format!(" (warning: {w:?})"))
                    .unwrap_or_default()
            );
            Ok(())
        }
        Command::Sweep { common, seeds } => {
            let cfg = load(&common)?;
            if common.dry_run {
                return print_resolved(&cfg);
            }
            let (net, region) = cfg.network().map_err(Failure::config)?;
            let spec = cfg.scenario_spec().map_err(Failure::config)?;
            let seeds = if seeds.is_empty() {
                cfg.seeds.clone()
            } else {
                seeds
            };
            let table = sweep_seeds(&net, &region, &spec, &cfg.sweep.points(), &seeds)
                .map_err(Failure::runtime)?;
            let path = cfg.out_dir.join("table.csv");
            write_table(&path, &table).map_err(Failure::runtime)?;
            println!("baseline delay {:.1} s", table.baseline.mean_delay_s);
            for row in &table.rows {
                println!(
                    "{:<12} delay {:>7.2} %  speed {:>7.2} %",
                    row.label,
                    row.change.delay_pct.unwrap_or(f64::NAN),
                    row.change.speed_pct.unwrap_or(f64::NAN)
                );
            }
            println!("-> {}", path.display());
            if table.conservation_violations > 0 {
                return Err(Failure::Runtime(format!(
                    "{} conservation violations",
                    table.conservation_violations
                )));
            }
            Ok(())
        }
        Command::CalibrateDemand(c) => {
            let cfg = load(&c)?;
            if c.dry_run {
                return print_resolved(&cfg);
            }
            let (net, region) = cfg.network().map_err(Failure::config)?;
            let spec = cfg.scenario_spec().map_err(Failure::config)?;
            let out = calibrate_demand(&net, &region, &spec, &cfg.calibration)
                .map_err(Failure::runtime)?;
            let text =
                toml::to_string(&out).map_err(|e| Failure::Runtime(one_line(&e.to_string())))?;
            write_text(&cfg.out_dir.join("calibration.toml"), &text)?;
            println!(
                "peak {:.4} veh/h per pair -> uncontrolled peak density {:.2} veh/km ({:.2} x set point), {} iterations{}",
                out.peak_veh_h,
                out.peak_density_veh_km,
                out.peak_density_veh_km / out.kbar_veh_per_km,
                out.iterations,
                if out.within_band { "" } else { ", band not reached" }
            );
            if out.within_band {
                Ok(())
            } else {
                Err(Failure::Runtime(
                    "calibration did not reach the target band".into(),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
