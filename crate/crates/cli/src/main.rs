use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kinwave::collision::KernelConfig;
use kinwave::Error;
use kinwave_cli::commands::{self, CollisionOptions, WaveOptions};

/// Number of worker threads for the solver's rayon pool.
const THREADS_ENV: &str = "KINWAVE_THREADS";

#[derive(Parser)]
#[command(name = "kinwave", version, about = "Kinetic rarefaction-wave solver and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smoothed rarefaction profile and decay-rate table.
    Wave {
        /// Scenario file supplying end states and the sample mesh.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Wave strength `|(ρ₊−ρ₋, u₊−u₋, θ₊−θ₋)|` from the scenario's minus state.
        #[arg(long)]
        strength: Option<f64>,
        /// Comma-separated decay times (default: 25 geometric points in [10, 1e4]).
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        /// Comma-separated profile sample times.
        #[arg(long, value_delimiter = ',')]
        profile_times: Option<Vec<f64>>,
        /// Comma-separated exponents; `inf` selects the sup norm.
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<f64>>,
        /// Decay of the unit Burgers jump instead of the Euler wave.
        #[arg(long)]
        unit_jump: bool,
        #[arg(long, default_value = "wave_out")]
        out: PathBuf,
    },
    /// Burnett inner products and transport coefficients.
    Collision {
        #[arg(long, default_value_t = 12)]
        points: usize,
        #[arg(long, default_value_t = 6.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = std::f64::consts::PI / 64.0)]
        theta_min: f64,
        #[arg(long, default_value_t = 8)]
        n_theta: usize,
        #[arg(long, default_value_t = 8)]
        n_phi: usize,
        #[arg(long, default_value_t = 5e10)]
        budget: f64,
        /// Comma-separated background temperatures.
        #[arg(long, value_delimiter = ',', default_value = "1.5")]
        theta: Vec<f64>,
        #[arg(long, default_value = "collision_out")]
        out: PathBuf,
    },
    /// Manufactured-solution error table for the Poisson solver.
    FieldTest {
        #[arg(long, value_delimiter = ',', default_value = "32,64,128,256")]
        nx: Vec<usize>,
        #[arg(long, default_value = "field_out")]
        out: PathBuf,
    },
    /// Time-integrate a scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "run_out")]
        out: PathBuf,
    },
    /// Fitted-slope summary of every diagnostics CSV under a directory.
    Report { dir: PathBuf },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NumericalAbort { .. } => 3,
        Error::Config(_) | Error::Parse { .. } | Error::Input(_) | Error::Domain(_) | Error::Cost { .. } => 2,
        _ => 1,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn dispatch(command: Command) -> Result<Vec<String>, Error> {
    match command {
        Command::Wave {
            scenario,
            strength,
            times,
            profile_times,
            q,
            unit_jump,
            out,
        } => {
            let defaults = WaveOptions::default();
            commands::wave(&WaveOptions {
                scenario,
                strength,
                out,
                times: times.unwrap_or(defaults.times),
                profile_times: profile_times.unwrap_or(defaults.profile_times),
                qs: q.unwrap_or(defaults.qs),
                unit_jump,
            })
        }
        Command::Collision {
            points,
            half_width,
            gamma,
            s,
            theta_min,
            n_theta,
            n_phi,
            budget,
            theta,
            out,
        } => commands::collision(&CollisionOptions {
            out,
            points,
            half_width,
            kernel: KernelConfig {
                gamma,
                s,
                theta_min,
                n_theta,
                n_phi,
                budget,
            },
            thetas: theta,
        }),
        Command::FieldTest { nx, out } => commands::field_test(&out, &nx),
        Command::Run { scenario, out } => {
            let outcome = commands::run(&scenario, &out)?;
            let m = &outcome.manifest;
            Ok(vec![
                format!("{} steps, scenario hash {}", m.steps, m.scenario_hash),
                format!(
                    "fitted slopes: conv_metric {}, Ek {}",
                    m.conv_metric_slope.map_or("n/a".into(), |s| format!("{s:+.4}")),
                    m.ek_slope.map_or("n/a".into(), |s| format!("{s:+.4}"))
                ),
            ])
        }
        Command::Report { dir } => Ok(commands::report(&dir)?
            .into_iter()
            .map(|l| {
                format!(
                    "{}: conv_metric slope {:+.4}, Ek slope {:+.4}, final conv_metric {:.4e}",
                    l.dir.display(),
                    l.conv_metric_slope,
                    l.ek_slope,
                    l.final_conv_metric
                )
            })
            .collect()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| dispatch(cli.command)) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("kinwave: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
