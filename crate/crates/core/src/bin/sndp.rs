use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sndp::audit::OracleCheckConfig;
use sndp::io::{generate_instance, read_instance, run, Mode, RunConfig};
use sndp::rounding::{PinPolicy, ZetaPolicy};
use sndp::Error;

#[derive(Parser)]
#[command(name = "sndp", version, about = "Survivable network design by iterative rounding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an integral solution.
    Solve(SolveArgs),
    /// Solve only the LP relaxation and report primal and dual bounds.
    LpOnly(SolveArgs),
    /// Run the randomized invariant suite against the reference oracles.
    OracleCheck {
        #[arg(long, default_value_t = 7)]
        max_vertices: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random instance to stdout.
    Gen {
        #[arg(long)]
        vertices: usize,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, default_value_t = 2)]
        rmax: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Zeta {
    Uniform,
    Budgeted,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pins {
    All,
    Shortcut,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Verify every LP solution in exact rational arithmetic.
    #[arg(long)]
    rational: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Zeta::Uniform)]
    zeta: Zeta,
    #[arg(long, value_enum, default_value_t = Pins::All)]
    pins: Pins,
    /// Use this fixed per-LP accuracy instead of a policy.
    #[arg(long, conflicts_with = "zeta")]
    fixed_zeta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn solve_like(mode: Mode, args: &SolveArgs) -> Result<bool, Error> {
    let instance = read_instance(&args.instance)?;
    let mut config = RunConfig::new(mode, args.epsilon);
    config.rational = args.rational;
    config.jobs = args.jobs;
    config.seed = args.seed;
    config.zeta = match (args.fixed_zeta, args.zeta) {
        (Some(z), _) => ZetaPolicy::Fixed(z),
        (None, Zeta::Uniform) => ZetaPolicy::Uniform,
        (None, Zeta::Budgeted) => ZetaPolicy::Budgeted,
    };
    config.pinning = match args.pins {
        Pins::All => PinPolicy::All,
        Pins::Shortcut => PinPolicy::Shortcut,
    };
    let report = run(&config, Some(&instance))?;
    emit(&report.render(), args.out.as_ref())?;
    Ok(report.passed)
}

fn execute(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Solve(args) => solve_like(Mode::Solve, &args),
        Command::LpOnly(args) => solve_like(Mode::LpOnly, &args),
        Command::OracleCheck {
            max_vertices,
            trials,
            seed,
            epsilon,
            out,
        } => {
            let mut config = RunConfig::new(Mode::OracleCheck, epsilon);
            config.seed = seed;
            config.oracle = OracleCheckConfig {
                max_vertices,
                trials,
                epsilon,
            };
            let report = run(&config, None)?;
            emit(&report.render(), out.as_ref())?;
            Ok(report.passed)
        }
        Command::Gen {
            vertices,
            density,
            rmax,
            seed,
        } => {
            print!("{}", generate_instance(seed, vertices, density, rmax)?.to_json());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some properties failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
