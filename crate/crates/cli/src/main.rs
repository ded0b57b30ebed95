//! `fracflow` command-line driver.
//!
//! Exit codes: 0 success, 1 i/o or other failure, 2 invalid configuration,
//! 3 solver or set-point failure, 4 a check (trend or bound) failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracflow::config::{example, parse_config, Command};
use fracflow::pipeline::execute;
use fracflow::Error;

#[derive(Parser)]
#[command(name = "fracflow", version, about = "Pseudo-steady-state flow in fractured reservoirs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pressure field and drawdown for a fixed production rate.
    Solve(RunArgs),
    /// Production rate that reaches a target drawdown.
    Inverse(RunArgs),
    /// Capacity table over fracture lengths and beta values.
    Sweep(RunArgs),
    /// Compare full and reduced fracture problems on a slab.
    Validate(RunArgs),
    /// Print an example configuration.
    Example {
        #[arg(value_enum)]
        command: Which,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and validation; 0 uses all cores.
    #[arg(short, long, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Solve,
    Inverse,
    Sweep,
    Validate,
}

impl From<Which> for Command {
    fn from(w: Which) -> Command {
        match w {
            Which::Solve => Command::Solve,
            Which::Inverse => Command::Inverse,
            Which::Sweep => Command::Sweep,
            Which::Validate => Command::Validate,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Geometry(_) | Error::Precondition(_) => 2,
        Error::Solver { .. } | Error::Control { .. } | Error::Assembly(_) => 3,
        Error::Io { .. } => 1,
    }
}

fn run(command: Command, args: RunArgs) -> Result<bool, Error> {
    let mut spec = parse_config(&args.config)?;
    if spec.command != command {
        return Err(Error::Config(format!(
            "{} is a {} config, not {}",
            args.config.display(),
            format!("{:?}", spec.command).to_lowercase(),
            format!("{command:?}").to_lowercase()
        )));
    }
    let out = args
        .out
        .or_else(|| spec.output_dir.take().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let outcome = execute(&spec, args.threads)?;
    outcome.write_to(&out)?;
    println!("{}", outcome.summary);
    for a in &outcome.artifacts {
        println!("wrote {}", out.join(&a.name).display());
    }
    Ok(!outcome.check_failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Inverse(a) => (Command::Inverse, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::Example { command } => {
            println!("{}", example(command.into()).to_json());
            return ExitCode::SUCCESS;
        }
    };
    match run(command, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
