use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use beamdelay_cli::config::{Actuation, Overrides};
use beamdelay_cli::{commands, exit, load, CliError};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "beamdelay", version, about = "Boundary feedback design and simulation for a delayed damped beam")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Built-in scenario: paper-sec6, paper-sec6-openloop, paper-sec6-closedloop.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,

    /// Time step of the simulation.
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Number of simulated mode pairs.
    #[arg(long, global = true)]
    modes: Option<usize>,

    #[arg(long, global = true, value_enum)]
    actuation: Option<ActuationArg>,

    /// Simulate without feedback.
    #[arg(long, global = true)]
    open_loop: bool,

    /// Grid resolution of the delay certification.
    #[arg(long, global = true)]
    resolution: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, normalizations and Riesz constants.
    Spectrum,
    /// Pole placement and delay certification.
    Synthesize,
    /// Integrate the modal delay system and write CSV output.
    Simulate,
}

#[derive(Clone, Copy, ValueEnum)]
enum ActuationArg {
    Left,
    Right,
    Both,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        out: cli.out,
        dt: cli.dt,
        modes: cli.modes,
        actuation: cli.actuation.map(|a| match a {
            ActuationArg::Left => Actuation::Left,
            ActuationArg::Right => Actuation::Right,
            ActuationArg::Both => Actuation::Both,
        }),
        open_loop: cli.open_loop,
        resolution: cli.resolution,
    };
    let scenario = load(cli.config.as_deref(), cli.preset.as_deref(), &overrides)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Spectrum => commands::spectrum(&scenario, &mut out),
        Command::Synthesize => commands::synthesize(&scenario, &mut out),
        Command::Simulate => commands::run_simulation(&scenario, &mut out),
    }?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
