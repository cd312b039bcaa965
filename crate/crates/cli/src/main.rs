//! `pnls`: profiles, spectra, slopes, verdicts and evolutions of NLS
//! standing waves with point interactions.
//!
//! Exit status: 0 on success, 2 for invalid input (including parameters
//! outside an existence window), 3 for numerical failures.

mod commands;
mod config;
mod output;
mod sweep;

use clap::{Parser, Subcommand};
use config::{Command, Invalid, Params};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pnls", version, about = "Standing waves of NLS with δ and δ′ point interactions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a profile (CSV: edge, x, value, dvalue).
    Profile(Params),
    /// Negative-eigenvalue count, kernel and lowest eigenvalues of L1 or L2.
    Spectrum(Params),
    /// ‖Φ‖² and its ω-derivative at a point or on a grid; `--find-omega-star`.
    Slope(Params),
    /// Orbital-stability verdict.
    Classify(Params),
    /// Evolve a perturbed standing wave and trace its orbital distance.
    Evolve(Params),
    /// Verdicts on an (ω, p) grid; resumable when writing to a file.
    Sweep(Params),
    /// Re-run the command recorded in `--config`.
    Run(Params),
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let (params, cmd) = match cli.cmd {
        Cmd::Profile(p) => (p, Some(Command::Profile)),
        Cmd::Spectrum(p) => (p, Some(Command::Spectrum)),
        Cmd::Slope(p) => (p, Some(Command::Slope)),
        Cmd::Classify(p) => (p, Some(Command::Classify)),
        Cmd::Evolve(p) => (p, Some(Command::Evolve)),
        Cmd::Sweep(p) => (p, Some(Command::Sweep)),
        Cmd::Run(p) => {
            if p.config.is_none() {
                return Err(config::invalid("run needs --config"));
            }
            (p, None)
        }
    };
    let cfg = params.resolve(cmd)?;
    match cfg.command {
        Command::Profile => commands::profile(&cfg),
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Slope => commands::slope(&cfg),
        Command::Classify => commands::classify(&cfg),
        Command::Evolve => commands::evolve(&cfg),
        Command::Sweep => sweep::sweep(&cfg, params.jobs),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Invalid>() {
            return 2;
        }
        if let Some(pe) = cause.downcast_ref::<pnls::Error>() {
            return if pe.is_validation() { 2 } else { 3 };
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
