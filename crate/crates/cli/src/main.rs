//! Batch front-end: synthesize far-field data, run enclosure
//! reconstructions, and emit traces, hulls and plot files.
//!
//! Exit codes: 0 ok, 2 input error, 3 numerical failure, 4 selftest failure.
//! Thread count follows RAYON_NUM_THREADS. With a fixed seed, identical
//! configurations produce byte-identical result files.

mod commands;
mod output;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "enclosure",
    version,
    about = "Convex-hull reconstruction of sound-hard scatterers from fixed-frequency far-field data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward scattering problem and write a far-field dataset.
    Forward(commands::ForwardArgs),
    /// Reconstruct the convex hull from full-aperture dataset(s).
    Enclose(commands::EncloseArgs),
    /// Limited-aperture support estimation via the Morozov-regularized density.
    Aperture(commands::ApertureArgs),
    /// Run the built-in identity suites and print a measured-vs-bound table.
    Selftest(commands::SelftestArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Forward(args) => commands::run_forward(args),
        Command::Enclose(args) => commands::run_enclose(args),
        Command::Aperture(args) => commands::run_aperture(args),
        Command::Selftest(args) => commands::run_selftest(args),
    };
    match outcome {
        Ok(()) => {}
        Err(err) => {
            let (code, kind) = match &err {
                enclosure_core::Error::InvalidInput(_) | enclosure_core::Error::Parse { .. } => {
                    (2, "input")
                }
                enclosure_core::Error::InfeasibleHull { .. } => (3, "infeasible"),
                enclosure_core::Error::Resonance { .. } => (3, "resonance"),
                enclosure_core::Error::Numerical(_) => (3, "numerical"),
                enclosure_core::Error::Io(_) => (2, "io"),
            };
            let payload = serde_json::json!({
                "error": { "kind": kind, "message": err.to_string() }
            });
            eprintln!("{payload}");
            std::process::exit(code);
        }
    }
}
