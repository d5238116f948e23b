//! `ped`: screening, analytics and reward serving over EMB1 embeddings.

mod convert;
mod correlate;
mod error;
mod files;
mod genstats;
mod reward;
mod scaffold;
mod screen;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ped", version, about = "Pretrained embedding distance screening and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enrichment-factor report per target and method.
    Screen(screen::Args),
    /// Pearson matrix and binned statistics over candidate rows.
    Correlate(correlate::Args),
    /// Serve reverse-sigmoid rewards over stdin/stdout.
    Reward(reward::Args),
    /// Scaffold diversity, compliance and balanced sampling for generated sets.
    Genstats(genstats::Args),
    /// Append a scaffold_key column to an (id, smiles) TSV.
    Scaffold(scaffold::Args),
    /// Convert comma-separated floats to EMB1.
    Convert(convert::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Screen(a) => screen::run(a),
        Command::Correlate(a) => correlate::run(a),
        Command::Reward(a) => reward::run(a),
        Command::Genstats(a) => genstats::run(a),
        Command::Scaffold(a) => scaffold::run(a),
        Command::Convert(a) => convert::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}
