mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, Format};

#[derive(Parser)]
#[command(name = "harmonium", version, about = "Natural occupation numbers and pinning analysis for N-Harmonium")]
struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file (default: output.path from the config, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Recorded in the output header; all commands are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Natural occupation numbers of the configured ground state.
    Nons(Common),
    /// Truncate, evaluate the constraint catalog and report D_min, Q and ε.
    Pinning(Common),
    /// Pinning pipeline over a κ × χ (× b) grid, one CSV row per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Keep complete χ lines already in the output file and compute the rest.
        #[arg(long)]
        resume: bool,
    },
    /// Inspect constraint catalogs.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// Check catalog files: Slater vertices and random pure states.
    Validate {
        paths: Vec<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Available settings with constraint counts and sources.
    List,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<harmonium::Error>() {
            return if e.is_numerical() { 3 } else { 2 };
        }
        if cause.is::<commands::NumericalFailure>() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Nons(c) => commands::nons(&c.config, c.out, c.format, c.seed),
        Command::Pinning(c) => commands::pinning(&c.config, c.out, c.format, c.seed),
        Command::Sweep { common: c, resume } => commands::sweep(&c.config, c.out, c.format, c.seed, resume),
        Command::Catalog { action } => match action {
            CatalogAction::Validate {
                paths,
                samples,
                seed,
                tolerance,
            } => commands::catalog_validate(&paths, samples, seed, tolerance),
            CatalogAction::List => commands::catalog_list(),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
