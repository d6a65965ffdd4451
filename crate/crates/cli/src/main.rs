mod config;
mod error;
mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "rcm", version, about = "Random connection model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output root; the run goes to a sub-directory named by the config hash.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Turn a run directory's reports into long-format plotting CSVs.
    PlotData {
        #[arg(long)]
        run: PathBuf,
        /// Destination directory (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Validation("--threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            threads,
            out,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let validated = cfg.validate()?;
            set_threads(threads)?;
            let root = run::output_root(out.as_deref(), &validated.config);
            let dir = run::execute(&validated, &root)?;
            println!("{}", dir.display());
        }
        Command::PlotData { run, out } => {
            let out = out.unwrap_or_else(|| run.clone());
            for f in plot::emit_plot_data(&run, &out)? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rcm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
