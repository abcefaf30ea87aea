use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybrid_dynamics::cli::{self, describe, load_config, Mode, EXIT_FAILURE};

#[derive(Parser)]
#[command(name = "hybrid-sim", version, about = "Quantum-classical hybrid dynamics on a phase-space grid")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured scenario and write its artifacts.
    Simulate { config: PathBuf },
    /// Print the resolved configuration, stability margins and cost estimates.
    Describe { config: PathBuf },
    /// Run the width-refinement study over the configured sigma list.
    Study { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match cli::thread_override() {
        Some(Ok(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::error!("{e}");
                return ExitCode::from(EXIT_FAILURE as u8);
            }
        }
        Some(Err(msg)) => {
            log::error!("{msg}");
            return ExitCode::from(EXIT_FAILURE as u8);
        }
        None => {}
    }
    let (path, study) = match &args.command {
        Command::Simulate { config } => (config, false),
        Command::Describe { config } => (config, false),
        Command::Study { config } => (config, true),
    };
    let mut cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(EXIT_FAILURE as u8);
        }
    };
    if study {
        cfg.mode = Mode::Study;
    }
    if let Command::Describe { .. } = args.command {
        print!("{}", describe(&cfg));
        return ExitCode::SUCCESS;
    }
    match cli::run(&cfg) {
        Ok(out) => {
            for f in &out.files {
                log::info!("wrote {}", f.display());
            }
            if let Some(t) = out.violation.as_ref().and_then(|r| r.onset_time) {
                log::info!("positivity violation at t = {t}");
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(EXIT_FAILURE as u8)
        }
    }
}
