use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nodal_lab::{emit_plots, requested_threads, run_experiment, write_results, ExperimentConfig, LabError};

#[derive(Parser)]
#[command(name = "lab", version, about = "Run nodal-core experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its results directory.
    Run {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG plots from a results directory.
    Plot { dir: PathBuf },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = requested_threads() {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, LabError> {
    match command {
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!("{}: valid {} config", config.display(), cfg.experiment);
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
            let run = run_experiment(&cfg)?;
            write_results(&run, &dir)?;
            for c in &run.record.checks {
                let rel = match c.relation {
                    nodal_lab::output::Relation::AtMost => "<=",
                    nodal_lab::output::Relation::AtLeast => ">=",
                };
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                println!("{verdict} {}: {:.6e} {rel} {:.6e}", c.name, c.value, c.limit);
            }
            println!(
                "{} {} cells, {:.2}s -> {}",
                cfg.experiment,
                run.record.cells.len(),
                run.wall_time_seconds,
                dir.display()
            );
            Ok(if run.record.pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAIL) })
        }
        Command::Plot { dir } => {
            for path in emit_plots(&dir)? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
