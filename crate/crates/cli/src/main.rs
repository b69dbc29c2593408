use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dagger_cli::commands::{Registry, RunOptions};
use dagger_cli::report::Format;
use dagger_cli::{batch_exit_code, run_source};

/// Overconvergent de Rham computations driven by job files.
#[derive(Parser, Debug)]
#[command(name = "dagger", version, after_help = commands_help())]
struct Cli {
    /// Job file with one or more `job <name> { … }` blocks.
    #[arg(long)]
    job: PathBuf,
    /// Seed for randomly generated inputs (overrides `seed` in the job).
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated degree windows, e.g. `16,20,24`.
    #[arg(long, value_delimiter = ',')]
    truncation_sweep: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Print nothing; only the exit status and report files.
    #[arg(long)]
    quiet: bool,
}

fn commands_help() -> String {
    let mut s = String::from("Commands:\n");
    for (name, summary) in Registry::builtin().summaries() {
        s.push_str(&format!("  {name:<12} {summary}\n"));
    }
    s.push_str("\nExit status: 0 pass, 1 check failed, 2 input error, 3 not stabilized.");
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let src = match std::fs::read_to_string(&cli.job) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("dagger: cannot read {}: {e}", cli.job.display());
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions { seed: cli.seed, sweep: cli.truncation_sweep };
    match run_source(&src, &opts, cli.format) {
        Ok(reports) => {
            if !cli.quiet {
                for (_, text) in &reports {
                    print!("{text}");
                }
            }
            let rs: Vec<_> = reports.into_iter().map(|(r, _)| r).collect();
            ExitCode::from(batch_exit_code(&rs) as u8)
        }
        Err(e) => {
            eprintln!("dagger: {}: {e}", cli.job.display());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
