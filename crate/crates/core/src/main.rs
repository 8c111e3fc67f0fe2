use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use m2m_channel::scenario::{self, emit_plot, import_surface, load_config, threads_from_env, RunReport};
use m2m_channel::Error;

/// Delay-Doppler statistics of mobile-to-mobile scatter channels.
///
/// Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure.
/// Environment: M2M_CHANNEL_OUTPUT_DIR overrides the output directory,
/// M2M_CHANNEL_THREADS sets the worker thread count.
#[derive(Parser)]
#[command(name = "m2m-channel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every product requested by a config file.
    Run { config: PathBuf },
    /// Check a config file without evaluating anything.
    Validate { config: PathBuf },
    /// Run only the Monte-Carlo and synthetic-channel checks.
    Oracle { config: PathBuf },
    /// Render a surface file (CSV or JSON) as SVG.
    Plot { surface: PathBuf, out: PathBuf },
}

fn code_for(e: &Error) -> ExitCode {
    if e.is_config() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn report(r: RunReport) -> ExitCode {
    for f in &r.summary.failures {
        let at = f.snapshot.map(|k| format!("snapshot {k}, ")).unwrap_or_default();
        eprintln!("failed: {at}{}: {}", f.product, f.error);
    }
    println!("summary written to {}", r.summary_path.display());
    if r.succeeded() {
        ExitCode::SUCCESS
    } else if r.numerical_failure() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match threads_from_env() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Run { config } => load_config(&config).and_then(|c| scenario::run(&c)).map(report),
        Command::Oracle { config } => load_config(&config).and_then(|c| scenario::run_oracle(&c)).map(report),
        Command::Validate { config } => load_config(&config).map(|c| {
            println!("{}: {} snapshot(s), products: {}", c.name, c.snapshots.len(), c.products.iter().map(|p| p.name()).collect::<Vec<_>>().join(", "));
            ExitCode::SUCCESS
        }),
        Command::Plot { surface, out } => import_surface(&surface).and_then(|s| emit_plot(&s, &out)).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        code_for(&e)
    })
}
