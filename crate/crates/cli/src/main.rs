//! `invparab --config run.toml [--seed N] [--threads N] [--out DIR] [--strict-tolerances]`
//!
//! Exit status: 0 success, 1 I/O or configuration error, 2 validation or admissibility
//! failure, 3 tolerance failure (only with `--strict-tolerances`) or numerical breakdown.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::RunConfig;
use run::{Options, Status};

#[derive(Debug, Parser)]
#[command(name = "invparab", version, about = "Solver and duality experiments for the quarter-plane inverse parabolic problem")]
struct Cli {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 when a tolerance check fails.
    #[arg(long)]
    strict_tolerances: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
        #[cfg(not(feature = "parallel"))]
        let _ = n;
    }
    let cfg = match RunConfig::load(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let opts = Options {
        seed: cli.seed,
        out: cli.out,
        strict: cli.strict_tolerances,
    };
    let (summary, result) = run::run(&cfg, &opts);
    print!("{}", summary.render());
    if let Err(e) = result {
        eprintln!("error: {e}");
    }
    match summary.status() {
        Status::Ok => ExitCode::SUCCESS,
        status => ExitCode::from(status as u8),
    }
}
