use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use reachunder_cli::{execute, thread_cap, Cli, RunConfig, THREADS_ENV};

fn run() -> Result<bool> {
    let cli = Cli::parse();
    if let Some(n) = thread_cap(std::env::var(THREADS_ENV).ok().as_deref())? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let outcome = execute(&RunConfig::from(cli))?;
    println!("{}", outcome.summary);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(outcome.success)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
