//! Command-line driver: sample-file I/O, simulation, clustering, BIC
//! selection of `K`, replication grids and band plots.

pub mod args;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod sample_file;

pub use args::{Cli, Command};
pub use error::{CliError, Result};

/// Runs one command, on a pool of `cli.threads` workers when non-zero.
pub fn run(cli: &Cli) -> Result<()> {
    let dispatch = || match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::SelectK(a) => commands::select_k_cmd(a),
        Command::Replicate(a) => commands::replicate(a),
        Command::Summarize(a) => commands::summarize(a),
        Command::Import(a) => commands::import(a),
    };
    if cli.threads == 0 {
        return dispatch();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(dispatch)
}
