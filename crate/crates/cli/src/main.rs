use clap::Parser;
use elastic_kmeans_cli::{run, Cli};

/// Usage errors share the configuration exit status.
const USAGE_EXIT: i32 = 4;

fn main() {
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
        e.print().expect("write usage");
        std::process::exit(code);
    });
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
