use clap::Parser;

use besselstop_cli::config::RunConfig;
use besselstop_cli::THREADS_ENV;

fn main() {
    let cfg = RunConfig::parse();
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: {THREADS_ENV} ignored: {e}");
        }
    }
    std::process::exit(besselstop_cli::run(&cfg));
}
