use clap::Parser;
use lrlattice::{configure_threads, main_with, Cli, EXIT_ERROR};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        std::process::exit(EXIT_ERROR);
    }
    std::process::exit(main_with(cli));
}
