use clap::Parser;

use proxsgd_cli::app::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(&cli) {
        eprintln!("proxsgd: {e}");
        std::process::exit(e.exit_code());
    }
}
