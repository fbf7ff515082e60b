use clap::Parser;
use twostep_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("twostep: {e}");
        std::process::exit(e.exit_code());
    }
}
