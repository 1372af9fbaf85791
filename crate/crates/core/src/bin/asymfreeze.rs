use clap::Parser;

use asymfreeze::cli::{self, Cli};

fn main() {
    std::process::exit(cli::main_with(Cli::parse()));
}
