use std::io::Write;

use clap::Parser;
use orbita_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let out = execute(&cli);
    print!("{}", out.stdout);
    std::io::stdout().flush().ok();
    eprint!("{}", out.stderr);
    std::process::exit(out.code);
}
