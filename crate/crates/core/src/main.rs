use clap::Parser;
use panolux::cli::{configure_threads, exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| run(&cli, &mut std::io::stdout().lock()));
    if let Err(err) = result {
        eprintln!("panolux: {err}");
        std::process::exit(exit_code(&err));
    }
}
