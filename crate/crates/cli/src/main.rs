use clap::Parser;

use tsme_cli::error::CliError;
use tsme_cli::{configure_threads, run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = configure_threads().and_then(|()| run(&cli, &mut std::io::stdout().lock()));
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(CliError::exit_code(&e));
    }
}
