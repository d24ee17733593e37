use std::process::ExitCode;

use clap::Parser;
use jbf_cli::{Cli, EXIT_FATAL};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(EXIT_FATAL) } else { ExitCode::SUCCESS };
        }
    };
    jbf_cli::run(cli)
}
