mod args;
mod commands;
mod error;
mod load;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn dispatch(cli: &Cli) -> error::Result<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Index(a) => commands::index(a, seed),
        Command::Run(a) => commands::run(a, seed),
        Command::Chat(a) => commands::chat(a, seed),
        Command::EvalRetrieval(a) => commands::eval_retrieval(a, seed),
        Command::EvalCritic(a) => commands::eval_critic(a, seed),
        Command::Datagen(a) => commands::datagen(a, seed),
        Command::Serve(a) => commands::serve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return CliError::usage(first).report();
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
