mod args;
mod commands;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};

/// Runtime or data failure.
const EXIT_RUNTIME: u8 = 1;
/// Bad flags, bad config values.
const EXIT_USAGE: u8 = 2;

/// Help and version go to stdout with status 0; usage errors also show the
/// usage line and exit with status 2.
fn clap_exit(e: clap::Error) -> ExitCode {
    let _ = e.print();
    if !e.use_stderr() {
        return ExitCode::SUCCESS;
    }
    if !e.to_string().contains("Usage:") {
        eprintln!("\n{}", Cli::command().render_usage());
    }
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => return clap_exit(e),
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => return clap_exit(e),
    };
    let sub = matches.subcommand().map(|(_, m)| m).expect("a subcommand is required");

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }

    let result = match &cli.command {
        Command::Prepare(a) => commands::prepare(a),
        Command::Fit(a) => commands::fit(a, sub),
        Command::Eval(a) => commands::eval(a),
        Command::Ablate(a) => commands::ablate(a, sub),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e
                .downcast_ref::<rihop_core::Error>()
                .is_some_and(|e| matches!(e, rihop_core::Error::Config(_)));
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_RUNTIME })
        }
    }
}
