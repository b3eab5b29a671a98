use std::process::ExitCode;

use clap::Parser;
use fdprune::cli::{cmd_project, cmd_prune, cmd_score, cmd_stats, Cli, Command, RunConfig};
use fdprune::error::{Stage, StageContext};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let result = match &cli.command {
        Command::Stats(args) => cmd_stats(&args.scores).stage(Stage::Stats).map(|s| {
            print!("{s}");
            0
        }),
        Command::Score(args) | Command::Prune(args) | Command::Project(args) => {
            RunConfig::from_args(args)
                .stage(Stage::Config)
                .and_then(|cfg| {
                    let outcome = match &cli.command {
                        Command::Score(_) => cmd_score(&cfg),
                        Command::Prune(_) => cmd_prune(&cfg),
                        _ => cmd_project(&cfg),
                    }?;
                    for path in &outcome.written {
                        log::info!("wrote {}", path.display());
                    }
                    Ok(outcome.exit_code())
                })
        }
    };

    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
