//! `affectbench` command-line driver.

mod args;
mod commands;
mod output;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] affectbench::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(affectbench::Error::Parameter(_)) => 2,
            CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests print and succeed; everything else is a usage error
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: could not size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(&cli, a),
        Command::Ingest(a) => commands::ingest(&cli, a),
        Command::SelectStimuli(a) => commands::select_stimuli(&cli, a),
        Command::ExtractFeatures(a) => commands::extract_features(&cli, a),
        Command::Label(a) => commands::label(&cli, a),
        Command::TrainEval(a) => commands::train_eval(&cli, a),
        Command::ChannelStudy(a) => commands::study(&cli, a, commands::StudyKind::Channel),
        Command::BandStudy(a) => commands::study(&cli, a, commands::StudyKind::Band),
        Command::Stats(a) => commands::stats(&cli, a),
        Command::Report(a) => report::run(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
