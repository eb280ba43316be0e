//! `pin-forge`: build, check and describe PIN multimodal datasets.

mod cmd;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::config::FileConfig;
use crate::error::{CliError, Exit};

#[derive(Debug, Parser)]
#[command(name = "pin-forge", version, about = "Build, check and describe PIN multimodal datasets")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Configuration file [default: ./pin.toml when present]
    #[arg(long, global = true, env = "PIN_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel stages [default: logical CPU count]
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Do all the work but write nothing to the filesystem
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Print a machine-readable run summary as JSON on stdout
    #[arg(long, global = true)]
    pub json: bool,
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a dataset against the schema and report violations by code
    Validate(cmd::validate::ValidateArgs),
    /// Compute quality signals for every entry
    Signals(cmd::signals::SignalsArgs),
    /// Split entries into page entries
    Paginate(cmd::paginate::PaginateArgs),
    /// Convert source documents into entries
    Convert(cmd::convert::ConvertArgs),
    /// Render missing overall images through an external command
    Render(cmd::render::RenderArgs),
    /// Aggregate subset statistics
    Stats(cmd::stats::StatsArgs),
    /// Split a dataset into parts with a manifest
    Partition(cmd::partition::PartitionArgs),
    /// Serialize paged documents with boundary tokens
    Assemble(cmd::assemble::AssembleArgs),
    #[command(hide = true)]
    MockRender(cmd::mock_render::MockRenderArgs),
}

/// Shared state every command runs with.
pub struct Ctx {
    pub global: Global,
    pub config: FileConfig,
}

impl Ctx {
    pub fn jobs(&self) -> usize {
        self.config.jobs(self.global.jobs.map(|j| j as usize))
    }
}

/// What a command reports: a JSON summary for `--json` and a human line.
pub struct Outcome {
    pub summary: Value,
    pub human: String,
    pub exit: Exit,
}

impl Outcome {
    pub fn ok(summary: Value, human: impl Into<String>) -> Self {
        Self { summary, human: human.into(), exit: Exit::Ok }
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    if let Command::MockRender(args) = &cli.command {
        return cmd::mock_render::run(args);
    }
    let config = FileConfig::load(cli.global.config.as_deref())?;
    let ctx = Ctx { global: cli.global, config };
    match cli.command {
        Command::Validate(a) => cmd::validate::run(&ctx, a),
        Command::Signals(a) => cmd::signals::run(&ctx, a),
        Command::Paginate(a) => cmd::paginate::run(&ctx, a),
        Command::Convert(a) => cmd::convert::run(&ctx, a),
        Command::Render(a) => cmd::render::run(&ctx, a),
        Command::Stats(a) => cmd::stats::run(&ctx, a),
        Command::Partition(a) => cmd::partition::run(&ctx, a),
        Command::Assemble(a) => cmd::assemble::run(&ctx, a),
        Command::MockRender(_) => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Usage as u8 } else { Exit::Ok as u8 });
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    let json = cli.global.json;
    match run(cli) {
        Ok(outcome) => {
            if json {
                println!("{}", outcome.summary);
            } else if !outcome.human.is_empty() {
                eprintln!("{}", outcome.human);
            }
            ExitCode::from(outcome.exit as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if json {
                println!("{}", serde_json::json!({ "ok": false, "exit_code": e.exit as u8, "error": e.message }));
            }
            ExitCode::from(e.exit as u8)
        }
    }
}
