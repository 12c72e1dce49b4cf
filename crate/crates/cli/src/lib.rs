//! The `kgxk` command-line tool.

pub mod config;

mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::ScheduleKind;
use kgxk_core::Error;

pub use manifest::Manifest;

pub const VERSION: &str = env!("KGXK_VERSION");

#[derive(Debug, Parser)]
#[command(name = "kgxk", version = VERSION, about = "Robust subgraph explanations for knowledge graph completion")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output root; falls back to the config, then `KGXK_OUT`, then `runs`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output subdirectory; defaults to `<subcommand>-seed<seed>`.
    #[arg(long, global = true)]
    pub run_id: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub budgets: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitArg {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Raw,
    ParamMask,
    InstanceMask,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset, or generate a synthetic one with `--synthetic`.
    Prepare {
        #[arg(long)]
        synthetic: bool,
    },
    /// Train the link-prediction backbone on the full training graph.
    TrainBackbone,
    /// Train a robust evaluator on randomly perturbed views.
    TrainEvaluator {
        #[arg(long, value_enum)]
        schedule: Option<ScheduleKind>,
    },
    /// Train the mask network against a frozen evaluator.
    TrainExplainer {
        #[arg(long)]
        evaluator: Option<PathBuf>,
        /// Drop the PageRank term (plain parameterized masks).
        #[arg(long)]
        no_ppr: bool,
    },
    /// Extract budgeted explanation subgraphs.
    Explain {
        #[arg(long)]
        explainer: Option<PathBuf>,
        #[arg(long)]
        evaluator: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "raw")]
        method: Method,
        /// `head,relation` or `head,relation,tail`.
        #[arg(long, conflicts_with = "split")]
        query: Option<String>,
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Filtered ranking metrics of a model, optionally on explanation subgraphs.
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long)]
        explanations: Option<PathBuf>,
    },
    /// MRR under uniform random edge removal.
    SweepDrop {
        /// `name=checkpoint`, repeatable.
        #[arg(long = "model")]
        models: Vec<String>,
    },
    /// MRR on ego networks of growing radius around the query head.
    SweepEgo {
        #[arg(long = "model")]
        models: Vec<String>,
    },
    /// Explain, fine-tune and score every explainer at every budget.
    Protocol {
        #[arg(long)]
        backbone: Option<PathBuf>,
        #[arg(long)]
        evaluator: Option<PathBuf>,
        #[arg(long)]
        explainer: Option<PathBuf>,
        #[arg(long)]
        param_explainer: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "full,empty,raw,param_mask,instance_mask")]
        explainers: Vec<String>,
    },
    /// Tabulate a finished protocol run.
    Report {
        #[arg(long)]
        run: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Prepare { .. } => "prepare",
            Command::TrainBackbone => "train-backbone",
            Command::TrainEvaluator { .. } => "train-evaluator",
            Command::TrainExplainer { .. } => "train-explainer",
            Command::Explain { .. } => "explain",
            Command::Evaluate { .. } => "evaluate",
            Command::SweepDrop { .. } => "sweep-drop",
            Command::SweepEgo { .. } => "sweep-ego",
            Command::Protocol { .. } => "protocol",
            Command::Report { .. } => "report",
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

/// A failed run: exit code plus a one-line message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: msg.into() }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: msg.into() }
    }

    pub fn line(&self) -> String {
        let flat: Vec<&str> = self.message.split_whitespace().collect();
        format!("ERROR {}: {}", self.code, flat.join(" "))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Divergence { .. } => EXIT_DIVERGENCE,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::data(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error");
            eprintln!("{}", Failure::usage(first.trim_start_matches("error: ")).line());
            eprint!("{}", e.render());
            return EXIT_USAGE;
        }
    };
    let echo: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::execute(&cli, echo) {
        Ok(dir) => {
            println!("{}", dir.display());
            EXIT_OK
        }
        Err(f) => {
            eprintln!("{}", f.line());
            f.code
        }
    }
}
