use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use longfact_core::{Corpus, CorpusStats, Scorer};

use crate::commands::{
    chunk_plans, cmd_bench, cmd_calibrate, cmd_evaluate, cmd_retrieve, cmd_score, RetrieveFlags, ScoreOptions,
};
use crate::config::{Overrides, RunConfig};
use crate::error::CliError;
use crate::output::{bench_csv, calibration_csv, curve_csv, emit, write_file};
use crate::report::{Envelope, Metadata};

/// Factual-consistency scoring for long documents.
#[derive(Debug, Parser)]
#[command(name = "longfact", version)]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Documents, one JSON object per line
    #[arg(long)]
    pub docs: PathBuf,
    /// Claims, one JSON object per line
    #[arg(long)]
    pub claims: PathBuf,
    /// Report path; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every claim against its document
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Include every chunk's probability
        #[arg(long)]
        explain: bool,
        /// Write the chunk plans to this file
        #[arg(long)]
        dump_chunks: Option<PathBuf>,
    },
    /// Find the unit that best supports each claim
    Retrieve {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Include every search level
        #[arg(long)]
        trace: bool,
        /// Also score every unit and report agreement
        #[arg(long)]
        brute_force: bool,
    },
    /// Accuracy metrics against gold labels
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Calibration error per chunk budget
    Calibrate {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Chunk budgets, comma separated; defaults to --budget
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
        /// budget,ece rows
        #[arg(long)]
        csv: Option<PathBuf>,
        /// budget,x,y,bin_size reliability points
        #[arg(long)]
        curve_csv: Option<PathBuf>,
    },
    /// ROC-AUC, time and scorer calls per chunk budget
    Bench {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Chunk budgets, comma separated; defaults to --budget
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
        /// budget,roc_auc,wall_clock_s,scorer_calls rows
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Corpus statistics
    Stats {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
}

fn load(args: &CorpusArgs, config: &RunConfig) -> Result<(Corpus, Scorer), CliError> {
    let counter = config.token_counter()?;
    let corpus = Corpus::load(&args.docs, &args.claims, counter.as_ref())?;
    let scorer = config.build_scorer(counter)?;
    Ok((corpus, scorer))
}

fn out(args: &CorpusArgs) -> Option<&Path> {
    args.out.as_deref()
}

/// Runs one invocation with environment lookups through `env`.
pub fn run(cli: Cli, env: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
    let config = RunConfig::resolve(&cli.overrides, env)?;
    match &cli.command {
        Command::Score {
            corpus: args,
            explain,
            dump_chunks,
        } => {
            let (corpus, scorer) = load(args, &config)?;
            if let Some(path) = dump_chunks {
                let plans = chunk_plans(&corpus, &config, &scorer);
                write_file(
                    path,
                    &(serde_json::to_string_pretty(&plans).map_err(CliError::internal)? + "\n"),
                )?;
            }
            let env = cmd_score(&corpus, &config, &scorer, &ScoreOptions { explain: *explain })?;
            emit(&env, out(args))
        }
        Command::Retrieve {
            corpus: args,
            trace,
            brute_force,
        } => {
            let (corpus, scorer) = load(args, &config)?;
            let flags = RetrieveFlags {
                trace: *trace,
                brute_force: *brute_force,
            };
            emit(&cmd_retrieve(&corpus, &config, &scorer, &flags)?, out(args))
        }
        Command::Evaluate { corpus: args } => {
            let (corpus, scorer) = load(args, &config)?;
            emit(&cmd_evaluate(&corpus, &config, &scorer)?.0, out(args))
        }
        Command::Calibrate {
            corpus: args,
            sweep,
            csv,
            curve_csv: curve,
        } => {
            let (corpus, scorer) = load(args, &config)?;
            let env = cmd_calibrate(&corpus, &config, &scorer, sweep)?;
            if let Some(path) = csv {
                write_file(path, &calibration_csv(&env.report))?;
            }
            if let Some(path) = curve {
                write_file(path, &curve_csv(&env.report))?;
            }
            emit(&env, out(args))
        }
        Command::Bench {
            corpus: args,
            sweep,
            csv,
        } => {
            let (corpus, scorer) = load(args, &config)?;
            let env = cmd_bench(&corpus, &config, &scorer, sweep)?;
            if let Some(path) = csv {
                write_file(path, &bench_csv(&env.report))?;
            }
            emit(&env, out(args))
        }
        Command::Stats { corpus: args } => {
            let counter = config.token_counter()?;
            let corpus = Corpus::load(&args.docs, &args.claims, counter.as_ref())?;
            let metadata = Metadata {
                wall_clock_s: 0.0,
                backend_calls: 0,
                sweep_wall_clock_s: Vec::new(),
            };
            let env: Envelope<CorpusStats> =
                Envelope::new("stats", &config, corpus.content_hash(), corpus.stats(), metadata);
            emit(&env, out(args))
        }
    }
}
