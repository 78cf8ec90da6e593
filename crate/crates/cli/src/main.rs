mod commands;
mod config;
mod manifest;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{TopicsArgs, TrainEvalArgs, UsageError};
use config::{parse_schemes, PipelineConfig};

/// Intent classification of short messages: corpus preparation, scheme
/// comparison under stratified cross-validation, prediction and topic reports.
#[derive(Debug, Parser)]
#[command(name = "intent", version)]
struct Cli {
    /// Root seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for outputs and run manifests.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// TOML settings file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Keep messages that mention a lexicon term.
    Filter {
        #[arg(short, long)]
        input: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Comma-separated terms; multi-word terms match as phrases.
        #[arg(long)]
        lexicon: Option<String>,
    },
    /// Drop near-duplicate messages by Levenshtein similarity.
    Dedup {
        #[arg(short, long)]
        input: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Turn crowd annotations into labeled messages.
    Aggregate {
        /// CSV with message_id, annotator_id, label, trust.
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// JSONL messages the annotations refer to.
        #[arg(long)]
        messages: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Cross-validate classification schemes and write comparison reports.
    TrainEval {
        /// Labeled JSONL corpus.
        #[arg(long)]
        labeled: Option<PathBuf>,
        /// word2vec binary vectors, needed by B2, B4 and PROPOSED.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Comma-separated scheme names, e.g. `B1,PROPOSED`.
        #[arg(long)]
        schemes: Option<String>,
        /// Number of folds.
        #[arg(short)]
        k: Option<usize>,
        /// Also fit PROPOSED on all labeled data and save it for `predict`.
        #[arg(long)]
        fit_full: bool,
    },
    /// Label messages with a model saved by `train-eval --fit-full`.
    Predict {
        /// Model directory (or the artifact file itself).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(short, long)]
        input: Option<PathBuf>,
        /// Predictions CSV; a labeled JSONL copy is written next to it.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Topic models of each predicted category.
    Topics {
        /// Labeled JSONL, typically the output of `predict`.
        #[arg(short, long)]
        input: Option<PathBuf>,
        /// One stop word per line; a built-in English list is used otherwise.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Number of topics per category.
        #[arg(short = 'k', long)]
        topics: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        top_n: Option<usize>,
        #[arg(long)]
        include_none: bool,
    },
    /// Mean per-message rates of lexicon categories for each predicted category.
    LexiconCounts {
        #[arg(short, long)]
        input: Option<PathBuf>,
        /// JSON object mapping category names to word lists.
        #[arg(long)]
        lexicons: Option<PathBuf>,
        /// Messages sampled per category.
        #[arg(long)]
        sample_size: Option<usize>,
    },
    /// Write the synthetic labeled corpus and its word vectors.
    Synth {
        #[arg(long, default_value_t = 1200)]
        messages: usize,
        #[arg(long, default_value_t = 50)]
        dimension: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = cli.out_dir {
        cfg.out_dir = dir;
    }
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;

    match cli.command {
        Command::Filter { input, output, lexicon } => commands::filter(cfg, input, output, lexicon),
        Command::Dedup { input, output, threshold } => commands::dedup_cmd(cfg, input, output, threshold),
        Command::Aggregate {
            annotations,
            messages,
            output,
            threshold,
        } => commands::aggregate(cfg, annotations, messages, output, threshold),
        Command::TrainEval {
            labeled,
            embeddings,
            schemes,
            k,
            fit_full,
        } => {
            let schemes = schemes
                .map(|s| parse_schemes(&s))
                .transpose()
                .map_err(|e| UsageError(format!("{e:#}")))?;
            commands::train_eval(
                cfg,
                TrainEvalArgs {
                    labeled,
                    embeddings,
                    schemes,
                    k,
                    fit_full,
                },
            )
        }
        Command::Predict { model, input, output } => commands::predict(cfg, model, input, output),
        Command::Topics {
            input,
            stopwords,
            topics,
            iterations,
            top_n,
            include_none,
        } => commands::topics(
            cfg,
            TopicsArgs {
                input,
                stopwords,
                topics,
                iterations,
                top_n,
                include_none,
            },
        ),
        Command::LexiconCounts {
            input,
            lexicons,
            sample_size,
        } => commands::lexicon_counts(cfg, input, lexicons, sample_size),
        Command::Synth { messages, dimension } => commands::synth_cmd(cfg, messages, dimension),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
