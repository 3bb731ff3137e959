//! `offexpand`: command-line front end for target-specific training-set
//! expansion experiments.
//!
//! Exit status: 0 on success, 1 on runtime or data errors, 2 on usage errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use offexpand::ExpansionStrategy;

use config::{parse_strategy, HyperArgs, ProtocolArg, ScalarArg, UsageError, VariantArg};

#[derive(Debug, Parser)]
#[command(name = "offexpand", version, about = "Offensive-language classifiers with target-specific training-set expansion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize the `text` field of every JSON Lines record
    Normalize {
        /// Input JSON Lines file
        #[arg(long = "in")]
        input: PathBuf,
        /// Output JSON Lines file
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on a labeled JSON Lines file and save it
    Train(TrainArgs),
    /// Predict a label and score for every tweet in a JSON Lines file
    Classify {
        /// Model file written by `train`
        #[arg(long)]
        model: PathBuf,
        /// Tweets to classify
        #[arg(long = "in")]
        input: PathBuf,
        /// Prediction records {id, label, score}
        #[arg(long)]
        out: PathBuf,
    },
    /// Tag replies, select the most offensive users and write their replies as OFF examples
    Expand(ExpandArgs),
    /// Run an experiment protocol and write a JSON report plus a text table
    Eval(EvalArgs),
    /// Write a synthetic seed set, reply corpus and gold test sets
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled training examples
    #[arg(long)]
    train: PathBuf,
    /// Where to write the model
    #[arg(long)]
    model_out: PathBuf,
    /// Classifier variant (required here or in the config file)
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training seed
    #[arg(long)]
    seed: Option<u64>,
    /// Floating-point width of the stored parameters
    #[arg(long, value_enum)]
    scalar: Option<ScalarArg>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Model used to tag the replies
    #[arg(long)]
    model: PathBuf,
    /// Reply corpus
    #[arg(long)]
    replies: PathBuf,
    /// Comma-separated target handles; defaults to every replied-to handle
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    /// Selection rule: `frac:<θ>` or `top:<n>`
    #[arg(long, value_parser = parse_strategy)]
    strategy: ExpansionStrategy,
    /// Users with fewer replies to the target are never selected
    #[arg(long, default_value_t = 3)]
    min_replies: usize,
    /// Expansion examples; a summary goes to `<out>.report.json`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Experiment protocol
    #[arg(value_enum)]
    protocol: ProtocolArg,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Labeled seed training set
    #[arg(long)]
    seed_train: Option<PathBuf>,
    /// Reply corpus (per-target, global-cv)
    #[arg(long)]
    replies: Option<PathBuf>,
    /// Gold test sets (per-target)
    #[arg(long)]
    gold_tests: Option<PathBuf>,
    /// Comma-separated targets for global-cv; defaults to every replied-to handle
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<String>>,
    /// Comma-separated classifier variants [default: svm,embedbag]
    #[arg(long, value_enum, value_delimiter = ',')]
    variants: Option<Vec<VariantArg>>,
    /// Selection rule, repeatable [default: top:10 top:20 top:50 frac:0.5]
    #[arg(long = "strategy", value_parser = parse_strategy)]
    strategies: Vec<ExpansionStrategy>,
    /// Minimum replies for a user to be selectable [default: 3]
    #[arg(long)]
    min_replies: Option<usize>,
    /// Number of folds [default: 5]
    #[arg(long)]
    k: Option<usize>,
    /// Seed for folds and every classifier [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Floating-point width used for training and scoring [default: f64]
    #[arg(long, value_enum)]
    scalar: Option<ScalarArg>,
    #[command(flatten)]
    hyper: HyperArgs,
    /// JSON report path; the rendered table goes next to it with a .txt extension
    #[arg(long)]
    out: PathBuf,
    /// global-cv only: write every training set used, one file per fold and configuration
    #[arg(long)]
    emit_training_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// SynthConfig JSON document
    #[arg(long, conflicts_with = "standard", required_unless_present = "standard")]
    config: Option<PathBuf>,
    /// Use the built-in standard fixture with this seed
    #[arg(long)]
    standard: Option<u64>,
    /// Override the antagonist fraction
    #[arg(long)]
    antagonist_fraction: Option<f64>,
    /// Directory for seed_train.jsonl, replies.jsonl and gold_tests.jsonl
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write the effective SynthConfig here
    #[arg(long)]
    write_config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Normalize { input, out } => commands::normalize(&input, &out),
        Command::Train(args) => commands::train(args),
        Command::Classify { model, input, out } => commands::classify(&model, &input, &out),
        Command::Expand(args) => commands::expand(args),
        Command::Eval(args) => commands::eval(args),
        Command::Synth(args) => commands::synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
