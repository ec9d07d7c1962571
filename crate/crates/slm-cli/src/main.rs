mod commands;
mod io;

use anyhow::Result;
use clap::{Parser, Subcommand};

/// Syntactic language modeling toolkit: treebank-initialized structured
/// LM with EM reestimation, perplexity evaluation, and N-best rescoring.
#[derive(Parser)]
#[command(name = "slm", version, about)]
struct Cli {
    /// Cap the worker thread pool (0 = default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model from bracketed parses (any source: external parser
    /// output or a treebank; out-of-vocabulary words map to the unknown
    /// marker).
    Init(commands::init::InitArgs),
    /// Reestimate a model on word-level text with N-best EM.
    Train(commands::train::TrainArgs),
    /// Report interpolated perplexity at lambda 0.0 / given / 1.0.
    Ppl(commands::ppl::PplArgs),
    /// Rescore N-best lists and report word error rates.
    Rescore(commands::rescore::RescoreArgs),
    /// Emit the best parse per input sentence.
    Parse(commands::parse::ParseArgs),
    /// Score a selections file against N-best references.
    Wer(commands::wer::WerArgs),
}

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result: Result<()> = match cli.command {
        Command::Init(args) => commands::init::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Ppl(args) => commands::ppl::run(args),
        Command::Rescore(args) => commands::rescore::run(args),
        Command::Parse(args) => commands::parse::run(args),
        Command::Wer(args) => commands::wer::run(args),
    };
    if let Err(err) = result {
        eprintln!("slm: error: {err:#}");
        std::process::exit(1);
    }
}
