use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use slm_core::search::{best_parse, SearchParams};

use crate::io;

#[derive(Args)]
pub struct ParseArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Sentences to parse, one per line.
    #[arg(long)]
    pub text: PathBuf,
    /// Retokenization rules (`token<TAB>replacement words`).
    #[arg(long)]
    pub retok: Option<PathBuf>,
    /// Maximum hypotheses per search stack.
    #[arg(long, default_value_t = 10)]
    pub beam_entries: usize,
    /// Log-probability beam width per stack.
    #[arg(long, default_value_t = 6.9)]
    pub beam_logwidth: f64,
    /// Write parses here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ParseArgs) -> Result<()> {
    let model = io::load_model(&args.model)?;
    let sentences = io::map_sentences(
        &model.vocab,
        &io::read_sentences(&args.text, args.retok.as_ref())?,
    );
    let params = SearchParams {
        max_entries: args.beam_entries,
        log_width: args.beam_logwidth,
    };
    let mut out = String::new();
    for (i, sentence) in sentences.iter().enumerate() {
        let (tree, lp) = best_parse(&model, sentence, &params)
            .with_context(|| format!("parsing sentence {}", i + 1))?;
        let _ = writeln!(out, "{}\t{lp:.6}", tree.serialize(&model.vocab));
    }
    match &args.out {
        Some(path) => io::write_file(path, &out)?,
        None => print!("{out}"),
    }
    Ok(())
}
