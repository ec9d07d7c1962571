use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use slm_core::ngram::interpolated_ppl_curve;
use slm_core::search::SearchParams;

use crate::io;

#[derive(Args)]
pub struct PplArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluation text, one sentence per line.
    #[arg(long)]
    pub text: PathBuf,
    /// Retokenization rules (`token<TAB>replacement words`).
    #[arg(long)]
    pub retok: Option<PathBuf>,
    /// Interpolation weight on the trigram.
    #[arg(long, default_value_t = 0.6)]
    pub lambda: f64,
    /// Take the trigram from another model file instead of the embedded
    /// one.
    #[arg(long)]
    pub trigram: Option<PathBuf>,
    /// Maximum hypotheses per search stack.
    #[arg(long, default_value_t = 10)]
    pub beam_entries: usize,
    /// Log-probability beam width per stack.
    #[arg(long, default_value_t = 6.9)]
    pub beam_logwidth: f64,
}

pub fn run(args: PplArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.lambda) {
        bail!("lambda must lie in [0, 1], found {}", args.lambda);
    }
    let model = io::load_model(&args.model)?;
    let sentences = io::map_sentences(
        &model.vocab,
        &io::read_sentences(&args.text, args.retok.as_ref())?,
    );
    if sentences.is_empty() {
        bail!("no sentences in {}", args.text.display());
    }
    let trigram = match &args.trigram {
        Some(p) => {
            let other = io::load_model(p)?;
            if other.vocab != model.vocab {
                bail!("trigram model {} has a different vocabulary", p.display());
            }
            other
                .trigram
                .with_context(|| format!("{} holds no trigram section", p.display()))?
        }
        None => model
            .trigram
            .clone()
            .context("model holds no trigram section; pass --trigram")?,
    };
    let params = SearchParams {
        max_entries: args.beam_entries,
        log_width: args.beam_logwidth,
    };

    let mut lambdas = vec![0.0, args.lambda, 1.0];
    lambdas.dedup_by(|a, b| a == b);
    let name = io::model_name(&args.model);
    let header: Vec<String> = lambdas.iter().map(|l| format!("lambda={l:<4}")).collect();
    println!(
        "{:<20} {:>4}  {}",
        "initial-stats",
        "iter",
        header.join("  ")
    );
    // One scoring pass covers every column.
    let ppls = interpolated_ppl_curve(&trigram, &model, params, &sentences, &lambdas)?;
    let cells: Vec<String> = ppls.iter().map(|ppl| format!("{ppl:<12.4}")).collect();
    println!("{:<20} {:>4}  {}", name, model.iteration, cells.join("  "));
    Ok(())
}
