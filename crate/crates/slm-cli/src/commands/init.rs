use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use slm_core::bracketed::parse_tree_file;
use slm_core::estimation::{ingest_treebank, initialize, EstimationOptions};
use slm_core::headrules::HeadRules;
use slm_core::ngram::train_trigram;
use slm_core::vocab::parse_word_lines;

use crate::io;

#[derive(Args)]
pub struct InitArgs {
    /// Bracketed parses, one tree per line.
    #[arg(long)]
    pub parses: PathBuf,
    /// Word list, one token per line; `#` lines ignored.
    #[arg(long)]
    pub vocab: PathBuf,
    /// Head-percolation rules (`LABEL ltr|rtl child...`); a built-in
    /// table is used when omitted.
    #[arg(long)]
    pub headrules: Option<PathBuf>,
    /// Training text for the embedded trigram baseline; the parse yields
    /// are used when omitted.
    #[arg(long)]
    pub text: Option<PathBuf>,
    /// Retokenization rules applied to --text.
    #[arg(long)]
    pub retok: Option<PathBuf>,
    /// Seed for the 90/10 main/check sentence split (SLM_SEED overrides).
    #[arg(long, default_value_t = 42)]
    pub split_seed: u64,
    /// Keep check counts out of the final tables.
    #[arg(long)]
    pub no_pool_check: bool,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: InitArgs) -> Result<()> {
    let seed = io::resolve_seed(args.split_seed)?;
    let opts = EstimationOptions {
        split_seed: seed,
        pool_check: !args.no_pool_check,
        ..Default::default()
    };
    let trees = parse_tree_file(&io::read_to_string(&args.parses)?)
        .with_context(|| format!("parsing {}", args.parses.display()))?;
    let words = parse_word_lines(&io::read_to_string(&args.vocab)?);
    let rules = match &args.headrules {
        Some(p) => HeadRules::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => HeadRules::default_table(),
    };
    let (vocab, indexed) = ingest_treebank(&trees, &rules, &words)?;
    let tree_words: Vec<Vec<String>> = trees
        .iter()
        .map(|t| t.yield_pairs().iter().map(|(_, w)| w.to_string()).collect())
        .collect();
    let oov = vocab.oov_rate(&tree_words);
    let mut model = initialize(&indexed, vocab, &opts)?;

    let trigram_sentences = match &args.text {
        Some(p) => io::map_sentences(&model.vocab, &io::read_sentences(p, args.retok.as_ref())?),
        None => indexed.iter().map(|t| t.yield_words()).collect(),
    };
    model.trigram = Some(train_trigram(&trigram_sentences, &model.vocab, &opts));

    slm_core::modelfile::save(&model, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "initialized {} from {} parses (treebank OOV rate {:.4})",
        io::model_name(&args.out),
        indexed.len(),
        oov
    );
    println!(
        "params: predictor {} tagger {} parser {}",
        model.predictor.count_parameters(),
        model.tagger.count_parameters(),
        model.parser.count_parameters()
    );
    Ok(())
}
