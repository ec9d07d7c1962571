use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use slm_core::em::{train, EmOptions};
use slm_core::estimation::EstimationOptions;
use slm_core::search::SearchParams;

use crate::io;

#[derive(Args)]
pub struct TrainArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Word-level training text, one sentence per line.
    #[arg(long)]
    pub text: PathBuf,
    /// Retokenization rules (`token<TAB>replacement words`).
    #[arg(long)]
    pub retok: Option<PathBuf>,
    /// EM iterations.
    #[arg(long, default_value_t = 13)]
    pub iters: u32,
    /// Hypothesis budget per sentence.
    #[arg(long, default_value_t = 10)]
    pub nbest: usize,
    /// Maximum hypotheses per search stack.
    #[arg(long, default_value_t = 10)]
    pub beam_entries: usize,
    /// Log-probability beam width per stack.
    #[arg(long, default_value_t = 6.9)]
    pub beam_logwidth: f64,
    /// Seed for the 90/10 main/check sentence split (SLM_SEED overrides).
    #[arg(long, default_value_t = 42)]
    pub split_seed: u64,
    #[arg(long)]
    pub no_pool_check: bool,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-iteration metrics file (defaults to <out>.metrics).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let seed = io::resolve_seed(args.split_seed)?;
    let model = io::load_model(&args.model)?;
    let sentences = io::map_sentences(
        &model.vocab,
        &io::read_sentences(&args.text, args.retok.as_ref())?,
    );
    let opts = EmOptions {
        nbest: args.nbest,
        search: SearchParams {
            max_entries: args.beam_entries,
            log_width: args.beam_logwidth,
        },
        estimation: EstimationOptions {
            split_seed: seed,
            pool_check: !args.no_pool_check,
            ..Default::default()
        },
    };
    let run = train(&model, &sentences, args.iters, &opts).with_context(|| "EM training failed")?;

    let mut metrics_text = String::new();
    let _ = writeln!(
        metrics_text,
        "# iter train_ppl support_ll frozen_ll skipped predictor_params tagger_params parser_params"
    );
    for m in &run.metrics {
        let frozen = m
            .frozen_ll
            .map(|f| format!("{f:.6}"))
            .unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            metrics_text,
            "{} {:.6} {:.6} {} {} {} {} {}",
            m.iteration,
            m.train_ppl,
            m.support_ll,
            frozen,
            m.skipped,
            m.predictor_params,
            m.tagger_params,
            m.parser_params
        );
        println!(
            "iter {:>3}  train-ppl {:>10.4}  params {}/{}/{}",
            m.iteration, m.train_ppl, m.predictor_params, m.tagger_params, m.parser_params
        );
    }
    let metrics_path = args
        .metrics
        .unwrap_or_else(|| args.out.with_extension("metrics"));
    io::write_file(&metrics_path, &metrics_text)?;
    slm_core::modelfile::save(&run.model, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}
