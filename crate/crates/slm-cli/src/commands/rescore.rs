use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use slm_core::eval::{oracle_wer, parse_nbest, rescore, wer, RescoreLm, RescoreWeights};
use slm_core::search::SearchParams;

use crate::io;

#[derive(Args)]
pub struct RescoreArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// N-best file: `UTT <id> REF <words>` then `<acoustic> <lm> <words>`
    /// lines, utterances separated by blank lines.
    #[arg(long)]
    pub nbest: PathBuf,
    /// Interpolation weight on the decoder's LM scores.
    #[arg(long, default_value_t = 0.6)]
    pub lambda: f64,
    /// Weight on the acoustic log score.
    #[arg(long, default_value_t = 1.0)]
    pub acoustic_scale: f64,
    /// Weight on the language model log score.
    #[arg(long, default_value_t = 1.0)]
    pub lm_scale: f64,
    /// Per-word insertion bonus added to the combined score.
    #[arg(long, default_value_t = 0.0)]
    pub word_penalty: f64,
    /// Maximum hypotheses per search stack.
    #[arg(long, default_value_t = 10)]
    pub beam_entries: usize,
    /// Log-probability beam width per stack.
    #[arg(long, default_value_t = 6.9)]
    pub beam_logwidth: f64,
    /// Write `<id> <words...>` selections (at the given lambda) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: RescoreArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.lambda) {
        bail!("lambda must lie in [0, 1], found {}", args.lambda);
    }
    let model = io::load_model(&args.model)?;
    let lists = parse_nbest(&io::read_to_string(&args.nbest)?)?;
    if lists.is_empty() {
        bail!("no utterances in {}", args.nbest.display());
    }
    let params = SearchParams {
        max_entries: args.beam_entries,
        log_width: args.beam_logwidth,
    };
    let weights = RescoreWeights {
        acoustic_scale: args.acoustic_scale,
        lm_scale: args.lm_scale,
        word_penalty: args.word_penalty,
    };

    let mut lambdas = vec![0.0, args.lambda, 1.0];
    lambdas.dedup_by(|a, b| a == b);
    let mut rates = Vec::new();
    let mut selections_out = String::new();
    for &lambda in &lambdas {
        let lm = RescoreLm::Mixed {
            lambda,
            slm: &model,
            params,
        };
        let mut pairs = Vec::with_capacity(lists.len());
        for list in &lists {
            let chosen = rescore(list, &lm, &weights)?;
            if lambda == args.lambda {
                let _ = writeln!(selections_out, "{} {}", list.id, chosen.words.join(" "));
            }
            pairs.push((chosen.words.clone(), list.reference.clone()));
        }
        rates.push(wer(&pairs));
    }

    let one_best: Vec<(Vec<String>, Vec<String>)> = lists
        .iter()
        .map(|l| (l.hyps[0].words.clone(), l.reference.clone()))
        .collect();
    let baseline = wer(&one_best);
    let oracle = oracle_wer(&lists);

    let header: Vec<String> = lambdas.iter().map(|l| format!("lambda={l:<4}")).collect();
    println!(
        "{:<20} {:>4}  {}",
        "initial-stats",
        "iter",
        header.join("  ")
    );
    let cells: Vec<String> = rates
        .iter()
        .map(|r| format!("{:<12.4}", 100.0 * r.rate()))
        .collect();
    println!(
        "{:<20} {:>4}  {}",
        io::model_name(&args.model),
        model.iteration,
        cells.join("  ")
    );
    println!(
        "baseline 1-best WER {:.4}%  oracle WER {:.4}%  ({} utterances)",
        100.0 * baseline.rate(),
        100.0 * oracle.rate(),
        lists.len()
    );
    if let Some(out) = &args.out {
        io::write_file(out, &selections_out)?;
    }
    Ok(())
}
