use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use slm_core::eval::{oracle_wer, pair_selections, parse_nbest, wer};

use crate::io;

#[derive(Args)]
pub struct WerArgs {
    /// N-best file supplying the references.
    #[arg(long)]
    pub nbest: PathBuf,
    /// Selections: `<utterance-id> <words...>` per line.
    #[arg(long)]
    pub hyps: PathBuf,
}

pub fn run(args: WerArgs) -> Result<()> {
    let lists = parse_nbest(&io::read_to_string(&args.nbest)?)?;
    let text = io::read_to_string(&args.hyps)?;
    let mut selections = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let id = match fields.next() {
            Some(id) => id.to_string(),
            None => continue,
        };
        let words: Vec<String> = fields.map(str::to_string).collect();
        if words.is_empty() {
            bail!("line {}: selection for {id:?} has no words", i + 1);
        }
        selections.push((id, words));
    }
    if selections.is_empty() {
        bail!("no selections in {}", args.hyps.display());
    }
    let pairs = pair_selections(&selections, &lists)?;
    let stats = wer(&pairs);
    let oracle = oracle_wer(&lists);
    println!(
        "WER {:.4}% ({} errors: {} sub {} del {} ins / {} reference words)",
        100.0 * stats.rate(),
        stats.errors,
        stats.substitutions,
        stats.deletions,
        stats.insertions,
        stats.reference_words
    );
    println!("oracle WER {:.4}%", 100.0 * oracle.rate());
    Ok(())
}
