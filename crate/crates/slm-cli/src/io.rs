//! Shared file plumbing for the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use slm_core::vocab::{RetokenizeRules, Vocabulary, WordId};

/// Split seed resolution: the SLM_SEED environment variable overrides the
/// command-line flag.
pub fn resolve_seed(flag: u64) -> Result<u64> {
    match std::env::var("SLM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("SLM_SEED must be an integer, found {v:?}")),
        Err(_) => Ok(flag),
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Whitespace-tokenized sentences, one per line, blank lines skipped,
/// optionally retokenized.
pub fn read_sentences(path: &Path, retok: Option<&PathBuf>) -> Result<Vec<Vec<String>>> {
    let text = read_to_string(path)?;
    let rules = match retok {
        Some(p) => RetokenizeRules::load(p)
            .with_context(|| format!("reading retokenization rules {}", p.display()))?,
        None => RetokenizeRules::new(),
    };
    let mut sentences = Vec::new();
    for line in text.lines() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        sentences.push(slm_core::vocab::retokenize(&tokens, &rules));
    }
    Ok(sentences)
}

pub fn map_sentences(vocab: &Vocabulary, sentences: &[Vec<String>]) -> Vec<Vec<WordId>> {
    sentences.iter().map(|s| vocab.map_sentence(s)).collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn model_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string())
}

pub fn load_model(path: &Path) -> Result<slm_core::model::SlmModel> {
    slm_core::modelfile::load(path).with_context(|| format!("loading model {}", path.display()))
}
