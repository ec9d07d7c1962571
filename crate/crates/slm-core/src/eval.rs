//! Perplexity, N-best rescoring, and word error rate.

use rayon::prelude::*;

use crate::error::{Result, SlmError};
use crate::model::SlmModel;
use crate::ngram::SentenceScorer;
use crate::search::{log_sum_exp, run_sentence, SearchParams};
use crate::vocab::WordId;

/// Perplexity over mapped sentences: the exponentiated negative average
/// log probability per predicted token, with sentence-end tokens counted
/// and the begin marker never predicted.
pub fn perplexity(lm: &dyn SentenceScorer, sentences: &[Vec<WordId>]) -> Result<f64> {
    let mut total_lp = 0.0;
    let mut tokens = 0usize;
    for (si, sentence) in sentences.iter().enumerate() {
        let probs = lm.word_probs(sentence)?;
        for (pos, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                let token = sentence
                    .get(pos)
                    .map(|&w| lm.vocab().word(w).to_string())
                    .unwrap_or_else(|| crate::vocab::SENT_END.to_string());
                return Err(SlmError::ZeroProbability {
                    sentence: si,
                    position: pos,
                    token,
                });
            }
            total_lp += p.ln();
        }
        tokens += probs.len();
    }
    if tokens == 0 {
        return Err(SlmError::Format("no tokens to evaluate".into()));
    }
    Ok((-total_lp / tokens as f64).exp())
}

/// One recognizer hypothesis with its decoder scores (natural-log domain).
#[derive(Debug, Clone, PartialEq)]
pub struct NBestHyp {
    pub words: Vec<String>,
    pub acoustic: f64,
    pub lm: f64,
    /// 1-based decoder rank; rank 1 is the decoder's single best.
    pub rank: usize,
}

/// Per-utterance hypothesis list with the reference transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct NBestList {
    pub id: String,
    pub reference: Vec<String>,
    pub hyps: Vec<NBestHyp>,
}

/// Parses the N-best file format: `UTT <id> REF <words...>` followed by
/// one `<acoustic> <lm> <words...>` line per hypothesis, utterances
/// separated by blank lines.
pub fn parse_nbest(text: &str) -> Result<Vec<NBestList>> {
    let mut lists = Vec::new();
    let mut current: Option<NBestList> = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            if let Some(list) = current.take() {
                finish_list(list, &mut lists)?;
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("UTT ") {
            if let Some(list) = current.take() {
                finish_list(list, &mut lists)?;
            }
            let (id, reference) = rest
                .split_once(" REF")
                .ok_or_else(|| SlmError::Format(format!("line {}: header missing REF", i + 1)))?;
            let id = id.trim();
            if id.is_empty() {
                return Err(SlmError::Format(format!(
                    "line {}: empty utterance id",
                    i + 1
                )));
            }
            current = Some(NBestList {
                id: id.to_string(),
                reference: reference.split_whitespace().map(str::to_string).collect(),
                hyps: Vec::new(),
            });
        } else {
            let list = current.as_mut().ok_or_else(|| {
                SlmError::Format(format!("line {}: hypothesis before UTT header", i + 1))
            })?;
            let mut fields = line.split_whitespace();
            let acoustic: f64 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| SlmError::Format(format!("line {}: bad acoustic score", i + 1)))?;
            let lm: f64 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| SlmError::Format(format!("line {}: bad lm score", i + 1)))?;
            let words: Vec<String> = fields.map(str::to_string).collect();
            if !acoustic.is_finite() || !lm.is_finite() {
                return Err(SlmError::Format(format!(
                    "line {}: non-finite score",
                    i + 1
                )));
            }
            let rank = list.hyps.len() + 1;
            list.hyps.push(NBestHyp {
                words,
                acoustic,
                lm,
                rank,
            });
        }
    }
    if let Some(list) = current.take() {
        finish_list(list, &mut lists)?;
    }
    Ok(lists)
}

fn finish_list(list: NBestList, out: &mut Vec<NBestList>) -> Result<()> {
    if list.hyps.is_empty() {
        return Err(SlmError::Format(format!(
            "utterance {:?} has no hypotheses",
            list.id
        )));
    }
    out.push(list);
    Ok(())
}

pub fn format_nbest(lists: &[NBestList]) -> String {
    let mut out = String::new();
    for list in lists {
        out.push_str("UTT ");
        out.push_str(&list.id);
        out.push_str(" REF");
        for w in &list.reference {
            out.push(' ');
            out.push_str(w);
        }
        out.push('\n');
        for h in &list.hyps {
            out.push_str(&format!("{} {}", h.acoustic, h.lm));
            for w in &h.words {
                out.push(' ');
                out.push_str(w);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct RescoreWeights {
    pub acoustic_scale: f64,
    pub lm_scale: f64,
    pub word_penalty: f64,
}

impl Default for RescoreWeights {
    fn default() -> Self {
        RescoreWeights {
            acoustic_scale: 1.0,
            lm_scale: 1.0,
            word_penalty: 0.0,
        }
    }
}

/// Language model used when rescoring N-best hypotheses.
pub enum RescoreLm<'a> {
    /// The decoder's own per-hypothesis LM score.
    Baseline,
    /// Hypothesis-level mixture of the decoder LM score and the structured
    /// model: ln(lambda * P_baseline + (1 - lambda) * P_slm).
    Mixed {
        lambda: f64,
        slm: &'a SlmModel,
        params: SearchParams,
    },
    /// Word-level interpolation using an internal trigram.
    WordLevel {
        lambda: f64,
        trigram: &'a crate::component::ComponentModel,
        slm: &'a SlmModel,
        params: SearchParams,
    },
}

impl RescoreLm<'_> {
    fn hyp_lm_score(&self, hyp: &NBestHyp) -> Result<f64> {
        match self {
            RescoreLm::Baseline => Ok(hyp.lm),
            RescoreLm::Mixed {
                lambda,
                slm,
                params,
            } => {
                if *lambda >= 1.0 {
                    return Ok(hyp.lm);
                }
                let words = slm.vocab.map_sentence(&hyp.words);
                let slm_lp: f64 = run_sentence(slm, &words, params)?
                    .word_probs
                    .iter()
                    .map(|p| p.ln())
                    .sum();
                if *lambda <= 0.0 {
                    return Ok(slm_lp);
                }
                Ok(log_sum_exp([
                    lambda.ln() + hyp.lm,
                    (1.0 - lambda).ln() + slm_lp,
                ]))
            }
            RescoreLm::WordLevel {
                lambda,
                trigram,
                slm,
                params,
            } => {
                let words = slm.vocab.map_sentence(&hyp.words);
                let lm = crate::ngram::InterpolatedLm::new(*lambda, trigram, slm, *params)?;
                Ok(lm.word_probs(&words)?.iter().map(|p| p.ln()).sum())
            }
        }
    }
}

/// Selects the hypothesis maximizing the weighted combination of acoustic
/// score, LM score, and word count; ties go to the lower decoder rank.
pub fn rescore<'a>(
    list: &'a NBestList,
    lm: &RescoreLm<'_>,
    weights: &RescoreWeights,
) -> Result<&'a NBestHyp> {
    let mut best: Option<(&NBestHyp, f64)> = None;
    for hyp in &list.hyps {
        let lm_score = if weights.lm_scale == 0.0 {
            0.0
        } else {
            lm.hyp_lm_score(hyp)?
        };
        let score = weights.acoustic_scale * hyp.acoustic
            + weights.lm_scale * lm_score
            + weights.word_penalty * hyp.words.len() as f64;
        let better = match best {
            None => true,
            Some((b, s)) => score > s || (score == s && hyp.rank < b.rank),
        };
        if better {
            best = Some((hyp, score));
        }
    }
    Ok(best.expect("nonempty hypothesis list").0)
}

/// Alignment error counts from a minimum-edit-distance alignment with unit
/// costs; ties in the backtrace prefer substitution, then deletion, then
/// insertion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EditCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl EditCounts {
    pub fn total(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

pub fn edit_counts<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> EditCounts {
    let r = reference.len();
    let h = hypothesis.len();
    let cols = h + 1;
    let mut dist = vec![0u32; (r + 1) * cols];
    for j in 0..=h {
        dist[j] = j as u32;
    }
    for i in 1..=r {
        dist[i * cols] = i as u32;
        for j in 1..=h {
            let sub_cost = u32::from(reference[i - 1].as_ref() != hypothesis[j - 1].as_ref());
            let sub = dist[(i - 1) * cols + j - 1] + sub_cost;
            let del = dist[(i - 1) * cols + j] + 1;
            let ins = dist[i * cols + j - 1] + 1;
            dist[i * cols + j] = sub.min(del).min(ins);
        }
    }
    // Backtrace with the substitution > deletion > insertion preference.
    let mut counts = EditCounts::default();
    let (mut i, mut j) = (r, h);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let sub_cost = u32::from(reference[i - 1].as_ref() != hypothesis[j - 1].as_ref());
            if dist[i * cols + j] == dist[(i - 1) * cols + j - 1] + sub_cost {
                if sub_cost == 1 {
                    counts.substitutions += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[i * cols + j] == dist[(i - 1) * cols + j] + 1 {
            counts.deletions += 1;
            i -= 1;
            continue;
        }
        counts.insertions += 1;
        j -= 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WerStats {
    pub errors: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_words: usize,
}

impl WerStats {
    pub fn rate(&self) -> f64 {
        if self.reference_words == 0 {
            if self.errors == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.errors as f64 / self.reference_words as f64
        }
    }

    fn add(&mut self, c: EditCounts, ref_words: usize) {
        self.errors += c.total();
        self.substitutions += c.substitutions;
        self.deletions += c.deletions;
        self.insertions += c.insertions;
        self.reference_words += ref_words;
    }
}

/// Word error rate of selected hypotheses against references, aggregated as
/// total edit errors over total reference words.
pub fn wer<S: AsRef<str> + Sync>(pairs: &[(Vec<S>, Vec<S>)]) -> WerStats {
    let counts: Vec<(EditCounts, usize)> = pairs
        .par_iter()
        .map(|(hyp, reference)| (edit_counts(reference, hyp), reference.len()))
        .collect();
    let mut stats = WerStats::default();
    for (c, n) in counts {
        stats.add(c, n);
    }
    stats
}

/// The lowest word error rate achievable by any per-utterance selection:
/// each list contributes its minimum-error hypothesis.
pub fn oracle_wer(lists: &[NBestList]) -> WerStats {
    let counts: Vec<(EditCounts, usize)> = lists
        .par_iter()
        .map(|list| {
            let best = list
                .hyps
                .iter()
                .map(|h| edit_counts(&list.reference, &h.words))
                .min_by_key(|c| c.total())
                .expect("nonempty hypothesis list");
            (best, list.reference.len())
        })
        .collect();
    let mut stats = WerStats::default();
    for (c, n) in counts {
        stats.add(c, n);
    }
    stats
}

/// Pairs selected hypotheses with the references of their N-best lists,
/// failing on ids without a reference entry.
pub fn pair_selections<'a>(
    selections: &'a [(String, Vec<String>)],
    lists: &'a [NBestList],
) -> Result<Vec<(Vec<String>, Vec<String>)>> {
    let by_id: std::collections::HashMap<&str, &NBestList> =
        lists.iter().map(|l| (l.id.as_str(), l)).collect();
    let mut pairs = Vec::with_capacity(selections.len());
    for (id, words) in selections {
        let list = by_id
            .get(id.as_str())
            .ok_or_else(|| SlmError::MissingReference(id.clone()))?;
        pairs.push((words.clone(), list.reference.clone()));
    }
    Ok(pairs)
}
