//! Synchronous multi-stack beam search over word-parse prefixes and the
//! stack-normalized language model probability.
//!
//! Hypotheses advance word-synchronously. Within a word position they are
//! stratified by the total number of adjoins taken so far, so derivations
//! with many parser operations do not starve flat ones; each stratum is
//! pruned to a maximum entry count and a log-probability width. Ties break
//! on the lexicographic derivation signature, which keeps runs
//! reproducible across platforms.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Result, SlmError};
use crate::model::{legal_actions, Action, DerivationMode, ParsePrefix, SlmModel};
use crate::tree::TreeNode;
use crate::vocab::WordId;

#[derive(Debug, Clone, Copy)]
pub struct SearchParams {
    /// Maximum hypotheses kept per stack stratum.
    pub max_entries: usize,
    /// Log-probability width per stratum relative to its best entry.
    pub log_width: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            max_entries: 10,
            log_width: 6.9,
        }
    }
}

impl SearchParams {
    /// No pruning at all; feasible only for short toy sentences.
    pub fn exhaustive() -> SearchParams {
        SearchParams {
            max_entries: usize::MAX,
            log_width: f64::INFINITY,
        }
    }
}

/// The surviving word-parse prefixes at one position, all closed by a null
/// transition (or by sentence completion at the end position).
#[derive(Debug, Clone)]
pub struct StackSet {
    /// Number of words consumed (sentence-begin excluded).
    pub position: usize,
    pub hyps: Vec<ParsePrefix>,
}

impl StackSet {
    pub fn initial(model: &SlmModel) -> StackSet {
        StackSet {
            position: 0,
            hyps: vec![ParsePrefix::new(&model.vocab)],
        }
    }

    /// Normalized posterior weights over the surviving hypotheses.
    pub fn posteriors(&self) -> Vec<f64> {
        let lse = log_sum_exp(self.hyps.iter().map(|h| h.logprob));
        self.hyps.iter().map(|h| (h.logprob - lse).exp()).collect()
    }

    /// Highest-scoring hypothesis, ties broken by derivation signature.
    pub fn best(&self) -> Option<&ParsePrefix> {
        self.hyps.iter().min_by(|a, b| {
            b.logprob
                .total_cmp(&a.logprob)
                .then_with(|| a.sig.cmp(&b.sig))
        })
    }
}

pub fn log_sum_exp<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let v: Vec<f64> = items.into_iter().collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Language model probability of `word` given the surviving prefixes:
/// the posterior-weighted mixture of per-prefix predictor conditionals.
pub fn lm_prob(model: &SlmModel, set: &StackSet, word: WordId) -> Result<f64> {
    if set.hyps.is_empty() {
        return Err(SlmError::SearchFailure {
            position: set.position,
        });
    }
    let rho = set.posteriors();
    let mut p = 0.0;
    for (hyp, weight) in set.hyps.iter().zip(rho) {
        p += weight * model.predictor.prob(&hyp.predictor_ctx(), word);
    }
    Ok(p)
}

fn adjoin_count(position_words: usize, hyp: &ParsePrefix) -> usize {
    position_words - hyp.n_above_begin()
}

fn prune(stratum: &mut Vec<ParsePrefix>, params: &SearchParams) {
    stratum.sort_by(|a, b| {
        b.logprob
            .total_cmp(&a.logprob)
            .then_with(|| a.sig.cmp(&b.sig))
    });
    if let Some(best) = stratum.first().map(|h| h.logprob) {
        let floor = best - params.log_width;
        stratum.retain(|h| h.logprob >= floor);
    }
    stratum.truncate(params.max_entries);
}

/// Extends every hypothesis with the next word: the word is scored by the
/// predictor, every tag by the tagger, and all legal parser continuations
/// are expanded to their null closure, pruned per stratum. At the
/// sentence-end word the forced completion replaces the closure and the
/// returned set holds completed parses.
pub fn advance(
    model: &SlmModel,
    set: &StackSet,
    word: WordId,
    params: &SearchParams,
) -> Result<StackSet> {
    if set.hyps.is_empty() {
        return Err(SlmError::SearchFailure {
            position: set.position,
        });
    }
    let vocab = &model.vocab;
    let at_end = word == vocab.sent_end();
    let words_after = set.position + 1;

    // Shift stage: predictor and tagger scores. The end marker always
    // takes the reserved tag; other words branch over the full tag set.
    let mut pending: BTreeMap<usize, Vec<ParsePrefix>> = BTreeMap::new();
    for hyp in &set.hyps {
        let word_lp = model.predictor.log_prob(&hyp.predictor_ctx(), word);
        let tags: Vec<u32> = if at_end {
            vec![vocab.se_tag()]
        } else {
            (0..vocab.n_tags() as u32).collect()
        };
        for tag in tags {
            let tag_lp = model.tagger.log_prob(&hyp.tagger_ctx(word), tag);
            let mut child = hyp.clone();
            child.logprob += word_lp + tag_lp;
            child.shift_word(word, tag, vocab);
            pending
                .entry(adjoin_count(words_after, &child))
                .or_default()
                .push(child);
        }
    }

    let mut closed: BTreeMap<usize, Vec<ParsePrefix>> = BTreeMap::new();
    if at_end {
        for (_, mut stratum) in pending {
            prune(&mut stratum, params);
            for mut hyp in stratum {
                let ops = adjoin_count(words_after, &hyp);
                hyp.complete_end(vocab);
                closed.entry(ops).or_default().push(hyp);
            }
        }
    } else {
        // Null-closure expansion, stratum by stratum in increasing adjoin
        // count; every adjoin moves a hypothesis to the next stratum.
        let mut worklist = pending;
        while let Some((ops, mut stratum)) = worklist.pop_first() {
            prune(&mut stratum, params);
            for hyp in stratum {
                for action in legal_actions(&hyp, false, model.mode, vocab.n_labels()) {
                    let mut child = hyp.clone();
                    if model.mode == DerivationMode::Normal {
                        child.logprob += model.parser.log_prob(&child.parser_ctx(), action.id());
                    }
                    child.apply_action(action, vocab)?;
                    match action {
                        Action::Null => closed.entry(ops).or_default().push(child),
                        _ => worklist.entry(ops + 1).or_default().push(child),
                    }
                }
            }
        }
    }

    let mut hyps = Vec::new();
    for (_, mut stratum) in closed {
        prune(&mut stratum, params);
        hyps.append(&mut stratum);
    }
    hyps.sort_by(|a, b| {
        b.logprob
            .total_cmp(&a.logprob)
            .then_with(|| a.sig.cmp(&b.sig))
    });
    if hyps.is_empty() {
        return Err(SlmError::SearchFailure {
            position: set.position,
        });
    }
    Ok(StackSet {
        position: words_after,
        hyps,
    })
}

/// Full pass over one sentence (without markers): per-word language model
/// probabilities and the final completed stack set.
pub struct SentenceRun {
    pub final_set: StackSet,
    /// One probability per predicted token, the sentence-end included.
    pub word_probs: Vec<f64>,
}

pub fn run_sentence(
    model: &SlmModel,
    words: &[WordId],
    params: &SearchParams,
) -> Result<SentenceRun> {
    let mut set = StackSet::initial(model);
    let mut word_probs = Vec::with_capacity(words.len() + 1);
    for &w in words.iter().chain(std::iter::once(&model.vocab.sent_end())) {
        word_probs.push(lm_prob(model, &set, w)?);
        set = advance(model, &set, w, params)?;
    }
    Ok(SentenceRun {
        final_set: set,
        word_probs,
    })
}

/// Highest-probability completed parse of a sentence.
pub fn best_parse(
    model: &SlmModel,
    words: &[WordId],
    params: &SearchParams,
) -> Result<(Arc<TreeNode>, f64)> {
    let run = run_sentence(model, words, params)?;
    let best = run.final_set.best().expect("final set nonempty");
    Ok((
        best.root().expect("completed hypothesis").clone(),
        best.logprob,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DerivationMode;
    use crate::vocab::Vocabulary;

    fn toy_model() -> SlmModel {
        let v = Vocabulary::new(&["a", "b"], &["T"], &["X", "Y"]).unwrap();
        SlmModel::empty(v, DerivationMode::Normal)
    }

    #[test]
    fn advance_with_max_entries_one_keeps_one_per_stack() {
        let model = toy_model();
        let params = SearchParams {
            max_entries: 1,
            log_width: f64::INFINITY,
        };
        let a = model.vocab.word_id("a");
        let mut set = StackSet::initial(&model);
        for _ in 0..3 {
            set = advance(&model, &set, a, &params).unwrap();
            let mut per_stratum = std::collections::HashMap::new();
            for h in &set.hyps {
                *per_stratum
                    .entry(set.position - h.n_above_begin())
                    .or_insert(0usize) += 1;
            }
            assert!(per_stratum.values().all(|&c| c <= 1));
        }
    }

    #[test]
    fn children_never_outscore_parents() {
        let model = toy_model();
        let params = SearchParams::exhaustive();
        let a = model.vocab.word_id("a");
        let set0 = StackSet::initial(&model);
        let set1 = advance(&model, &set0, a, &params).unwrap();
        let best0 = 0.0;
        assert!(set1.hyps.iter().all(|h| h.logprob <= best0));
        let set2 = advance(&model, &set1, a, &params).unwrap();
        let best1 = set1.hyps[0].logprob;
        assert!(set2.hyps.iter().all(|h| h.logprob <= best1 + 1e-12));
    }

    #[test]
    fn posteriors_sum_to_one() {
        let model = toy_model();
        let params = SearchParams::exhaustive();
        let a = model.vocab.word_id("a");
        let b = model.vocab.word_id("b");
        let mut set = StackSet::initial(&model);
        for &w in &[a, b, a] {
            set = advance(&model, &set, w, &params).unwrap();
            let sum: f64 = set.posteriors().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lm_prob_sums_to_one_over_vocabulary() {
        let model = toy_model();
        let params = SearchParams::exhaustive();
        let a = model.vocab.word_id("a");
        let mut set = StackSet::initial(&model);
        for _ in 0..3 {
            let total: f64 = (0..model.vocab.n_words() as u32)
                .map(|w| lm_prob(&model, &set, w).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-9);
            set = advance(&model, &set, a, &params).unwrap();
        }
    }

    #[test]
    fn equiprobable_hypotheses_average_their_conditionals() {
        let model = toy_model();
        let params = SearchParams::exhaustive();
        let a = model.vocab.word_id("a");
        let b = model.vocab.word_id("b");
        let mut set = StackSet::initial(&model);
        for &w in &[a, b] {
            set = advance(&model, &set, w, &params).unwrap();
        }
        // Pick two equal-scoring hypotheses and check the mixture of just
        // those two is the plain average of their predictor conditionals.
        let (h0, twin) = set
            .hyps
            .iter()
            .enumerate()
            .find_map(|(i, h)| {
                set.hyps[i + 1..]
                    .iter()
                    .find(|other| other.logprob == h.logprob)
                    .map(|other| (h, other))
            })
            .expect("uniform model produces score ties");
        let pair = StackSet {
            position: set.position,
            hyps: vec![h0.clone(), twin.clone()],
        };
        let p = model.predictor.prob(&h0.predictor_ctx(), a);
        let q = model.predictor.prob(&twin.predictor_ctx(), a);
        let got = lm_prob(&model, &pair, a).unwrap();
        assert!((got - 0.5 * (p + q)).abs() < 1e-12);
    }

    #[test]
    fn singleton_set_collapses_to_predictor() {
        let model = toy_model();
        let set = StackSet::initial(&model);
        let a = model.vocab.word_id("a");
        let direct = model.predictor.prob(&set.hyps[0].predictor_ctx(), a);
        assert!((lm_prob(&model, &set, a).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn one_word_sentence_has_unique_parse() {
        let model = toy_model();
        let words = vec![model.vocab.word_id("a")];
        let run = run_sentence(&model, &words, &SearchParams::exhaustive()).unwrap();
        assert_eq!(run.final_set.hyps.len(), 1);
        let (tree, _) = best_parse(&model, &words, &SearchParams::exhaustive()).unwrap();
        assert_eq!(
            tree.yield_words(),
            vec![model.vocab.word_id("a"), model.vocab.sent_end()]
        );
    }

    #[test]
    fn widening_beam_never_hurts_best_parse() {
        let model = toy_model();
        let words = vec![
            model.vocab.word_id("a"),
            model.vocab.word_id("b"),
            model.vocab.word_id("a"),
        ];
        let mut prev = f64::NEG_INFINITY;
        for entries in [1usize, 2, 4, 64] {
            let params = SearchParams {
                max_entries: entries,
                log_width: f64::INFINITY,
            };
            let (_, lp) = best_parse(&model, &words, &params).unwrap();
            assert!(lp >= prev - 1e-12);
            prev = lp;
        }
    }

    #[test]
    fn tie_break_is_deterministic() {
        let model = toy_model();
        let words = vec![model.vocab.word_id("a"), model.vocab.word_id("a")];
        let (t1, lp1) = best_parse(&model, &words, &SearchParams::exhaustive()).unwrap();
        let (t2, lp2) = best_parse(&model, &words, &SearchParams::exhaustive()).unwrap();
        assert_eq!(lp1, lp2);
        assert_eq!(t1.as_ref(), t2.as_ref());
        // Uniform model scores every two-word parse equally at the top
        // stratum boundary; the winner must be the signature minimum among
        // equals.
        let run = run_sentence(&model, &words, &SearchParams::exhaustive()).unwrap();
        let best = run.final_set.best().unwrap();
        for h in &run.final_set.hyps {
            if (h.logprob - best.logprob).abs() < 1e-15 {
                assert!(best.sig <= h.sig);
            }
        }
    }

    #[test]
    fn degenerate_mode_keeps_single_hypothesis() {
        let v = Vocabulary::new(&["a", "b"], &["T"], &["X"]).unwrap();
        let model = SlmModel::empty(v, DerivationMode::RightBranching);
        let words = vec![model.vocab.word_id("a"), model.vocab.word_id("b")];
        let run = run_sentence(&model, &words, &SearchParams::default()).unwrap();
        assert_eq!(run.final_set.hyps.len(), 1);
        // Null-only prefixes expose the previous two words, so the
        // degenerate LM prediction is the raw trigram conditional.
        let p: f64 = run.word_probs.iter().product();
        assert!(p > 0.0);
    }
}
