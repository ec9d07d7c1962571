//! Deleted-interpolation trigram baseline and interpolation with the
//! structured model.

use crate::component::ComponentModel;
use crate::error::{Result, SlmError};
use crate::estimation::{split_sides, CountSplit, EstimationOptions};
use crate::model::SlmModel;
use crate::search::{run_sentence, SearchParams};
use crate::vocab::{Vocabulary, WordId};

pub fn trigram_schema() -> Vec<usize> {
    vec![2, 1, 0]
}

/// Trigram events of one sentence: context is (previous word, the word
/// before that), padded with the begin marker; the end marker is predicted.
pub fn trigram_events(words: &[WordId], vocab: &Vocabulary) -> Vec<([u32; 2], WordId)> {
    let mut events = Vec::with_capacity(words.len() + 1);
    let mut prev1 = vocab.sent_begin();
    let mut prev2 = vocab.sent_begin();
    for &w in words.iter().chain(std::iter::once(&vocab.sent_end())) {
        events.push(([prev1, prev2], w));
        prev2 = prev1;
        prev1 = w;
    }
    events
}

/// Trains the deleted-interpolation trigram with the same main/check split
/// and weight estimation machinery as the structured components.
pub fn train_trigram(
    sentences: &[Vec<WordId>],
    vocab: &Vocabulary,
    opts: &EstimationOptions,
) -> ComponentModel {
    let sides = split_sides(sentences.len(), opts.split_seed);
    let mut split = CountSplit::new(trigram_schema(), vocab.n_words());
    for (sentence, &side) in sentences.iter().zip(&sides) {
        for (ctx, w) in trigram_events(sentence, vocab) {
            split.add(&ctx, w, 1.0, side);
        }
    }
    let (model, _) = split.build(opts);
    model
}

/// Anything that can assign per-token probabilities to a mapped sentence.
/// The sentence-end token is scored; the begin marker is not predicted.
pub trait SentenceScorer {
    fn vocab(&self) -> &Vocabulary;
    fn word_probs(&self, words: &[WordId]) -> Result<Vec<f64>>;
}

pub struct TrigramLm<'a> {
    pub vocab: &'a Vocabulary,
    pub model: &'a ComponentModel,
}

impl SentenceScorer for TrigramLm<'_> {
    fn vocab(&self) -> &Vocabulary {
        self.vocab
    }

    fn word_probs(&self, words: &[WordId]) -> Result<Vec<f64>> {
        Ok(trigram_events(words, self.vocab)
            .into_iter()
            .map(|(ctx, w)| self.model.prob(&ctx, w))
            .collect())
    }
}

pub struct SlmLm<'a> {
    pub model: &'a SlmModel,
    pub params: SearchParams,
}

impl SentenceScorer for SlmLm<'_> {
    fn vocab(&self) -> &Vocabulary {
        &self.model.vocab
    }

    fn word_probs(&self, words: &[WordId]) -> Result<Vec<f64>> {
        Ok(run_sentence(self.model, words, &self.params)?.word_probs)
    }
}

/// Pointwise mixture of the two language models.
pub fn interp_point(lambda: f64, p_trigram: f64, p_slm: f64) -> f64 {
    lambda * p_trigram + (1.0 - lambda) * p_slm
}

/// The lambda-weighted combination of the trigram and the structured
/// model. At lambda one the structured model is never evaluated; at
/// lambda zero the trigram is not.
pub struct InterpolatedLm<'a> {
    pub lambda: f64,
    pub trigram: &'a ComponentModel,
    pub slm: &'a SlmModel,
    pub params: SearchParams,
}

impl<'a> InterpolatedLm<'a> {
    pub fn new(
        lambda: f64,
        trigram: &'a ComponentModel,
        slm: &'a SlmModel,
        params: SearchParams,
    ) -> Result<InterpolatedLm<'a>> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(SlmError::Format(format!("lambda {lambda} outside [0, 1]")));
        }
        if trigram.outcomes() != slm.vocab.n_words() {
            return Err(SlmError::Vocab(
                "trigram and structured model vocabularies differ".into(),
            ));
        }
        Ok(InterpolatedLm {
            lambda,
            trigram,
            slm,
            params,
        })
    }
}

impl SentenceScorer for InterpolatedLm<'_> {
    fn vocab(&self) -> &Vocabulary {
        &self.slm.vocab
    }

    fn word_probs(&self, words: &[WordId]) -> Result<Vec<f64>> {
        let tri = TrigramLm {
            vocab: &self.slm.vocab,
            model: self.trigram,
        };
        if self.lambda >= 1.0 {
            return tri.word_probs(words);
        }
        let slm = SlmLm {
            model: self.slm,
            params: self.params,
        };
        if self.lambda <= 0.0 {
            return slm.word_probs(words);
        }
        let p3 = tri.word_probs(words)?;
        let ps = slm.word_probs(words)?;
        Ok(p3
            .into_iter()
            .zip(ps)
            .map(|(a, b)| interp_point(self.lambda, a, b))
            .collect())
    }
}

/// Interpolated perplexities at several lambda values from a single
/// scoring pass: both sub-models score the corpus once and every mixture
/// is derived from the cached probability streams.
pub fn interpolated_ppl_curve(
    trigram: &ComponentModel,
    slm: &SlmModel,
    params: SearchParams,
    sentences: &[Vec<WordId>],
    lambdas: &[f64],
) -> Result<Vec<f64>> {
    let tri = TrigramLm {
        vocab: &slm.vocab,
        model: trigram,
    };
    let slm_lm = SlmLm { model: slm, params };
    let mut p3 = Vec::with_capacity(sentences.len());
    let mut ps = Vec::with_capacity(sentences.len());
    let mut tokens = 0usize;
    for s in sentences {
        let a = tri.word_probs(s)?;
        let b = slm_lm.word_probs(s)?;
        tokens += a.len();
        p3.push(a);
        ps.push(b);
    }
    if tokens == 0 {
        return Err(SlmError::Format("no tokens to evaluate".into()));
    }
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(SlmError::Format(format!("lambda {lambda} outside [0, 1]")));
        }
        let mut lp = 0.0;
        for (a, b) in p3.iter().zip(&ps) {
            for (&x, &y) in a.iter().zip(b) {
                lp += interp_point(lambda, x, y).ln();
            }
        }
        out.push((-lp / tokens as f64).exp());
    }
    Ok(out)
}

/// Grid search for the interpolation weight minimizing held-out
/// perplexity; ties resolve to the smaller lambda.
pub fn tune_lambda(
    trigram: &ComponentModel,
    slm: &SlmModel,
    params: SearchParams,
    sentences: &[Vec<WordId>],
    grid: &[f64],
) -> Result<f64> {
    assert!(!grid.is_empty());
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ppls = interpolated_ppl_curve(trigram, slm, params, sentences, &sorted)?;
    let evals: Vec<(f64, f64)> = sorted.into_iter().zip(ppls).collect();
    Ok(select_lambda(&evals))
}

/// Argmin over (lambda, perplexity) pairs sorted by lambda; exact ties go
/// to the smaller lambda.
pub fn select_lambda(evals: &[(f64, f64)]) -> f64 {
    let mut best = (evals[0].1, evals[0].0);
    for &(lambda, ppl) in &evals[1..] {
        if ppl < best.0 {
            best = (ppl, lambda);
        }
    }
    best.1
}
