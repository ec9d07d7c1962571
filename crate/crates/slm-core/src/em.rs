//! N-best EM reestimation of the three components on word-level text.
//!
//! The E-step searches each sentence, keeps the top completed parses, and
//! spreads their posterior weight over every derivation event as
//! fractional counts. The M-step rebuilds relative frequencies from those
//! counts and re-estimates interpolation weights on the check portion.

use rayon::prelude::*;

use crate::error::Result;
use crate::estimation::{split_sides, EstimationOptions, GatheredCounts, SplitSide};
use crate::model::{SlmEvent, SlmModel};
use crate::search::{log_sum_exp, run_sentence, SearchParams};
use crate::vocab::WordId;

#[derive(Debug, Clone, Copy)]
pub struct EmOptions {
    /// Hypothesis budget per sentence (the N in N-best EM).
    pub nbest: usize,
    pub search: SearchParams,
    pub estimation: EstimationOptions,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            nbest: 10,
            search: SearchParams::default(),
            estimation: EstimationOptions::default(),
        }
    }
}

/// Surviving parses of one sentence, as per-derivation event streams.
#[derive(Debug, Clone)]
pub struct SentenceSupport {
    pub side: SplitSide,
    pub n_predicted: usize,
    pub derivations: Vec<Vec<SlmEvent>>,
}

#[derive(Debug)]
pub struct EStep {
    pub counts: GatheredCounts,
    /// Sum over sentences of ln sum over surviving parses of P(W, T).
    pub log_likelihood: f64,
    /// Prequential language model perplexity of the training text under
    /// the current model, from the same search pass.
    pub train_ppl: f64,
    pub skipped: usize,
    pub supports: Vec<SentenceSupport>,
}

struct SentencePass {
    side: SplitSide,
    support: Vec<(Vec<SlmEvent>, f64)>,
    sentence_ll: f64,
    preq_lp: f64,
    n_predicted: usize,
    failed: bool,
}

fn pass_sentence(
    model: &SlmModel,
    words: &[WordId],
    side: SplitSide,
    opts: &EmOptions,
) -> SentencePass {
    let failed = SentencePass {
        side,
        support: Vec::new(),
        sentence_ll: 0.0,
        preq_lp: 0.0,
        n_predicted: 0,
        failed: true,
    };
    let run = match run_sentence(model, words, &opts.search) {
        Ok(run) => run,
        Err(_) => return failed,
    };
    let mut full: Vec<WordId> = words.to_vec();
    full.push(model.vocab.sent_end());
    let kept = run.final_set.hyps.iter().take(opts.nbest);
    let mut events = Vec::new();
    let mut lps = Vec::new();
    for hyp in kept {
        let derivation = hyp.decode_derivation(&full);
        match crate::derivation::derivation_events(&derivation, &model.vocab, model.mode) {
            Ok(ev) => {
                events.push(ev);
                lps.push(hyp.logprob);
            }
            Err(_) => return failed,
        }
    }
    if events.is_empty() {
        return failed;
    }
    let lse = log_sum_exp(lps.iter().copied());
    let support: Vec<(Vec<SlmEvent>, f64)> = events
        .into_iter()
        .zip(&lps)
        .map(|(ev, &lp)| (ev, (lp - lse).exp()))
        .collect();
    let preq_lp: f64 = run.word_probs.iter().map(|p| p.ln()).sum();
    SentencePass {
        side,
        support,
        sentence_ll: lse,
        preq_lp,
        n_predicted: run.word_probs.len(),
        failed: false,
    }
}

/// One E-step over the corpus. Sentences whose search fails are skipped
/// and counted.
pub fn e_step(model: &SlmModel, sentences: &[Vec<WordId>], opts: &EmOptions) -> Result<EStep> {
    let sides = split_sides(sentences.len(), opts.estimation.split_seed);
    let passes: Vec<SentencePass> = sentences
        .par_iter()
        .zip(&sides)
        .map(|(words, &side)| pass_sentence(model, words, side, opts))
        .collect();

    let mut counts = GatheredCounts::new(&model.vocab);
    let mut ll = 0.0;
    let mut preq = 0.0;
    let mut tokens = 0usize;
    let mut skipped = 0usize;
    let mut supports = Vec::with_capacity(passes.len());
    for pass in passes {
        if pass.failed {
            skipped += 1;
            continue;
        }
        for (events, rho) in &pass.support {
            counts.add_events(events, *rho, pass.side);
        }
        ll += pass.sentence_ll;
        preq += pass.preq_lp;
        tokens += pass.n_predicted;
        supports.push(SentenceSupport {
            side: pass.side,
            n_predicted: pass.n_predicted,
            derivations: pass.support.into_iter().map(|(ev, _)| ev).collect(),
        });
    }
    let train_ppl = if tokens == 0 {
        f64::NAN
    } else {
        (-preq / tokens as f64).exp()
    };
    Ok(EStep {
        counts,
        log_likelihood: ll,
        train_ppl,
        skipped,
        supports,
    })
}

/// Rebuilds the model from fractional counts, keeping vocabulary, mode,
/// and the embedded trigram.
pub fn m_step(counts: GatheredCounts, previous: &SlmModel, opts: &EstimationOptions) -> SlmModel {
    let (mut model, _) = counts.build(
        previous.vocab.clone(),
        previous.mode,
        previous.iteration + 1,
        opts,
    );
    model.trigram = previous.trigram.clone();
    model
}

/// Log-likelihood of retained supports under a (possibly newer) model.
pub fn support_log_likelihood(model: &SlmModel, supports: &[SentenceSupport]) -> f64 {
    supports
        .par_iter()
        .map(|s| {
            if s.derivations.is_empty() {
                return 0.0;
            }
            log_sum_exp(
                s.derivations
                    .iter()
                    .map(|events| events.iter().map(|e| model.event_logprob(e)).sum::<f64>()),
            )
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct IterationMetrics {
    pub iteration: u32,
    pub train_ppl: f64,
    pub support_ll: f64,
    /// Likelihood of the previous iteration's support under this model.
    pub frozen_ll: Option<f64>,
    pub skipped: usize,
    pub predictor_params: usize,
    pub tagger_params: usize,
    pub parser_params: usize,
}

#[derive(Debug)]
pub struct TrainRun {
    pub model: SlmModel,
    pub metrics: Vec<IterationMetrics>,
}

/// Live N-best EM: each iteration re-searches the corpus, re-estimates
/// from fractional counts, and records training perplexity. The metrics
/// include one final row for the model after the last iteration.
pub fn train(
    model: &SlmModel,
    sentences: &[Vec<WordId>],
    iterations: u32,
    opts: &EmOptions,
) -> Result<TrainRun> {
    let mut current = model.clone();
    let mut metrics = Vec::with_capacity(iterations as usize + 1);
    let mut prev_supports: Option<Vec<SentenceSupport>> = None;
    for i in 0..=iterations {
        let step = e_step(&current, sentences, opts)?;
        metrics.push(IterationMetrics {
            iteration: i,
            train_ppl: step.train_ppl,
            support_ll: step.log_likelihood,
            frozen_ll: prev_supports
                .as_ref()
                .map(|s| support_log_likelihood(&current, s)),
            skipped: step.skipped,
            predictor_params: current.predictor.count_parameters(),
            tagger_params: current.tagger.count_parameters(),
            parser_params: current.parser.count_parameters(),
        });
        if i == iterations {
            break;
        }
        prev_supports = Some(step.supports);
        current = m_step(step.counts, &current, &opts.estimation);
    }
    Ok(TrainRun {
        model: current,
        metrics,
    })
}

/// EM on a frozen hypothesis support: the N-best set is collected once and
/// every iteration reweights the same derivations. The model family is
/// frozen with the support (fixed bucket assignment per context), the
/// back-off level acts as a latent variable next to the parse, and the
/// M-step reweights level tables and bucket weights from the joint
/// responsibilities. This is exact EM, so the returned support
/// log-likelihood trace (one entry per iteration plus a final one) is
/// non-decreasing up to rounding.
pub fn train_frozen(
    model: &SlmModel,
    sentences: &[Vec<WordId>],
    iterations: u32,
    opts: &EmOptions,
) -> Result<Vec<f64>> {
    let initial = e_step(model, sentences, opts)?;
    let supports = initial.supports;
    let mut frozen = FrozenSlm::from_model(model, &supports);
    let mut trace = Vec::with_capacity(iterations as usize + 1);
    for _ in 0..iterations {
        trace.push(frozen.support_ll(&supports));
        frozen.em_iteration(&supports);
    }
    trace.push(frozen.support_ll(&supports));
    Ok(trace)
}

/// A deleted-interpolation component with a frozen bucket map and
/// independently parameterized per-level tables.
struct FrozenComponent {
    schema: Vec<usize>,
    outcomes: usize,
    buckets: std::collections::HashMap<u64, usize>,
    /// Per level: (packed context, outcome) -> mass and context totals.
    events: Vec<std::collections::HashMap<(u64, u32), f64>>,
    totals: Vec<std::collections::HashMap<u64, f64>>,
    weights: Vec<Vec<f64>>,
}

impl FrozenComponent {
    fn from_component(c: &crate::component::ComponentModel) -> FrozenComponent {
        let schema = c.schema().to_vec();
        let n_levels = schema.len();
        let mut events = vec![std::collections::HashMap::new(); n_levels];
        let mut totals = vec![std::collections::HashMap::new(); n_levels];
        // Seed per-level tables from the aggregate count tables.
        for (packed, outcome, mass) in c.counts().sorted_top_events() {
            let mut fields = [0u32; 4];
            for (i, f) in fields.iter_mut().enumerate().take(schema[0]) {
                *f = ((packed >> (16 * i)) & 0xFFFF) as u32;
            }
            for (level, &arity) in schema.iter().enumerate() {
                let key = crate::component::pack_ctx(&fields[..arity]);
                *events[level].entry((key, outcome)).or_insert(0.0) += mass;
                *totals[level].entry(key).or_insert(0.0) += mass;
            }
        }
        FrozenComponent {
            schema,
            outcomes: c.outcomes(),
            buckets: std::collections::HashMap::new(),
            events,
            totals,
            weights: c.weights().to_vec(),
        }
    }

    fn freeze_bucket(&mut self, ctx: &[u32], source: &crate::component::ComponentModel) {
        let key = crate::component::pack_ctx(&ctx[..self.schema[0]]);
        let count = source.counts().context_count(ctx);
        self.buckets
            .entry(key)
            .or_insert_with(|| crate::component::bucket_of(count));
    }

    fn level_prob(&self, level: usize, ctx: &[u32], outcome: u32) -> f64 {
        let key = crate::component::pack_ctx(&ctx[..self.schema[level]]);
        match self.totals[level].get(&key) {
            Some(&total) if total > 0.0 => {
                self.events[level]
                    .get(&(key, outcome))
                    .copied()
                    .unwrap_or(0.0)
                    / total
            }
            _ => 1.0 / self.outcomes as f64,
        }
    }

    fn bucket(&self, ctx: &[u32]) -> usize {
        let key = crate::component::pack_ctx(&ctx[..self.schema[0]]);
        self.buckets.get(&key).copied().unwrap_or(0)
    }

    fn prob(&self, ctx: &[u32], outcome: u32) -> f64 {
        let w = &self.weights[self.bucket(ctx)];
        let mut p = 0.0;
        for level in 0..self.schema.len() {
            if w[level] > 0.0 {
                p += w[level] * self.level_prob(level, ctx, outcome);
            }
        }
        p + w[self.schema.len()] / self.outcomes as f64
    }

    /// Level responsibilities for one event under the current parameters.
    fn responsibilities(&self, ctx: &[u32], outcome: u32) -> (usize, Vec<f64>) {
        let bucket = self.bucket(ctx);
        let w = &self.weights[bucket];
        let n_levels = self.schema.len();
        let mut gamma = Vec::with_capacity(n_levels + 1);
        for level in 0..n_levels {
            gamma.push(w[level] * self.level_prob(level, ctx, outcome));
        }
        gamma.push(w[n_levels] / self.outcomes as f64);
        let z: f64 = gamma.iter().sum();
        for g in &mut gamma {
            *g /= z;
        }
        (bucket, gamma)
    }
}

struct FrozenAccumulator {
    events: Vec<std::collections::HashMap<(u64, u32), f64>>,
    totals: Vec<std::collections::HashMap<u64, f64>>,
    weight_mass: Vec<Vec<f64>>,
}

impl FrozenAccumulator {
    fn new(n_levels: usize) -> FrozenAccumulator {
        FrozenAccumulator {
            events: vec![std::collections::HashMap::new(); n_levels],
            totals: vec![std::collections::HashMap::new(); n_levels],
            weight_mass: vec![vec![0.0; n_levels + 1]; crate::component::N_BUCKETS],
        }
    }

    fn add(&mut self, component: &FrozenComponent, ctx: &[u32], outcome: u32, mass: f64) {
        let (bucket, gamma) = component.responsibilities(ctx, outcome);
        for (level, &arity) in component.schema.iter().enumerate() {
            let g = mass * gamma[level];
            if g > 0.0 {
                let key = crate::component::pack_ctx(&ctx[..arity]);
                *self.events[level].entry((key, outcome)).or_insert(0.0) += g;
                *self.totals[level].entry(key).or_insert(0.0) += g;
            }
        }
        for (level, &g) in gamma.iter().enumerate() {
            self.weight_mass[bucket][level] += mass * g;
        }
    }

    fn apply(self, component: &mut FrozenComponent) {
        component.events = self.events;
        component.totals = self.totals;
        for (bucket, mass) in self.weight_mass.into_iter().enumerate() {
            let z: f64 = mass.iter().sum();
            if z > 0.0 {
                component.weights[bucket] = mass.into_iter().map(|m| m / z).collect();
            }
        }
    }
}

struct FrozenSlm {
    predictor: FrozenComponent,
    tagger: FrozenComponent,
    parser: FrozenComponent,
}

impl FrozenSlm {
    fn from_model(model: &SlmModel, supports: &[SentenceSupport]) -> FrozenSlm {
        let mut slm = FrozenSlm {
            predictor: FrozenComponent::from_component(&model.predictor),
            tagger: FrozenComponent::from_component(&model.tagger),
            parser: FrozenComponent::from_component(&model.parser),
        };
        for s in supports {
            for events in &s.derivations {
                for e in events {
                    match e {
                        SlmEvent::Predict { ctx, .. } => {
                            slm.predictor.freeze_bucket(ctx, &model.predictor)
                        }
                        SlmEvent::Tag { ctx, .. } => slm.tagger.freeze_bucket(ctx, &model.tagger),
                        SlmEvent::Parse { ctx, .. } => slm.parser.freeze_bucket(ctx, &model.parser),
                    }
                }
            }
        }
        slm
    }

    fn event_logprob(&self, e: &SlmEvent) -> f64 {
        match e {
            SlmEvent::Predict { ctx, word } => self.predictor.prob(ctx, *word).ln(),
            SlmEvent::Tag { ctx, tag } => self.tagger.prob(ctx, *tag).ln(),
            SlmEvent::Parse { ctx, action } => self.parser.prob(ctx, action.id()).ln(),
        }
    }

    fn support_ll(&self, supports: &[SentenceSupport]) -> f64 {
        supports
            .iter()
            .filter(|s| !s.derivations.is_empty())
            .map(|s| {
                log_sum_exp(
                    s.derivations
                        .iter()
                        .map(|events| events.iter().map(|e| self.event_logprob(e)).sum::<f64>()),
                )
            })
            .sum()
    }

    fn em_iteration(&mut self, supports: &[SentenceSupport]) {
        let mut acc_p = FrozenAccumulator::new(self.predictor.schema.len());
        let mut acc_t = FrozenAccumulator::new(self.tagger.schema.len());
        let mut acc_a = FrozenAccumulator::new(self.parser.schema.len());
        for s in supports {
            if s.derivations.is_empty() {
                continue;
            }
            let lps: Vec<f64> = s
                .derivations
                .iter()
                .map(|events| events.iter().map(|e| self.event_logprob(e)).sum())
                .collect();
            let lse = log_sum_exp(lps.iter().copied());
            for (events, lp) in s.derivations.iter().zip(&lps) {
                let rho = (lp - lse).exp();
                for e in events {
                    match e {
                        SlmEvent::Predict { ctx, word } => {
                            acc_p.add(&self.predictor, ctx, *word, rho)
                        }
                        SlmEvent::Tag { ctx, tag } => acc_t.add(&self.tagger, ctx, *tag, rho),
                        SlmEvent::Parse { ctx, action } => {
                            acc_a.add(&self.parser, ctx, action.id(), rho)
                        }
                    }
                }
            }
        }
        acc_p.apply(&mut self.predictor);
        acc_t.apply(&mut self.tagger);
        acc_a.apply(&mut self.parser);
    }
}
