//! Component initialization from binarized trees: derivation extraction,
//! main/check count splitting, and interpolation-weight estimation.

use std::sync::Arc;

use rayon::prelude::*;

use crate::component::{
    estimate_weights, CheckEvent, ComponentModel, CountTables, WeightEmOptions,
};
use crate::derivation::{derivation_events, tree_to_derivation, DerivStep, Derivation};
use crate::error::Result;
use crate::model::{
    parser_outcomes, parser_schema, predictor_schema, tagger_schema, DerivationMode, SlmEvent,
    SlmModel,
};
use crate::tree::TreeNode;
use crate::vocab::{Vocabulary, WordId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSide {
    Main,
    Check,
}

/// Deterministic sentence-level split: a seeded shuffle sends about 10% of
/// the sentences to the check side, with the size fixed by the corpus
/// length rather than left to per-sentence chance.
pub fn split_sides(n: usize, seed: u64) -> Vec<SplitSide> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_check = if n >= 2 {
        ((n as f64 * 0.1).round() as usize).clamp(1, n - 1)
    } else {
        0
    };
    let mut sides = vec![SplitSide::Main; n];
    for &i in order.iter().take(n_check) {
        sides[i] = SplitSide::Check;
    }
    sides
}

/// Estimation knobs shared by initialization, the trigram baseline, and
/// the EM reestimation loop.
#[derive(Debug, Clone, Copy)]
pub struct EstimationOptions {
    pub split_seed: u64,
    pub weight_em: WeightEmOptions,
    /// Pool check counts into the final tables once weights are fixed.
    pub pool_check: bool,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        EstimationOptions {
            split_seed: 42,
            weight_em: WeightEmOptions::default(),
            pool_check: true,
        }
    }
}

impl EstimationOptions {
    pub fn with_seed(seed: u64) -> Self {
        EstimationOptions {
            split_seed: seed,
            ..Default::default()
        }
    }
}

/// Event counts split into main tables and held-out check events.
#[derive(Debug, Clone)]
pub struct CountSplit {
    pub main: CountTables,
    pub check: Vec<CheckEvent>,
}

impl CountSplit {
    pub fn new(schema: Vec<usize>, outcomes: usize) -> CountSplit {
        CountSplit {
            main: CountTables::new(schema, outcomes),
            check: Vec::new(),
        }
    }

    pub fn add(&mut self, ctx: &[u32], outcome: u32, mass: f64, side: SplitSide) {
        match side {
            SplitSide::Main => self.main.add(ctx, outcome, mass),
            SplitSide::Check => self.check.push(CheckEvent {
                ctx: ctx.to_vec(),
                outcome,
                mass,
            }),
        }
    }

    pub fn total_events(&self) -> usize {
        self.main.distinct_events()
    }

    /// Estimates bucket weights on the check side, optionally pools the
    /// check counts into the tables, and seals the component.
    pub fn build(mut self, opts: &EstimationOptions) -> (ComponentModel, bool) {
        let estimate = estimate_weights(&self.main, &self.check, opts.weight_em);
        if opts.pool_check {
            for ev in &self.check {
                self.main.add(&ev.ctx, ev.outcome, ev.mass);
            }
        }
        (
            ComponentModel::new(self.main, estimate.weights),
            estimate.fallback_uniform,
        )
    }
}

/// Per-component count splits for the three conditional models.
#[derive(Debug, Clone)]
pub struct GatheredCounts {
    pub predictor: CountSplit,
    pub tagger: CountSplit,
    pub parser: CountSplit,
}

impl GatheredCounts {
    pub fn new(vocab: &Vocabulary) -> GatheredCounts {
        GatheredCounts {
            predictor: CountSplit::new(predictor_schema(), vocab.n_words()),
            tagger: CountSplit::new(tagger_schema(), vocab.n_tags()),
            parser: CountSplit::new(parser_schema(), parser_outcomes(vocab.n_labels())),
        }
    }

    pub fn add_events(&mut self, events: &[SlmEvent], mass: f64, side: SplitSide) {
        for ev in events {
            match ev {
                SlmEvent::Predict { ctx, word } => self.predictor.add(ctx, *word, mass, side),
                SlmEvent::Tag { ctx, tag } => self.tagger.add(ctx, *tag, mass, side),
                SlmEvent::Parse { ctx, action } => self.parser.add(ctx, action.id(), mass, side),
            }
        }
    }

    pub fn build(
        self,
        vocab: Vocabulary,
        mode: DerivationMode,
        iteration: u32,
        opts: &EstimationOptions,
    ) -> (SlmModel, bool) {
        let (predictor, f1) = self.predictor.build(opts);
        let (tagger, f2) = self.tagger.build(opts);
        let (parser, f3) = self.parser.build(opts);
        (
            SlmModel {
                vocab,
                predictor,
                tagger,
                parser,
                trigram: None,
                mode,
                iteration,
            },
            f1 || f2 || f3,
        )
    }
}

/// Gathers hard counts from tree derivations with an explicit sentence
/// split. Event extraction runs in parallel; accumulation is sequential in
/// corpus order so results do not depend on scheduling.
pub fn gather_counts(
    derivations: &[Derivation],
    vocab: &Vocabulary,
    mode: DerivationMode,
    sides: &[SplitSide],
) -> Result<GatheredCounts> {
    assert_eq!(derivations.len(), sides.len());
    let per_sentence: Vec<Result<Vec<SlmEvent>>> = derivations
        .par_iter()
        .map(|d| derivation_events(d, vocab, mode))
        .collect();
    let mut counts = GatheredCounts::new(vocab);
    for (events, &side) in per_sentence.into_iter().zip(sides) {
        counts.add_events(&events?, 1.0, side);
    }
    Ok(counts)
}

/// The forced right-branching derivation used by the degenerate mode: all
/// words tagged with tag zero, no scored parser decisions.
pub fn degenerate_derivation(words: &[WordId], vocab: &Vocabulary) -> Derivation {
    let mut steps: Vec<DerivStep> = words
        .iter()
        .map(|&w| DerivStep {
            word: w,
            tag: 0,
            adjoins: Vec::new(),
        })
        .collect();
    steps.push(DerivStep {
        word: vocab.sent_end(),
        tag: vocab.se_tag(),
        adjoins: Vec::new(),
    });
    Derivation { steps }
}

/// Full ingestion pipeline: strip annotations, percolate headwords,
/// binarize, collect tag/label alphabets, and map onto the given word
/// list (out-of-vocabulary words become the unknown marker).
pub fn ingest_treebank(
    trees: &[crate::bracketed::BracketedTree],
    rules: &crate::headrules::HeadRules,
    words: &[String],
) -> Result<(Vocabulary, Vec<Arc<TreeNode>>)> {
    let binarized: Vec<crate::binarize::BinTree> = trees
        .iter()
        .filter_map(crate::bracketed::strip_annotations)
        .map(|t| crate::binarize::binarize(&crate::headrules::percolate_headwords(&t, rules)))
        .collect();
    if binarized.is_empty() {
        return Err(crate::error::SlmError::Format(
            "treebank is empty after trace stripping".into(),
        ));
    }
    let (tags, labels) = crate::binarize::collect_symbols(&binarized);
    let vocab = Vocabulary::new(words, &tags, &labels)?;
    let indexed: Vec<Arc<TreeNode>> = binarized
        .iter()
        .map(|t| crate::binarize::index_tree(t, &vocab))
        .collect::<Result<_>>()?;
    Ok((vocab, indexed))
}

/// Initializes the full model from binarized parse trees.
pub fn initialize(
    trees: &[Arc<TreeNode>],
    vocab: Vocabulary,
    opts: &EstimationOptions,
) -> Result<SlmModel> {
    let derivations: Vec<Derivation> = trees
        .par_iter()
        .map(|t| tree_to_derivation(t, &vocab))
        .collect::<Result<_>>()?;
    let sides = split_sides(derivations.len(), opts.split_seed);
    let counts = gather_counts(&derivations, &vocab, DerivationMode::Normal, &sides)?;
    let (model, _) = counts.build(vocab, DerivationMode::Normal, 0, opts);
    Ok(model)
}

/// Initializes a degenerate (trigram-equivalent) model from plain word
/// sequences via forced right-branching derivations.
pub fn initialize_degenerate(
    sentences: &[Vec<WordId>],
    vocab: Vocabulary,
    opts: &EstimationOptions,
) -> Result<SlmModel> {
    let derivations: Vec<Derivation> = sentences
        .iter()
        .map(|s| degenerate_derivation(s, &vocab))
        .collect();
    let sides = split_sides(derivations.len(), opts.split_seed);
    let counts = gather_counts(&derivations, &vocab, DerivationMode::RightBranching, &sides)?;
    let (model, _) = counts.build(vocab, DerivationMode::RightBranching, 0, opts);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Action;

    fn toy_vocab() -> Vocabulary {
        Vocabulary::new(&["a", "b"], &["T", "SE"], &["X"]).unwrap()
    }

    #[test]
    fn split_is_deterministic_with_fixed_sizes() {
        let a = split_sides(10, 7);
        let b = split_sides(10, 7);
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|s| **s == SplitSide::Check).count(), 1);
        let c = split_sides(50, 7);
        assert_eq!(c.iter().filter(|s| **s == SplitSide::Check).count(), 5);
        // A different seed moves the membership.
        let d = split_sides(50, 8);
        assert_ne!(c, d);
    }

    #[test]
    fn split_proportion_within_two_percent() {
        for n in [50usize, 73, 100, 500] {
            let sides = split_sides(n, 3);
            let check = sides.iter().filter(|s| **s == SplitSide::Check).count();
            let frac = check as f64 / n as f64;
            assert!((frac - 0.1).abs() <= 0.02, "n={n} frac={frac}");
        }
    }

    #[test]
    fn ten_identical_sentences_split_nine_one() {
        let v = toy_vocab();
        let trees: Vec<Arc<TreeNode>> =
            (0..10).map(|_| TreeNode::leaf(0, v.word_id("a"))).collect();
        let derivations: Vec<Derivation> = trees
            .iter()
            .map(|t| tree_to_derivation(t, &v).unwrap())
            .collect();
        let sides = split_sides(10, 5);
        let counts = gather_counts(&derivations, &v, DerivationMode::Normal, &sides).unwrap();
        // The first-word predictor event is identical in all sentences:
        // context (SB, <s>, SB, <s>), outcome "a". Nine land in main.
        let ctx = [
            v.sym_of_tag(v.sb_tag()),
            v.sent_begin(),
            v.sym_of_tag(v.sb_tag()),
            v.sent_begin(),
        ];
        assert!((counts.predictor.main.context_count(&ctx) - 9.0).abs() < 1e-12);
        let check_mass: f64 = counts
            .predictor
            .check
            .iter()
            .filter(|e| e.ctx == ctx.to_vec())
            .map(|e| e.mass)
            .sum();
        assert!((check_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_gives_empty_counts() {
        let v = toy_vocab();
        let counts = gather_counts(&[], &v, DerivationMode::Normal, &[]).unwrap();
        assert!(counts.predictor.main.is_empty());
        assert!(counts.parser.main.is_empty());
        assert!(counts.tagger.check.is_empty());
    }

    #[test]
    fn total_event_count_matches_independent_tally() {
        let v = toy_vocab();
        let x = v.label_id("X").unwrap();
        // Two sentences: a lone leaf and a two-word tree.
        let t1 = TreeNode::leaf(0, v.word_id("a"));
        let t2 = TreeNode::node(
            v.sym_of_label(x),
            crate::tree::Side::Right,
            TreeNode::leaf(0, v.word_id("a")),
            TreeNode::leaf(0, v.word_id("b")),
        );
        let derivations = vec![
            tree_to_derivation(&t1, &v).unwrap(),
            tree_to_derivation(&t2, &v).unwrap(),
        ];
        // Independent tally over the event stream.
        let mut predict = 0usize;
        let mut tag = 0usize;
        let mut parse = 0usize;
        for d in &derivations {
            for ev in derivation_events(d, &v, DerivationMode::Normal).unwrap() {
                match ev {
                    SlmEvent::Predict { .. } => predict += 1,
                    SlmEvent::Tag { .. } => tag += 1,
                    SlmEvent::Parse { .. } => parse += 1,
                }
            }
        }
        // n+1 predictor and tagger events per sentence; one null per word
        // position plus the adjoin in the second sentence.
        assert_eq!(predict, 2 + 3);
        assert_eq!(tag, 2 + 3);
        assert_eq!(parse, 1 + 3);
        let sides = vec![SplitSide::Main; 2];
        let counts = gather_counts(&derivations, &v, DerivationMode::Normal, &sides).unwrap();
        let adjoin_ctx_total: f64 = (0..parser_outcomes(v.n_labels()) as u32)
            .map(|o| counts.parser.main.level_prob(2, &[0, 0, 0, 0], o))
            .sum();
        assert!((adjoin_ctx_total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn counts_invariant_under_permutation_given_membership() {
        let v = toy_vocab();
        let x = v.label_id("X").unwrap();
        let t1 = TreeNode::leaf(0, v.word_id("a"));
        let t2 = TreeNode::node(
            v.sym_of_label(x),
            crate::tree::Side::Left,
            TreeNode::leaf(0, v.word_id("b")),
            TreeNode::leaf(1, v.word_id("a")),
        );
        let d1 = tree_to_derivation(&t1, &v).unwrap();
        let d2 = tree_to_derivation(&t2, &v).unwrap();
        let forward = gather_counts(
            &[d1.clone(), d2.clone()],
            &v,
            DerivationMode::Normal,
            &[SplitSide::Main, SplitSide::Check],
        )
        .unwrap();
        let reversed = gather_counts(
            &[d2, d1],
            &v,
            DerivationMode::Normal,
            &[SplitSide::Check, SplitSide::Main],
        )
        .unwrap();
        assert_eq!(forward.predictor.main, reversed.predictor.main);
        assert_eq!(forward.parser.main, reversed.parser.main);
    }

    #[test]
    fn degenerate_derivation_is_null_only() {
        let v = toy_vocab();
        let words = vec![v.word_id("a"), v.word_id("b")];
        let d = degenerate_derivation(&words, &v);
        assert_eq!(d.steps.len(), 3);
        assert!(d.steps.iter().all(|s| s.adjoins.is_empty()));
        assert!(!d.steps.iter().any(|s| s.adjoins.contains(&Action::Null)));
    }
}
