//! Parse derivations: extraction from trees, replay, and joint scoring.

use std::sync::Arc;

use crate::error::{Result, SlmError};
use crate::model::{legal_actions, Action, DerivationMode, ParsePrefix, SlmEvent, SlmModel};
use crate::tree::{Side, TreeNode};
use crate::vocab::{TagId, Vocabulary, WordId};

/// One sentence position: the predicted word, its tag, and the adjoin
/// sequence before the closing null. The final position carries the
/// sentence-end word with no adjoins; completion is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivStep {
    pub word: WordId,
    pub tag: TagId,
    pub adjoins: Vec<Action>,
}

/// A complete derivation of a sentence including the sentence-end position.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub steps: Vec<DerivStep>,
}

impl Derivation {
    pub fn words(&self) -> Vec<WordId> {
        self.steps.iter().map(|s| s.word).collect()
    }

    pub fn n_words(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }
}

/// Replays a derivation, emitting every scored event in order, and returns
/// the final prefix with the completed parse.
pub fn replay<F: FnMut(&SlmEvent)>(
    derivation: &Derivation,
    vocab: &Vocabulary,
    mode: DerivationMode,
    mut on_event: F,
) -> Result<ParsePrefix> {
    if derivation.steps.is_empty() {
        return Err(SlmError::Derivation("empty derivation".into()));
    }
    if derivation.steps.last().unwrap().word != vocab.sent_end() {
        return Err(SlmError::Derivation(
            "derivation must end with the sentence-end word".into(),
        ));
    }
    let mut prefix = ParsePrefix::new(vocab);
    let last = derivation.steps.len() - 1;
    for (k, step) in derivation.steps.iter().enumerate() {
        let at_end = k == last;
        if !at_end && step.word == vocab.sent_end() {
            return Err(SlmError::Derivation(
                "sentence-end word before the final position".into(),
            ));
        }
        on_event(&SlmEvent::Predict {
            ctx: prefix.predictor_ctx(),
            word: step.word,
        });
        on_event(&SlmEvent::Tag {
            ctx: prefix.tagger_ctx(step.word),
            tag: step.tag,
        });
        prefix.shift_word(step.word, step.tag, vocab);
        if at_end {
            if !step.adjoins.is_empty() {
                return Err(SlmError::Derivation(
                    "the sentence-end position admits no adjoins".into(),
                ));
            }
            prefix.complete_end(vocab);
        } else {
            for &action in &step.adjoins {
                if action == Action::Null {
                    return Err(SlmError::Derivation(
                        "null inside an adjoin sequence".into(),
                    ));
                }
                if !legal_actions(&prefix, false, mode, vocab.n_labels()).contains(&action) {
                    return Err(SlmError::Derivation(format!(
                        "illegal action {} at position {}",
                        action.describe(vocab),
                        k + 1
                    )));
                }
                if mode == DerivationMode::Normal {
                    on_event(&SlmEvent::Parse {
                        ctx: prefix.parser_ctx(),
                        action,
                    });
                }
                prefix.apply_action(action, vocab)?;
            }
            if mode == DerivationMode::Normal {
                on_event(&SlmEvent::Parse {
                    ctx: prefix.parser_ctx(),
                    action: Action::Null,
                });
            }
            prefix.apply_action(Action::Null, vocab)?;
        }
    }
    debug_assert_eq!(prefix.n_above_begin(), 1);
    Ok(prefix)
}

/// All scored events of a derivation, in order.
pub fn derivation_events(
    derivation: &Derivation,
    vocab: &Vocabulary,
    mode: DerivationMode,
) -> Result<Vec<SlmEvent>> {
    let mut events = Vec::new();
    replay(derivation, vocab, mode, |e| events.push(*e))?;
    Ok(events)
}

/// Log P(W, T): the sum of component log probabilities over the derivation
/// events, replaying the prefix to obtain each conditioning context.
pub fn joint_logprob(derivation: &Derivation, model: &SlmModel) -> Result<f64> {
    let mut lp = 0.0;
    replay(derivation, &model.vocab, model.mode, |e| {
        lp += model.event_logprob(e);
    })?;
    Ok(lp)
}

/// Per-event breakdown of the joint log probability.
pub fn joint_logprob_trace(
    derivation: &Derivation,
    model: &SlmModel,
) -> Result<Vec<(SlmEvent, f64)>> {
    let mut trace = Vec::new();
    replay(derivation, &model.vocab, model.mode, |e| {
        trace.push((*e, model.event_logprob(e)));
    })?;
    Ok(trace)
}

/// Replays a derivation and returns the completed parse tree.
pub fn replay_tree(
    derivation: &Derivation,
    vocab: &Vocabulary,
    mode: DerivationMode,
) -> Result<Arc<TreeNode>> {
    let prefix = replay(derivation, vocab, mode, |_| {})?;
    Ok(prefix.root().expect("replay ends completed").clone())
}

/// Extracts the unique derivation of a binarized parse: adjoins are
/// emitted as soon as both children are complete, and the sentence-end
/// position is appended with the forced completion left implicit.
pub fn tree_to_derivation(tree: &TreeNode, vocab: &Vocabulary) -> Result<Derivation> {
    let mut steps: Vec<DerivStep> = Vec::new();
    walk(tree, vocab, &mut steps)?;
    steps.push(DerivStep {
        word: vocab.sent_end(),
        tag: vocab.se_tag(),
        adjoins: Vec::new(),
    });
    Ok(Derivation { steps })
}

fn walk(node: &TreeNode, vocab: &Vocabulary, steps: &mut Vec<DerivStep>) -> Result<()> {
    match node {
        TreeNode::Leaf { tag, word } => {
            steps.push(DerivStep {
                word: *word,
                tag: *tag,
                adjoins: Vec::new(),
            });
            Ok(())
        }
        TreeNode::Node {
            label,
            head_from,
            left,
            right,
            ..
        } => {
            walk(left, vocab, steps)?;
            walk(right, vocab, steps)?;
            if vocab.sym_is_tag(*label) {
                return Err(SlmError::Derivation(
                    "tree node labeled with a tag symbol".into(),
                ));
            }
            let label_id = *label - vocab.n_tags() as u32;
            let action = match head_from {
                Side::Left => Action::AdjoinLeft(label_id),
                Side::Right => Action::AdjoinRight(label_id),
            };
            steps
                .last_mut()
                .expect("walk visited a leaf first")
                .adjoins
                .push(action);
            Ok(())
        }
    }
}
