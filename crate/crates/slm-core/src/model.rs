//! Core domain of the structured language model: word-parse prefixes,
//! exposed heads, parser actions, and the three conditional components
//! that compose the joint sentence/parse probability.
//!
//! A derivation walks the sentence left to right. At each position the
//! word is predicted from the two topmost exposed heads, tagged, and
//! shifted; the parser then either combines the two topmost constituents
//! (adjoin-left or adjoin-right under a non-terminal label) or closes the
//! position with a null transition. After the sentence-end word is
//! shifted, a forced completion reduces the stack to a single constituent
//! above the sentence-begin marker. Completion steps carry no probability
//! and contribute no counts; the begin marker itself is never adjoined.

use std::sync::Arc;

use crate::component::ComponentModel;
use crate::error::{Result, SlmError};
use crate::tree::{Side, TreeNode};
use crate::vocab::{LabelId, SymId, TagId, Vocabulary, WordId};

/// A (headword, label-or-tag) pair exposed by a parse-stack fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExposedHead {
    pub word: WordId,
    pub sym: SymId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Null,
    AdjoinLeft(LabelId),
    AdjoinRight(LabelId),
}

impl Action {
    /// Dense id in the parser outcome space: null, then the two adjoin
    /// kinds interleaved per label.
    pub fn id(self) -> u32 {
        match self {
            Action::Null => 0,
            Action::AdjoinLeft(l) => 1 + 2 * l,
            Action::AdjoinRight(l) => 2 + 2 * l,
        }
    }

    pub fn from_id(id: u32) -> Action {
        if id == 0 {
            Action::Null
        } else if id % 2 == 1 {
            Action::AdjoinLeft((id - 1) / 2)
        } else {
            Action::AdjoinRight((id - 2) / 2)
        }
    }

    pub fn describe(self, vocab: &Vocabulary) -> String {
        match self {
            Action::Null => "null".to_string(),
            Action::AdjoinLeft(l) => format!("adjoin-left({})", vocab.label(l)),
            Action::AdjoinRight(l) => format!("adjoin-right({})", vocab.label(l)),
        }
    }
}

/// Number of parser outcomes for a label alphabet.
pub fn parser_outcomes(n_labels: usize) -> usize {
    1 + 2 * n_labels
}

pub fn all_adjoins(n_labels: usize) -> impl Iterator<Item = Action> {
    (0..n_labels as LabelId).flat_map(|l| [Action::AdjoinLeft(l), Action::AdjoinRight(l)])
}

/// How derivations are generated and scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivationMode {
    /// Full model: parser choices scored at every position.
    Normal,
    /// Trigram-equivalent degenerate mode: the parser is forced to null
    /// until sentence end and the completion is deterministic; parser
    /// steps carry probability one and contribute no counts.
    RightBranching,
}

/// Back-off schemas. Context tuples list the most recent head first.
pub fn predictor_schema() -> Vec<usize> {
    vec![4, 2, 1, 0]
}

pub fn tagger_schema() -> Vec<usize> {
    vec![3, 1, 0]
}

pub fn parser_schema() -> Vec<usize> {
    vec![4, 2, 1, 0]
}

/// Signature marker distinguishing shift entries from action ids. Action
/// ids stay below 2^18 (labels are bounded by the 16-bit symbol space), so
/// shift entries start above them.
const SIG_SHIFT: u32 = 1 << 20;

/// A word-parse prefix: the parse-stack of exposed heads with the tree
/// fragments they root, the tags assigned so far, the accumulated log
/// probability, and a flat derivation signature used for deterministic
/// tie-breaking.
#[derive(Debug, Clone)]
pub struct ParsePrefix {
    pub heads: Vec<ExposedHead>,
    pub frags: Vec<Arc<TreeNode>>,
    pub tags: Vec<TagId>,
    pub logprob: f64,
    pub sig: Vec<u32>,
}

impl ParsePrefix {
    /// The empty prefix: only the sentence-begin head on the stack.
    pub fn new(vocab: &Vocabulary) -> ParsePrefix {
        let sb = ExposedHead {
            word: vocab.sent_begin(),
            sym: vocab.sym_of_tag(vocab.sb_tag()),
        };
        ParsePrefix {
            heads: vec![sb],
            frags: vec![TreeNode::leaf(vocab.sb_tag(), vocab.sent_begin())],
            tags: Vec::new(),
            logprob: 0.0,
            sig: Vec::new(),
        }
    }

    /// Number of exposed heads above the sentence-begin marker.
    pub fn n_above_begin(&self) -> usize {
        self.heads.len() - 1
    }

    fn h0(&self) -> ExposedHead {
        *self.heads.last().unwrap()
    }

    fn h_minus1(&self) -> ExposedHead {
        if self.heads.len() >= 2 {
            self.heads[self.heads.len() - 2]
        } else {
            self.heads[0]
        }
    }

    /// Word-predictor context: (h0.sym, h0.word, h-1.sym, h-1.word).
    /// Symbols come first so that prefix truncation yields the back-off
    /// chain full context, (h0.sym, h0.word), (h0.sym), empty.
    pub fn predictor_ctx(&self) -> [u32; 4] {
        let h0 = self.h0();
        let h1 = self.h_minus1();
        [h0.sym, h0.word, h1.sym, h1.word]
    }

    /// Tagger context: (word, h0.sym, h-1.sym).
    pub fn tagger_ctx(&self, word: WordId) -> [u32; 3] {
        [word, self.h0().sym, self.h_minus1().sym]
    }

    /// Parser context, taken from the evolving stack.
    pub fn parser_ctx(&self) -> [u32; 4] {
        self.predictor_ctx()
    }

    /// Pushes the predicted word as a leaf fragment.
    pub fn shift_word(&mut self, word: WordId, tag: TagId, vocab: &Vocabulary) {
        self.heads.push(ExposedHead {
            word,
            sym: vocab.sym_of_tag(tag),
        });
        self.frags.push(TreeNode::leaf(tag, word));
        self.tags.push(tag);
        self.sig.push(SIG_SHIFT + tag);
    }

    /// Applies a parser action. Adjoins pop the two topmost fragments and
    /// push their combination; null only records the position boundary.
    pub fn apply_action(&mut self, action: Action, vocab: &Vocabulary) -> Result<()> {
        match action {
            Action::Null => {}
            Action::AdjoinLeft(l) | Action::AdjoinRight(l) => {
                if self.n_above_begin() < 2 {
                    return Err(SlmError::IllegalAction {
                        action: action.describe(vocab),
                        reason: "fewer than two constituents above the sentence-begin marker"
                            .into(),
                    });
                }
                if (l as usize) >= vocab.n_labels() {
                    return Err(SlmError::IllegalAction {
                        action: format!("adjoin({l})"),
                        reason: "label out of range".into(),
                    });
                }
                let right = self.frags.pop().unwrap();
                let left = self.frags.pop().unwrap();
                self.heads.pop();
                let below = self.heads.pop().unwrap();
                let sym = vocab.sym_of_label(l);
                let (side, word) = match action {
                    Action::AdjoinLeft(_) => (Side::Left, below.word),
                    Action::AdjoinRight(_) => (Side::Right, self.h0_word_of(&right)),
                    Action::Null => unreachable!(),
                };
                let node = TreeNode::node(sym, side, left, right);
                debug_assert_eq!(node.head_word(), word);
                self.heads.push(ExposedHead { word, sym });
                self.frags.push(node);
            }
        }
        self.sig.push(action.id());
        Ok(())
    }

    fn h0_word_of(&self, frag: &TreeNode) -> WordId {
        frag.head_word()
    }

    /// Forced sentence completion: right-to-left merges reduce everything
    /// above the begin marker to one constituent. Completion nodes carry
    /// the sentence-end marker tag and head from the left child; they are
    /// deterministic bookkeeping and carry no probability.
    pub fn complete_end(&mut self, vocab: &Vocabulary) {
        let se_sym = vocab.sym_of_tag(vocab.se_tag());
        while self.n_above_begin() >= 2 {
            let right = self.frags.pop().unwrap();
            let left = self.frags.pop().unwrap();
            self.heads.pop();
            let below = self.heads.pop().unwrap();
            let node = TreeNode::node(se_sym, Side::Left, left, right);
            self.heads.push(ExposedHead {
                word: below.word,
                sym: se_sym,
            });
            self.frags.push(node);
        }
        self.sig.push(Action::Null.id());
    }

    /// The completed parse, available once the stack holds exactly one
    /// constituent above the begin marker.
    pub fn root(&self) -> Option<&Arc<TreeNode>> {
        if self.n_above_begin() == 1 {
            Some(&self.frags[1])
        } else {
            None
        }
    }

    /// Reconstructs the derivation from the signature, given the word
    /// sequence the prefix consumed (sentence-end included).
    pub fn decode_derivation(&self, words: &[WordId]) -> crate::derivation::Derivation {
        let mut steps: Vec<crate::derivation::DerivStep> = Vec::new();
        for &entry in &self.sig {
            if entry >= SIG_SHIFT {
                let word = words[steps.len()];
                steps.push(crate::derivation::DerivStep {
                    word,
                    tag: entry - SIG_SHIFT,
                    adjoins: Vec::new(),
                });
            } else if entry != Action::Null.id() {
                steps
                    .last_mut()
                    .expect("action after a shift")
                    .adjoins
                    .push(Action::from_id(entry));
            }
        }
        // Completion adjoins are implicit: the final position carries none.
        debug_assert!(steps.last().is_none_or(|s| s.adjoins.is_empty()));
        crate::derivation::Derivation { steps }
    }
}

/// Scored parser choices available in a given prefix. Mid-sentence the
/// null transition is always available and adjoins require two heads above
/// the begin marker; at sentence end the completion is forced, so the only
/// remaining choice point is the terminating null once a single
/// constituent remains.
pub fn legal_actions(
    prefix: &ParsePrefix,
    at_sentence_end: bool,
    mode: DerivationMode,
    n_labels: usize,
) -> Vec<Action> {
    if at_sentence_end {
        return if prefix.n_above_begin() <= 1 {
            vec![Action::Null]
        } else {
            Vec::new()
        };
    }
    match mode {
        DerivationMode::RightBranching => vec![Action::Null],
        DerivationMode::Normal => {
            let mut actions = vec![Action::Null];
            if prefix.n_above_begin() >= 2 {
                actions.extend(all_adjoins(n_labels));
            }
            actions
        }
    }
}

/// One scored event in a derivation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlmEvent {
    Predict { ctx: [u32; 4], word: WordId },
    Tag { ctx: [u32; 3], tag: TagId },
    Parse { ctx: [u32; 4], action: Action },
}

/// The full structured language model.
#[derive(Debug, Clone, PartialEq)]
pub struct SlmModel {
    pub vocab: Vocabulary,
    pub predictor: ComponentModel,
    pub tagger: ComponentModel,
    pub parser: ComponentModel,
    pub trigram: Option<ComponentModel>,
    pub mode: DerivationMode,
    pub iteration: u32,
}

impl SlmModel {
    /// An untrained model over the vocabulary: uniform components.
    pub fn empty(vocab: Vocabulary, mode: DerivationMode) -> SlmModel {
        let predictor = ComponentModel::uniform(predictor_schema(), vocab.n_words());
        let tagger = ComponentModel::uniform(tagger_schema(), vocab.n_tags());
        let parser = ComponentModel::uniform(parser_schema(), parser_outcomes(vocab.n_labels()));
        SlmModel {
            vocab,
            predictor,
            tagger,
            parser,
            trigram: None,
            mode,
            iteration: 0,
        }
    }

    pub fn event_logprob(&self, event: &SlmEvent) -> f64 {
        match event {
            SlmEvent::Predict { ctx, word } => self.predictor.log_prob(ctx, *word),
            SlmEvent::Tag { ctx, tag } => self.tagger.log_prob(ctx, *tag),
            SlmEvent::Parse { ctx, action } => self.parser.log_prob(ctx, action.id()),
        }
    }
}
