//! Index-level binarized parse trees.

use std::sync::Arc;

use crate::vocab::{SymId, TagId, Vocabulary, WordId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

/// A binary headword-annotated tree. Every internal node has exactly two
/// children and takes its head word from the `head_from` child. Node labels
/// live in the shared tag-plus-label symbol space so completion nodes can
/// carry a marker tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Leaf {
        tag: TagId,
        word: WordId,
    },
    Node {
        label: SymId,
        head_word: WordId,
        head_from: Side,
        left: Arc<TreeNode>,
        right: Arc<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(tag: TagId, word: WordId) -> Arc<TreeNode> {
        Arc::new(TreeNode::Leaf { tag, word })
    }

    pub fn node(
        label: SymId,
        head_from: Side,
        left: Arc<TreeNode>,
        right: Arc<TreeNode>,
    ) -> Arc<TreeNode> {
        let head_word = match head_from {
            Side::Left => left.head_word(),
            Side::Right => right.head_word(),
        };
        Arc::new(TreeNode::Node {
            label,
            head_word,
            head_from,
            left,
            right,
        })
    }

    pub fn head_word(&self) -> WordId {
        match self {
            TreeNode::Leaf { word, .. } => *word,
            TreeNode::Node { head_word, .. } => *head_word,
        }
    }

    /// The symbol this fragment exposes when it sits on the parse stack:
    /// the node's own label, or the tag for a bare leaf.
    pub fn exposed_sym(&self, vocab: &Vocabulary) -> SymId {
        match self {
            TreeNode::Leaf { tag, .. } => vocab.sym_of_tag(*tag),
            TreeNode::Node { label, .. } => *label,
        }
    }

    /// Head annotation pair: the head word together with the symbol of the
    /// child it was inherited from (the leaf tag at the bottom).
    pub fn head_annotation(&self, vocab: &Vocabulary) -> (WordId, SymId) {
        match self {
            TreeNode::Leaf { tag, word } => (*word, vocab.sym_of_tag(*tag)),
            TreeNode::Node {
                head_word,
                head_from,
                left,
                right,
                ..
            } => {
                let src = match head_from {
                    Side::Left => left,
                    Side::Right => right,
                };
                (*head_word, src.exposed_sym(vocab))
            }
        }
    }

    pub fn yield_words(&self) -> Vec<WordId> {
        let mut out = Vec::new();
        self.collect_words(&mut out);
        out
    }

    fn collect_words(&self, out: &mut Vec<WordId>) {
        match self {
            TreeNode::Leaf { word, .. } => out.push(*word),
            TreeNode::Node { left, right, .. } => {
                left.collect_words(out);
                right.collect_words(out);
            }
        }
    }

    pub fn leaves(&self) -> Vec<(TagId, WordId)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<(TagId, WordId)>) {
        match self {
            TreeNode::Leaf { tag, word } => out.push((*tag, *word)),
            TreeNode::Node { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    /// Canonical bracketed rendering using vocabulary strings.
    pub fn serialize(&self, vocab: &Vocabulary) -> String {
        let mut s = String::new();
        self.write(vocab, &mut s);
        s
    }

    fn write(&self, vocab: &Vocabulary, out: &mut String) {
        match self {
            TreeNode::Leaf { tag, word } => {
                out.push('(');
                out.push_str(vocab.tag(*tag));
                out.push(' ');
                out.push_str(vocab.word(*word));
                out.push(')');
            }
            TreeNode::Node {
                label, left, right, ..
            } => {
                out.push('(');
                out.push_str(vocab.sym(*label));
                out.push(' ');
                left.write(vocab, out);
                out.push(' ');
                right.write(vocab, out);
                out.push(')');
            }
        }
    }

    /// Checks head inheritance recursively: every internal node's head word
    /// must equal the head word of its `head_from` child.
    pub fn check_head_inheritance(&self) -> bool {
        match self {
            TreeNode::Leaf { .. } => true,
            TreeNode::Node {
                head_word,
                head_from,
                left,
                right,
                ..
            } => {
                let src = match head_from {
                    Side::Left => left.head_word(),
                    Side::Right => right.head_word(),
                };
                *head_word == src && left.check_head_inheritance() && right.check_head_inheritance()
            }
        }
    }
}
