//! Binarization of head-annotated trees.
//!
//! N-ary nodes expand into a binary spine around the head child: right
//! siblings attach first, then left siblings. Spine nodes carry the parent
//! label and inherit the head. Unary chains collapse, keeping the parent
//! label; a unary node directly over a leaf collapses to the leaf.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Result, SlmError};
use crate::headrules::HeadedTree;
use crate::tree::{Side, TreeNode};
use crate::vocab::{Vocabulary, SB_TAG, SE_TAG};

/// String-level binary tree, the bridge between treebank ingestion and the
/// index-level model types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BinTree {
    Leaf {
        tag: String,
        word: String,
    },
    Node {
        label: String,
        head_from: Side,
        left: Box<BinTree>,
        right: Box<BinTree>,
    },
}

impl BinTree {
    pub fn head_word(&self) -> &str {
        match self {
            BinTree::Leaf { word, .. } => word,
            BinTree::Node {
                head_from,
                left,
                right,
                ..
            } => match head_from {
                Side::Left => left.head_word(),
                Side::Right => right.head_word(),
            },
        }
    }

    pub fn yield_pairs(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        self.collect_yield(&mut out);
        out
    }

    fn collect_yield<'a>(&'a self, out: &mut Vec<(&'a str, &'a str)>) {
        match self {
            BinTree::Leaf { tag, word } => out.push((tag, word)),
            BinTree::Node { left, right, .. } => {
                left.collect_yield(out);
                right.collect_yield(out);
            }
        }
    }
}

/// Converts a head-annotated tree into binary form.
pub fn binarize(tree: &HeadedTree) -> BinTree {
    if let Some((tag, word)) = &tree.leaf {
        return BinTree::Leaf {
            tag: tag.clone(),
            word: word.clone(),
        };
    }
    if tree.children.len() == 1 {
        let child = binarize(&tree.children[0]);
        return match child {
            BinTree::Leaf { .. } => child,
            BinTree::Node {
                head_from,
                left,
                right,
                ..
            } => BinTree::Node {
                label: tree.label.clone(),
                head_from,
                left,
                right,
            },
        };
    }
    let h = tree.head_child;
    let mut acc = binarize(&tree.children[h]);
    for sibling in &tree.children[h + 1..] {
        acc = BinTree::Node {
            label: tree.label.clone(),
            head_from: Side::Left,
            left: Box::new(acc),
            right: Box::new(binarize(sibling)),
        };
    }
    for sibling in tree.children[..h].iter().rev() {
        acc = BinTree::Node {
            label: tree.label.clone(),
            head_from: Side::Right,
            left: Box::new(binarize(sibling)),
            right: Box::new(acc),
        };
    }
    acc
}

/// Collects the tag and label alphabets occurring in binarized trees, in
/// sorted order, with the marker tags appended when missing.
pub fn collect_symbols(trees: &[BinTree]) -> (Vec<String>, Vec<String>) {
    let mut tags = BTreeSet::new();
    let mut labels = BTreeSet::new();
    for t in trees {
        collect_into(t, &mut tags, &mut labels);
    }
    tags.insert(SB_TAG.to_string());
    tags.insert(SE_TAG.to_string());
    (tags.into_iter().collect(), labels.into_iter().collect())
}

fn collect_into(tree: &BinTree, tags: &mut BTreeSet<String>, labels: &mut BTreeSet<String>) {
    match tree {
        BinTree::Leaf { tag, .. } => {
            tags.insert(tag.clone());
        }
        BinTree::Node {
            label, left, right, ..
        } => {
            labels.insert(label.clone());
            collect_into(left, tags, labels);
            collect_into(right, tags, labels);
        }
    }
}

/// Maps a string-level binary tree onto vocabulary indices. Words fall back
/// to the unknown marker; tags and labels must be present.
pub fn index_tree(tree: &BinTree, vocab: &Vocabulary) -> Result<Arc<TreeNode>> {
    match tree {
        BinTree::Leaf { tag, word } => {
            let tag_id = vocab
                .tag_id(tag)
                .ok_or_else(|| SlmError::Vocab(format!("tag {tag:?} not in vocabulary")))?;
            Ok(TreeNode::leaf(tag_id, vocab.word_id(word)))
        }
        BinTree::Node {
            label,
            head_from,
            left,
            right,
        } => {
            let label_id = vocab
                .label_id(label)
                .ok_or_else(|| SlmError::Vocab(format!("label {label:?} not in vocabulary")))?;
            Ok(TreeNode::node(
                vocab.sym_of_label(label_id),
                *head_from,
                index_tree(left, vocab)?,
                index_tree(right, vocab)?,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracketed::{parse_bracketed, BracketedTree};
    use crate::headrules::{percolate_headwords, HeadRules};
    use proptest::prelude::*;

    fn rules() -> HeadRules {
        HeadRules::parse("NP rtl NN\nS ltr VP\nVP ltr VB\n").unwrap()
    }

    fn binarized(text: &str) -> BinTree {
        let t = parse_bracketed(text).unwrap();
        binarize(&percolate_headwords(&t, &rules()))
    }

    #[test]
    fn two_child_node_is_structurally_identical() {
        let b = binarized("(NP (DT a) (NN flight))");
        match &b {
            BinTree::Node {
                label, head_from, ..
            } => {
                assert_eq!(label, "NP");
                assert_eq!(*head_from, Side::Right);
            }
            _ => panic!("expected node"),
        }
        assert_eq!(b.head_word(), "flight");
    }

    #[test]
    fn unary_chain_collapses_keeping_parent_label() {
        let b = binarized("(S (NP (DT a) (NN flight)))");
        match &b {
            BinTree::Node { label, .. } => assert_eq!(label, "S"),
            _ => panic!("expected node"),
        }
        assert_eq!(b.head_word(), "flight");
        // Unary over a leaf collapses to the leaf.
        let leaf = binarized("(NP (NN flight))");
        assert_eq!(
            leaf,
            BinTree::Leaf {
                tag: "NN".into(),
                word: "flight".into()
            }
        );
    }

    #[test]
    fn three_children_build_spine_around_head() {
        let rules = HeadRules::parse("NP rtl NN\n").unwrap();
        let t = parse_bracketed("(NP (DT a) (JJ red) (NN flight))").unwrap();
        let b = binarize(&percolate_headwords(&t, &rules));
        // NP(DT, NP(JJ, NN)), every spine head = flight.
        match &b {
            BinTree::Node {
                label,
                head_from,
                left,
                right,
            } => {
                assert_eq!(label, "NP");
                assert_eq!(*head_from, Side::Right);
                assert_eq!(left.yield_pairs(), vec![("DT", "a")]);
                match right.as_ref() {
                    BinTree::Node {
                        label, head_from, ..
                    } => {
                        assert_eq!(label, "NP");
                        assert_eq!(*head_from, Side::Right);
                    }
                    _ => panic!("expected inner spine node"),
                }
                assert_eq!(right.head_word(), "flight");
            }
            _ => panic!("expected node"),
        }
        assert_eq!(b.head_word(), "flight");
    }

    #[test]
    fn index_tree_maps_oov_words_to_unknown() {
        let b = binarized("(NP (DT a) (NN zyzzyva))");
        let (tags, labels) = collect_symbols(std::slice::from_ref(&b));
        let vocab = Vocabulary::new(&["a".to_string()], &tags, &labels).unwrap();
        let t = index_tree(&b, &vocab).unwrap();
        let words = t.yield_words();
        assert_eq!(words, vec![vocab.word_id("a"), vocab.unknown()]);
        assert!(t.check_head_inheritance());
    }

    #[test]
    fn collect_symbols_adds_markers() {
        let b = binarized("(NP (DT a) (NN flight))");
        let (tags, labels) = collect_symbols(std::slice::from_ref(&b));
        assert!(tags.contains(&"SB".to_string()));
        assert!(tags.contains(&"SE".to_string()));
        assert_eq!(labels, vec!["NP".to_string()]);
    }

    fn arb_headed() -> impl Strategy<Value = BracketedTree> {
        let leaf = (
            prop_oneof!["NN", "VB", "DT", "JJ"],
            prop_oneof!["a", "b", "c", "d"],
        )
            .prop_map(|(tag, word)| BracketedTree::Leaf {
                tag: tag.to_string(),
                word: word.to_string(),
            });
        leaf.prop_recursive(4, 32, 5, |inner| {
            (
                prop_oneof!["S", "NP", "VP"],
                prop::collection::vec(inner, 1..5),
            )
                .prop_map(|(label, children)| BracketedTree::Node {
                    label: label.to_string(),
                    children,
                })
        })
    }

    proptest! {
        #[test]
        fn binarize_preserves_yield(t in arb_headed()) {
            let headed = percolate_headwords(&t, &rules());
            let b = binarize(&headed);
            let orig: Vec<(String, String)> = t
                .yield_pairs()
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect();
            let got: Vec<(String, String)> = b
                .yield_pairs()
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect();
            prop_assert_eq!(orig, got);
        }

        #[test]
        fn binarize_heads_inherit_from_children(t in arb_headed()) {
            let headed = percolate_headwords(&t, &rules());
            let b = binarize(&headed);
            let (tags, labels) = collect_symbols(std::slice::from_ref(&b));
            let words: Vec<String> = b.yield_pairs().iter().map(|(_, w)| w.to_string()).collect();
            let mut unique = words.clone();
            unique.sort();
            unique.dedup();
            let vocab = Vocabulary::new(&unique, &tags, &labels).unwrap();
            let indexed = index_tree(&b, &vocab).unwrap();
            prop_assert!(indexed.check_head_inheritance());
        }
    }
}
