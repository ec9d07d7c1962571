//! Shared fixtures and the independent brute-force enumerator used to
//! cross-check the incremental search. The enumerator builds parses as
//! static objects (segmentations into decorated binary trees plus tag
//! assignments) and scores them by walking the structure directly, never
//! touching the prefix or search machinery it is checking.

#![allow(dead_code)]

use std::sync::Arc;

use slm_core::estimation::{initialize, EstimationOptions};
use slm_core::model::SlmModel;
use slm_core::tree::{Side, TreeNode};
use slm_core::vocab::Vocabulary;

/// Peels the forced-completion nodes (labeled with the sentence-end tag
/// symbol) off a completed parse, recovering the scored forest.
pub fn peel_forest(root: &Arc<TreeNode>, vocab: &Vocabulary) -> Vec<Arc<TreeNode>> {
    let se_sym = vocab.sym_of_tag(vocab.se_tag());
    let mut forest = Vec::new();
    let mut cursor = root.clone();
    loop {
        match cursor.as_ref() {
            TreeNode::Node {
                label, left, right, ..
            } if *label == se_sym => {
                forest.push(left.clone());
                cursor = right.clone();
            }
            TreeNode::Leaf { word, .. } if *word == vocab.sent_end() => return forest,
            _ => {
                // A single-fragment parse of the empty sentence has no comb.
                forest.push(cursor.clone());
                return forest;
            }
        }
    }
}

/// Canonical signature of a scored fragment: leaves as word/tag ids, nodes
/// as (label, head side) over children.
pub fn tree_sig(tree: &TreeNode, vocab: &Vocabulary) -> String {
    match tree {
        TreeNode::Leaf { tag, word } => format!("{word}/{tag}"),
        TreeNode::Node {
            label,
            head_from,
            left,
            right,
            ..
        } => {
            let side = match head_from {
                Side::Left => 'l',
                Side::Right => 'r',
            };
            let label_id = *label - vocab.n_tags() as u32;
            format!(
                "(L{label_id},{side} {} {})",
                tree_sig(left, vocab),
                tree_sig(right, vocab)
            )
        }
    }
}

pub fn forest_sig(forest: &[Arc<TreeNode>], vocab: &Vocabulary) -> String {
    forest
        .iter()
        .map(|t| tree_sig(t, vocab))
        .collect::<Vec<_>>()
        .join("|")
}

/// A small nonuniform model over words {a, b}, one tag, two labels,
/// initialized from a handful of trees so every component carries real
/// counts and bucket structure.
pub fn tiny_trained_model() -> SlmModel {
    let vocab = Vocabulary::new(&["a", "b"], &["T"], &["X", "Y"]).unwrap();
    let a = vocab.word_id("a");
    let b = vocab.word_id("b");
    let x = vocab.sym_of_label(0);
    let y = vocab.sym_of_label(1);
    let leaf = |w| TreeNode::leaf(0, w);
    let mut trees: Vec<Arc<TreeNode>> = Vec::new();
    for _ in 0..3 {
        trees.push(TreeNode::node(x, Side::Right, leaf(a), leaf(b)));
        trees.push(TreeNode::node(
            y,
            Side::Left,
            leaf(a),
            TreeNode::node(x, Side::Right, leaf(b), leaf(b)),
        ));
        trees.push(leaf(a));
        trees.push(TreeNode::node(
            x,
            Side::Left,
            TreeNode::node(y, Side::Right, leaf(b), leaf(a)),
            leaf(a),
        ));
    }
    trees.push(TreeNode::node(y, Side::Right, leaf(b), leaf(a)));
    initialize(&trees, vocab, &EstimationOptions::with_seed(17)).unwrap()
}

pub mod oracle {
    use slm_core::component::ComponentModel;
    use slm_core::model::{Action, SlmModel};
    use slm_core::vocab::{SymId, Vocabulary, WordId};

    /// A decorated binary tree over word positions.
    #[derive(Debug, Clone)]
    pub enum OTree {
        Leaf(usize),
        Node {
            left: Box<OTree>,
            right: Box<OTree>,
            label: u32,
            head_right: bool,
        },
    }

    impl OTree {
        fn end(&self) -> usize {
            match self {
                OTree::Leaf(i) => *i,
                OTree::Node { right, .. } => right.end(),
            }
        }

        pub fn sig(&self, words: &[WordId], tags: &[u32]) -> String {
            match self {
                OTree::Leaf(i) => format!("{}/{}", words[*i], tags[*i]),
                OTree::Node {
                    left,
                    right,
                    label,
                    head_right,
                } => {
                    let side = if *head_right { 'r' } else { 'l' };
                    format!(
                        "(L{label},{side} {} {})",
                        left.sig(words, tags),
                        right.sig(words, tags)
                    )
                }
            }
        }
    }

    fn trees_over(lo: usize, hi: usize, n_labels: u32) -> Vec<OTree> {
        if lo == hi {
            return vec![OTree::Leaf(lo)];
        }
        let mut out = Vec::new();
        for split in lo..hi {
            for left in trees_over(lo, split, n_labels) {
                for right in trees_over(split + 1, hi, n_labels) {
                    for label in 0..n_labels {
                        for head_right in [false, true] {
                            out.push(OTree::Node {
                                left: Box::new(left.clone()),
                                right: Box::new(right.clone()),
                                label,
                                head_right,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Every segmentation of `n` positions into adjacent decorated trees.
    pub fn forests_over(n: usize, n_labels: u32) -> Vec<Vec<OTree>> {
        suffix_forests(0, n, n_labels)
    }

    fn suffix_forests(lo: usize, n: usize, n_labels: u32) -> Vec<Vec<OTree>> {
        if lo == n {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for end in lo..n {
            for tree in trees_over(lo, end, n_labels) {
                for rest in suffix_forests(end + 1, n, n_labels) {
                    let mut forest = vec![tree.clone()];
                    forest.extend(rest);
                    out.push(forest);
                }
            }
        }
        out
    }

    pub fn tag_assignments(n: usize, n_tags: u32) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * n_tags as usize);
            for prefix in &out {
                for t in 0..n_tags {
                    let mut p = prefix.clone();
                    p.push(t);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    struct Completion {
        end: usize,
        label: u32,
        head_right: bool,
    }

    fn collect_completions(tree: &OTree, out: &mut Vec<Completion>) {
        if let OTree::Node {
            left,
            right,
            label,
            head_right,
        } = tree
        {
            collect_completions(left, out);
            collect_completions(right, out);
            out.push(Completion {
                end: tree.end(),
                label: *label,
                head_right: *head_right,
            });
        }
    }

    fn ctx4(stack: &[(WordId, SymId)]) -> [u32; 4] {
        let h0 = stack[stack.len() - 1];
        let h1 = if stack.len() >= 2 {
            stack[stack.len() - 2]
        } else {
            stack[0]
        };
        [h0.1, h0.0, h1.1, h1.0]
    }

    /// Joint probability of a static parse, computed by a straight walk of
    /// the structure: per position, the predictor and tagger fire on the
    /// top two stack entries, then every constituent ending at the
    /// position fires the parser (innermost first), then the null; the
    /// sentence-end position adds its predictor and tagger events only.
    pub fn parse_logprob(
        model: &SlmModel,
        words: &[WordId],
        forest: &[OTree],
        tags: &[u32],
        include_end: bool,
    ) -> f64 {
        let vocab = &model.vocab;
        let mut completions: Vec<Completion> = Vec::new();
        for tree in forest {
            collect_completions(tree, &mut completions);
        }
        let mut by_end: Vec<Vec<&Completion>> = vec![Vec::new(); words.len()];
        for c in &completions {
            by_end[c.end].push(c);
        }
        let sb = (vocab.sent_begin(), vocab.sym_of_tag(vocab.sb_tag()));
        let mut stack: Vec<(WordId, SymId)> = vec![sb];
        let mut lp = 0.0;
        for (k, (&w, &t)) in words.iter().zip(tags).enumerate() {
            lp += model.predictor.log_prob(&ctx4(&stack), w);
            lp += model
                .tagger
                .log_prob(&[w, ctx4(&stack)[0], ctx4(&stack)[2]], t);
            stack.push((w, vocab.sym_of_tag(t)));
            for c in &by_end[k] {
                let action = if c.head_right {
                    Action::AdjoinRight(c.label)
                } else {
                    Action::AdjoinLeft(c.label)
                };
                lp += model.parser.log_prob(&ctx4(&stack), action.id());
                let right = stack.pop().unwrap();
                let left = stack.pop().unwrap();
                let head = if c.head_right { right.0 } else { left.0 };
                stack.push((head, vocab.sym_of_label(c.label)));
            }
            lp += model.parser.log_prob(&ctx4(&stack), Action::Null.id());
        }
        if include_end {
            lp += model.predictor.log_prob(&ctx4(&stack), vocab.sent_end());
            lp += model.tagger.log_prob(
                &[vocab.sent_end(), ctx4(&stack)[0], ctx4(&stack)[2]],
                vocab.se_tag(),
            );
        }
        lp
    }

    /// Predictor context reached after consuming a full prefix parse.
    pub fn prefix_ctx(
        model: &SlmModel,
        words: &[WordId],
        forest: &[OTree],
        tags: &[u32],
    ) -> [u32; 4] {
        let vocab = &model.vocab;
        let mut completions: Vec<Completion> = Vec::new();
        for tree in forest {
            collect_completions(tree, &mut completions);
        }
        let mut by_end: Vec<Vec<&Completion>> = vec![Vec::new(); words.len()];
        for c in &completions {
            by_end[c.end].push(c);
        }
        let sb = (vocab.sent_begin(), vocab.sym_of_tag(vocab.sb_tag()));
        let mut stack: Vec<(WordId, SymId)> = vec![sb];
        for (k, (&w, &t)) in words.iter().zip(tags).enumerate() {
            stack.push((w, vocab.sym_of_tag(t)));
            for c in &by_end[k] {
                let right = stack.pop().unwrap();
                let left = stack.pop().unwrap();
                let head = if c.head_right { right.0 } else { left.0 };
                stack.push((head, vocab.sym_of_label(c.label)));
            }
        }
        ctx4(&stack)
    }

    #[derive(Debug)]
    pub struct OracleParse {
        pub sig: String,
        pub logprob: f64,
    }

    /// Exhaustive enumeration of complete parses with their joint log
    /// probabilities.
    pub fn enumerate_parses(model: &SlmModel, words: &[WordId]) -> Vec<OracleParse> {
        let n_labels = model.vocab.n_labels() as u32;
        let n_tags = model.vocab.n_tags() as u32;
        let mut out = Vec::new();
        for forest in forests_over(words.len(), n_labels) {
            for tags in tag_assignments(words.len(), n_tags) {
                let lp = parse_logprob(model, words, &forest, &tags, true);
                let sig = forest
                    .iter()
                    .map(|t| t.sig(words, &tags))
                    .collect::<Vec<_>>()
                    .join("|");
                out.push(OracleParse { sig, logprob: lp });
            }
        }
        out
    }

    /// The stack-mixture next-word probability computed by enumerating all
    /// prefix parses.
    pub fn prefix_mixture(model: &SlmModel, prefix: &[WordId], next: WordId) -> f64 {
        let n_labels = model.vocab.n_labels() as u32;
        let n_tags = model.vocab.n_tags() as u32;
        let mut joint = Vec::new();
        let mut ctxs = Vec::new();
        for forest in forests_over(prefix.len(), n_labels) {
            for tags in tag_assignments(prefix.len(), n_tags) {
                joint.push(parse_logprob(model, prefix, &forest, &tags, false));
                ctxs.push(prefix_ctx(model, prefix, &forest, &tags));
            }
        }
        let lse = slm_core::search::log_sum_exp(joint.iter().copied());
        let mut p = 0.0;
        for (lp, ctx) in joint.iter().zip(&ctxs) {
            p += (lp - lse).exp() * model.predictor.prob(ctx, next);
        }
        p
    }

    fn binomial(n: u64, k: u64) -> u128 {
        if k > n {
            return 0;
        }
        let mut result: u128 = 1;
        for i in 0..k.min(n - k) {
            result = result * (n - i) as u128 / (i + 1) as u128;
        }
        result
    }

    /// Forests of `m` binary trees over `n` ordered leaves.
    pub fn forest_count(n: u64, m: u64) -> u128 {
        if m == 0 || m > n {
            return u128::from(n == 0 && m == 0);
        }
        // (m / n) * C(2n - m - 1, n - 1)
        binomial(2 * n - m - 1, n - 1) * m as u128 / n as u128
    }

    /// Closed-form derivation tally for an n-word sentence: tag choices
    /// per word times, per segmentation, direction and label choices per
    /// internal node.
    pub fn closed_form_tally(n: u64, n_tags: u64, n_labels: u64) -> u128 {
        let mut total: u128 = 0;
        for m in 1..=n {
            total += forest_count(n, m) * (2 * n_labels as u128).pow((n - m) as u32);
        }
        if n == 0 {
            total = 1;
        }
        total * (n_tags as u128).pow(n as u32)
    }

    /// Sanity helper: the uniform ComponentModel assigns 1/|outcomes|.
    pub fn uniform_prob(c: &ComponentModel) -> f64 {
        1.0 / c.outcomes() as f64
    }

    pub fn vocab_words(vocab: &Vocabulary) -> Vec<WordId> {
        (0..vocab.n_words() as u32).collect()
    }
}
