//! Seeded synthetic corpora: a small phrase-structure generator for
//! treebank fixtures, a skewed word sampler for plain text, and randomized
//! N-best lists for rescoring tests. Everything is deterministic given the
//! seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::bracketed::BracketedTree;
use crate::eval::{NBestHyp, NBestList};

/// Words available per preterminal tag.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub dt: Vec<&'static str>,
    pub nn: Vec<&'static str>,
    pub vb: Vec<&'static str>,
    pub jj: Vec<&'static str>,
    pub rb: Vec<&'static str>,
    pub inp: Vec<&'static str>,
}

impl Lexicon {
    pub fn words(&self) -> Vec<String> {
        let mut all: Vec<String> = self
            .dt
            .iter()
            .chain(&self.nn)
            .chain(&self.vb)
            .chain(&self.jj)
            .chain(&self.rb)
            .chain(&self.inp)
            .map(|s| s.to_string())
            .collect();
        all.sort();
        all.dedup();
        all
    }
}

/// Travel-flavored lexicon for the matched domain.
pub fn travel_lexicon() -> Lexicon {
    Lexicon {
        dt: vec!["the", "a"],
        nn: vec![
            "flight", "pilot", "crew", "airport", "gate", "ticket", "plane", "city",
        ],
        vb: vec!["leaves", "arrives", "lands", "departs", "boards"],
        jj: vec!["early", "late", "red", "cheap"],
        rb: vec!["now", "soon"],
        inp: vec!["to", "from"],
    }
}

/// Finance-flavored lexicon for the mismatched domain; only "the" overlaps
/// with the travel lexicon.
pub fn finance_lexicon() -> Lexicon {
    Lexicon {
        dt: vec!["the", "this"],
        nn: vec![
            "market", "stock", "price", "report", "bank", "rate", "share", "deal",
        ],
        vb: vec!["rises", "falls", "gains", "drops", "closes"],
        jj: vec!["new", "big", "weak", "strong"],
        rb: vec!["today", "sharply"],
        inp: vec!["on", "over"],
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

fn leaf(tag: &str, word: &str) -> BracketedTree {
    BracketedTree::Leaf {
        tag: tag.to_string(),
        word: word.to_string(),
    }
}

fn node(label: &str, children: Vec<BracketedTree>) -> BracketedTree {
    BracketedTree::Node {
        label: label.to_string(),
        children,
    }
}

fn sample_np(rng: &mut ChaCha8Rng, lex: &Lexicon, allow_pp: bool) -> BracketedTree {
    let mut children = match rng.random_range(0..3u32) {
        0 => vec![leaf("NN", pick(rng, &lex.nn))],
        1 => vec![
            leaf("DT", pick(rng, &lex.dt)),
            leaf("NN", pick(rng, &lex.nn)),
        ],
        _ => vec![
            leaf("DT", pick(rng, &lex.dt)),
            leaf("JJ", pick(rng, &lex.jj)),
            leaf("NN", pick(rng, &lex.nn)),
        ],
    };
    if allow_pp && rng.random_bool(0.2) {
        children.push(sample_pp(rng, lex));
    }
    node("NP", children)
}

fn sample_pp(rng: &mut ChaCha8Rng, lex: &Lexicon) -> BracketedTree {
    node(
        "PP",
        vec![leaf("IN", pick(rng, &lex.inp)), sample_np(rng, lex, false)],
    )
}

fn sample_vp(rng: &mut ChaCha8Rng, lex: &Lexicon) -> BracketedTree {
    let verb = leaf("VB", pick(rng, &lex.vb));
    match rng.random_range(0..4u32) {
        0 => node("VP", vec![verb]),
        1 => node("VP", vec![verb, sample_np(rng, lex, false)]),
        2 => node("VP", vec![verb, sample_pp(rng, lex)]),
        _ => node("VP", vec![verb, leaf("RB", pick(rng, &lex.rb))]),
    }
}

/// Samples one parsed sentence.
pub fn sample_tree(rng: &mut ChaCha8Rng, lex: &Lexicon) -> BracketedTree {
    node("S", vec![sample_np(rng, lex, true), sample_vp(rng, lex)])
}

/// A deterministic treebank of `n` parsed sentences.
pub fn sample_treebank(lex: &Lexicon, n: usize, seed: u64) -> Vec<BracketedTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_tree(&mut rng, lex)).collect()
}

pub fn tree_words(tree: &BracketedTree) -> Vec<String> {
    tree.yield_pairs()
        .iter()
        .map(|(_, w)| w.to_string())
        .collect()
}

/// Plain word sequences with a skewed unigram distribution, for trigram
/// and degenerate-mode corpora.
pub fn sample_sentences(
    words: &[String],
    n: usize,
    len_range: std::ops::Range<usize>,
    seed: u64,
) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..words.len()).map(|i| 1.0 / (i + 1) as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut sentences = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.random_range(len_range.clone());
        let mut s = Vec::with_capacity(len);
        for _ in 0..len {
            let mut x = rng.random_range(0.0..total);
            let mut idx = 0;
            for (i, w) in weights.iter().enumerate() {
                if x < *w {
                    idx = i;
                    break;
                }
                x -= w;
            }
            s.push(words[idx].clone());
        }
        sentences.push(s);
    }
    sentences
}

/// Randomized N-best fixtures: each utterance gets a reference drawn from
/// the word list and `n_hyps` corrupted variants. The decoder rank-1
/// hypothesis has the highest acoustic score by construction.
pub fn sample_nbest(words: &[String], n_utts: usize, n_hyps: usize, seed: u64) -> Vec<NBestList> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lists = Vec::with_capacity(n_utts);
    for u in 0..n_utts {
        let len = rng.random_range(3..8usize);
        let reference: Vec<String> = (0..len)
            .map(|_| words[rng.random_range(0..words.len())].clone())
            .collect();
        let mut hyps = Vec::with_capacity(n_hyps);
        for h in 0..n_hyps {
            let words_h = if h > 0 && rng.random_bool(0.15) {
                reference.clone()
            } else {
                corrupt(&mut rng, &reference, words)
            };
            // Acoustic scores strictly decrease with rank.
            let acoustic = -(h as f64) * rng.random_range(0.5..2.0) - rng.random_range(0.0..0.5);
            let lm = -rng.random_range(1.0..20.0);
            hyps.push(NBestHyp {
                words: words_h,
                acoustic,
                lm,
                rank: h + 1,
            });
        }
        lists.push(NBestList {
            id: format!("utt{:04}", u + 1),
            reference,
            hyps,
        });
    }
    lists
}

fn corrupt(rng: &mut ChaCha8Rng, reference: &[String], words: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(reference.len() + 1);
    for w in reference {
        match rng.random_range(0..10u32) {
            0 => out.push(words[rng.random_range(0..words.len())].clone()),
            1 => {}
            2 => {
                out.push(w.clone());
                out.push(words[rng.random_range(0..words.len())].clone());
            }
            _ => out.push(w.clone()),
        }
    }
    if out.is_empty() {
        out.push(words[rng.random_range(0..words.len())].clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn treebank_sampling_is_deterministic() {
        let lex = travel_lexicon();
        let a = sample_treebank(&lex, 10, 7);
        let b = sample_treebank(&lex, 10, 7);
        assert_eq!(a, b);
        let c = sample_treebank(&lex, 10, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn lexicons_barely_overlap() {
        let travel = travel_lexicon().words();
        let finance = finance_lexicon().words();
        let shared: Vec<&String> = travel.iter().filter(|w| finance.contains(w)).collect();
        assert_eq!(shared, vec![&"the".to_string()]);
    }

    #[test]
    fn sentences_respect_length_range() {
        let words: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        for s in sample_sentences(&words, 50, 2..6, 3) {
            assert!((2..6).contains(&s.len()));
        }
    }

    #[test]
    fn nbest_rank_one_has_best_acoustic() {
        let words: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        for list in sample_nbest(&words, 20, 5, 9) {
            let best = list
                .hyps
                .iter()
                .max_by(|a, b| a.acoustic.total_cmp(&b.acoustic))
                .unwrap();
            assert_eq!(best.rank, 1);
        }
    }
}
