//! Vocabularies, tokenization, and the word/tag/label index spaces.
//!
//! Words, POS tags, and non-terminal labels each get dense stable indices.
//! Tags and labels share a single symbol space with disjoint ranges so that
//! an exposed head can carry either a tag (root-only tree) or a label.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SlmError};

pub type WordId = u32;
pub type TagId = u32;
pub type LabelId = u32;
/// Index into the shared tag-plus-label space: tags occupy `0..n_tags`,
/// labels occupy `n_tags..n_tags + n_labels`.
pub type SymId = u32;

pub const SENT_BEGIN: &str = "<s>";
pub const SENT_END: &str = "</s>";
pub const UNKNOWN: &str = "<unk>";

/// Reserved tag names for the sentence markers. When absent from the tag
/// set (single-tag setups) both fall back to tag 0.
pub const SB_TAG: &str = "SB";
pub const SE_TAG: &str = "SE";

/// Context tuples are packed 16 bits per field, so every index space must
/// stay below this bound.
pub const MAX_SYMBOLS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    word_index: HashMap<String, WordId>,
    tags: Vec<String>,
    tag_index: HashMap<String, TagId>,
    labels: Vec<String>,
    label_index: HashMap<String, LabelId>,
    sent_begin: WordId,
    sent_end: WordId,
    unknown: WordId,
    sb_tag: TagId,
    se_tag: TagId,
}

impl Vocabulary {
    /// Builds the vocabulary from explicit word/tag/label lists. The three
    /// markers are appended to `words` when missing; duplicates are errors.
    pub fn new<S: AsRef<str>>(words: &[S], tags: &[S], labels: &[S]) -> Result<Vocabulary> {
        let mut word_list: Vec<String> = Vec::with_capacity(words.len() + 3);
        let mut word_index = HashMap::new();
        for w in words {
            let w = w.as_ref();
            if word_index.contains_key(w) {
                return Err(SlmError::Vocab(format!("duplicate word {w:?}")));
            }
            word_index.insert(w.to_string(), word_list.len() as WordId);
            word_list.push(w.to_string());
        }
        for marker in [SENT_BEGIN, SENT_END, UNKNOWN] {
            if !word_index.contains_key(marker) {
                word_index.insert(marker.to_string(), word_list.len() as WordId);
                word_list.push(marker.to_string());
            }
        }
        let (tag_list, tag_index) = index_symbols(tags, "tag")?;
        let (label_list, label_index) = index_symbols(labels, "label")?;
        if tag_list.is_empty() {
            return Err(SlmError::Vocab("tag set is empty".into()));
        }
        if word_list.len() > MAX_SYMBOLS || tag_list.len() + label_list.len() > MAX_SYMBOLS {
            return Err(SlmError::Vocab("symbol space too large".into()));
        }
        let sb_tag = tag_index.get(SB_TAG).copied().unwrap_or(0);
        let se_tag = tag_index.get(SE_TAG).copied().unwrap_or(0);
        Ok(Vocabulary {
            sent_begin: word_index[SENT_BEGIN],
            sent_end: word_index[SENT_END],
            unknown: word_index[UNKNOWN],
            words: word_list,
            word_index,
            tags: tag_list,
            tag_index,
            labels: label_list,
            label_index,
            sb_tag,
            se_tag,
        })
    }

    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    /// Size of the shared tag-plus-label symbol space.
    pub fn n_syms(&self) -> usize {
        self.tags.len() + self.labels.len()
    }

    pub fn sent_begin(&self) -> WordId {
        self.sent_begin
    }

    pub fn sent_end(&self) -> WordId {
        self.sent_end
    }

    pub fn unknown(&self) -> WordId {
        self.unknown
    }

    pub fn sb_tag(&self) -> TagId {
        self.sb_tag
    }

    pub fn se_tag(&self) -> TagId {
        self.se_tag
    }

    /// Maps a word to its index, falling back to the unknown marker.
    pub fn word_id(&self, word: &str) -> WordId {
        self.word_index.get(word).copied().unwrap_or(self.unknown)
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.word_index.contains_key(word)
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    pub fn tag_id(&self, tag: &str) -> Option<TagId> {
        self.tag_index.get(tag).copied()
    }

    pub fn tag(&self, id: TagId) -> &str {
        &self.tags[id as usize]
    }

    pub fn label_id(&self, label: &str) -> Option<LabelId> {
        self.label_index.get(label).copied()
    }

    pub fn label(&self, id: LabelId) -> &str {
        &self.labels[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn sym_of_tag(&self, tag: TagId) -> SymId {
        tag
    }

    pub fn sym_of_label(&self, label: LabelId) -> SymId {
        self.tags.len() as SymId + label
    }

    pub fn sym_is_tag(&self, sym: SymId) -> bool {
        (sym as usize) < self.tags.len()
    }

    /// Renders a shared-space symbol as its tag or label string.
    pub fn sym(&self, sym: SymId) -> &str {
        if self.sym_is_tag(sym) {
            &self.tags[sym as usize]
        } else {
            &self.labels[sym as usize - self.tags.len()]
        }
    }

    /// Maps a sentence to word indices; out-of-vocabulary words map to the
    /// unknown marker.
    pub fn map_sentence<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<WordId> {
        sentence.iter().map(|w| self.word_id(w.as_ref())).collect()
    }

    /// Fraction of tokens mapped to the unknown marker. Empty input is 0.
    pub fn oov_rate<S: AsRef<str>>(&self, sentences: &[Vec<S>]) -> f64 {
        let mut total = 0usize;
        let mut oov = 0usize;
        for s in sentences {
            for w in s {
                total += 1;
                if !self.contains_word(w.as_ref()) {
                    oov += 1;
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            oov as f64 / total as f64
        }
    }

    /// Deterministic text rendering of the three symbol lists.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "WORDS {}", self.words.len());
        for w in &self.words {
            let _ = writeln!(out, "{w}");
        }
        let _ = writeln!(out, "TAGS {}", self.tags.len());
        for t in &self.tags {
            let _ = writeln!(out, "{t}");
        }
        let _ = writeln!(out, "LABELS {}", self.labels.len());
        for l in &self.labels {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

fn index_symbols<S: AsRef<str>>(
    items: &[S],
    kind: &str,
) -> Result<(Vec<String>, HashMap<String, u32>)> {
    let mut list = Vec::with_capacity(items.len());
    let mut index = HashMap::new();
    for s in items {
        let s = s.as_ref();
        if index.contains_key(s) {
            return Err(SlmError::Vocab(format!("duplicate {kind} {s:?}")));
        }
        index.insert(s.to_string(), list.len() as u32);
        list.push(s.to_string());
    }
    Ok((list, index))
}

pub fn parse_word_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Single-token rewrite table applied before vocabulary mapping, e.g.
/// `don't -> do n't`.
#[derive(Debug, Clone, Default)]
pub struct RetokenizeRules {
    rules: HashMap<String, Vec<String>>,
}

impl RetokenizeRules {
    pub fn new() -> RetokenizeRules {
        RetokenizeRules::default()
    }

    pub fn insert(&mut self, token: &str, replacement: &[&str]) {
        self.rules.insert(
            token.to_string(),
            replacement.iter().map(|s| s.to_string()).collect(),
        );
    }

    /// Parses a two-column table: token, TAB, space-separated replacement.
    pub fn parse(text: &str) -> Result<RetokenizeRules> {
        let mut rules = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, rest) = line.split_once('\t').ok_or_else(|| {
                SlmError::Format(format!(
                    "retokenization line {}: missing tab separator",
                    i + 1
                ))
            })?;
            let replacement: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            if token.is_empty() || replacement.is_empty() {
                return Err(SlmError::Format(format!(
                    "retokenization line {}: empty token or replacement",
                    i + 1
                )));
            }
            rules.insert(token.to_string(), replacement);
        }
        Ok(RetokenizeRules { rules })
    }

    pub fn load(path: &Path) -> Result<RetokenizeRules> {
        RetokenizeRules::parse(&std::fs::read_to_string(path)?)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Applies the rewrite table pointwise; unmatched tokens pass through.
pub fn retokenize<S: AsRef<str>>(sentence: &[S], rules: &RetokenizeRules) -> Vec<String> {
    let mut out = Vec::with_capacity(sentence.len());
    for token in sentence {
        let token = token.as_ref();
        match rules.rules.get(token) {
            Some(replacement) => out.extend(replacement.iter().cloned()),
            None => out.push(token.to_string()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_rules() -> RetokenizeRules {
        let mut r = RetokenizeRules::new();
        r.insert("don't", &["do", "n't"]);
        r
    }

    #[test]
    fn retokenize_rewrites_matching_token() {
        assert_eq!(retokenize(&["don't"], &toy_rules()), vec!["do", "n't"]);
    }

    #[test]
    fn retokenize_identity_on_unmatched() {
        assert_eq!(retokenize(&["flight"], &toy_rules()), vec!["flight"]);
    }

    #[test]
    fn retokenize_applies_pointwise_preserving_order() {
        assert_eq!(
            retokenize(&["i", "don't", "fly"], &toy_rules()),
            vec!["i", "do", "n't", "fly"]
        );
    }

    #[test]
    fn retokenize_table_parses_and_rejects_bad_lines() {
        let r = RetokenizeRules::parse("don't\tdo n't\n# comment\n").unwrap();
        assert_eq!(retokenize(&["don't"], &r), vec!["do", "n't"]);
        assert!(RetokenizeRules::parse("broken line no tab").is_err());
    }

    #[test]
    fn map_sentence_in_vocabulary() {
        let v = Vocabulary::new(&["flight"], &["NN"], &["S"]).unwrap();
        assert_eq!(v.map_sentence(&["flight"]), vec![v.word_id("flight")]);
        assert_ne!(v.word_id("flight"), v.unknown());
    }

    #[test]
    fn map_sentence_forces_oov_to_unknown() {
        let v = Vocabulary::new(&["flight"], &["NN"], &["S"]).unwrap();
        assert_eq!(v.map_sentence(&["zyzzyva"]), vec![v.unknown()]);
    }

    #[test]
    fn map_sentence_empty() {
        let v = Vocabulary::new(&["flight"], &["NN"], &["S"]).unwrap();
        let empty: [&str; 0] = [];
        assert_eq!(v.map_sentence(&empty), Vec::<WordId>::new());
    }

    #[test]
    fn markers_are_members_and_stable() {
        let v = Vocabulary::new(&["a", "b"], &["T"], &["X"]).unwrap();
        assert_eq!(v.word(v.sent_begin()), SENT_BEGIN);
        assert_eq!(v.word(v.sent_end()), SENT_END);
        assert_eq!(v.word(v.unknown()), UNKNOWN);
        assert_eq!(v.word_id("a"), 0);
        assert_eq!(v.word_id("b"), 1);
    }

    #[test]
    fn marker_tags_fall_back_to_tag_zero() {
        let v = Vocabulary::new(&["a"], &["T"], &["X"]).unwrap();
        assert_eq!(v.sb_tag(), 0);
        assert_eq!(v.se_tag(), 0);
        let v2 = Vocabulary::new(&["a"], &["NN", "SB", "SE"], &["X"]).unwrap();
        assert_eq!(v2.tag(v2.sb_tag()), "SB");
        assert_eq!(v2.tag(v2.se_tag()), "SE");
    }

    #[test]
    fn shared_symbol_space_has_disjoint_ranges() {
        let v = Vocabulary::new(&["a"], &["NN", "VB"], &["S", "NP"]).unwrap();
        assert_eq!(v.sym(v.sym_of_tag(1)), "VB");
        assert_eq!(v.sym(v.sym_of_label(0)), "S");
        assert!(v.sym_is_tag(1));
        assert!(!v.sym_is_tag(v.sym_of_label(1)));
    }

    #[test]
    fn oov_rate_counts_unknown_fraction() {
        let v = Vocabulary::new(&["a", "b"], &["T"], &["X"]).unwrap();
        let sents = vec![vec!["a", "q"], vec!["b", "b"]];
        assert!((v.oov_rate(&sents) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn word_file_skips_comments() {
        let words = parse_word_lines("# header\nflight\n\nleaves\n");
        assert_eq!(words, vec!["flight", "leaves"]);
    }

    #[test]
    fn duplicate_word_rejected() {
        assert!(Vocabulary::new(&["a", "a"], &["T"], &["X"]).is_err());
    }
}
