//! Head-percolation rule tables and headword annotation.
//!
//! Rule file format, one rule per line:
//!
//! ```text
//! LABEL ltr|rtl child1 child2 ...
//! ```
//!
//! For a node labeled `LABEL`, children are scanned in the given direction
//! for the first priority entry that matches a child label or tag; with no
//! match (or no rule) the direction-first child is taken. Leaves head
//! themselves.

use std::collections::HashMap;
use std::path::Path;

use crate::bracketed::BracketedTree;
use crate::error::{Result, SlmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

#[derive(Debug, Clone)]
pub struct HeadRule {
    pub direction: Direction,
    pub priorities: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct HeadRules {
    rules: HashMap<String, HeadRule>,
}

/// A reasonable Penn-Treebank-flavored default table.
pub const DEFAULT_HEAD_RULES: &str = "\
S rtl VP S SBAR ADJP UCP NP
SBAR ltr S SQ SINV SBAR FRAG IN WHNP
SBARQ ltr SQ S SINV SBARQ FRAG
SINV ltr VBZ VBD VBP VB MD VP S SINV ADJP NP
SQ ltr VBZ VBD VBP VB MD VP SQ
NP rtl NN NNP NNPS NNS NX POS JJR NP
NX rtl NN NNP NNPS NNS NX
PP rtl IN TO VBG VBN RP FW
VP ltr VBD VBN MD VBZ VB VBG VBP VP ADJP NN NNS NP
ADJP rtl NNS QP NN $ ADVP JJ VBN VBG ADJP JJR
ADVP rtl RB RBR RBS FW ADVP TO CD JJR JJ IN NP JJS NN
CONJP rtl CC RB IN
FRAG rtl NN NP VP S
INTJ ltr UH
LST rtl LS :
NAC ltr NN NNS NNP NNPS NP NAC
PRN ltr S SINV SBAR NP VP PP
PRT rtl RP
QP ltr $ IN NNS NN JJ RB DT CD NCD QP JJR JJS
RRC rtl VP NP ADVP ADJP PP
UCP rtl CC
WHADJP ltr CC WRB JJ ADJP
WHADVP rtl CC WRB
WHNP ltr WDT WP WP$ WHADJP WHPP WHNP
WHPP rtl IN TO FW
X rtl X
";

impl HeadRules {
    pub fn parse(text: &str) -> Result<HeadRules> {
        let mut rules = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let label = fields.next().unwrap().to_string();
            let direction = match fields.next() {
                Some("ltr") => Direction::LeftToRight,
                Some("rtl") => Direction::RightToLeft,
                other => {
                    return Err(SlmError::Format(format!(
                        "head-rule line {}: direction must be ltr or rtl, found {other:?}",
                        i + 1
                    )))
                }
            };
            let priorities: Vec<String> = fields.map(str::to_string).collect();
            rules.insert(
                label,
                HeadRule {
                    direction,
                    priorities,
                },
            );
        }
        Ok(HeadRules { rules })
    }

    pub fn load(path: &Path) -> Result<HeadRules> {
        HeadRules::parse(&std::fs::read_to_string(path)?)
    }

    pub fn default_table() -> HeadRules {
        HeadRules::parse(DEFAULT_HEAD_RULES).expect("builtin table parses")
    }

    /// Index of the head child among `child_labels` for a parent `label`.
    pub fn select(&self, label: &str, child_labels: &[&str]) -> usize {
        debug_assert!(!child_labels.is_empty());
        let rule = self.rules.get(label);
        let direction = rule.map(|r| r.direction).unwrap_or(Direction::LeftToRight);
        if let Some(rule) = rule {
            for want in &rule.priorities {
                let found = match direction {
                    Direction::LeftToRight => child_labels.iter().position(|c| c == want),
                    Direction::RightToLeft => child_labels.iter().rposition(|c| c == want),
                };
                if let Some(i) = found {
                    return i;
                }
            }
        }
        match direction {
            Direction::LeftToRight => 0,
            Direction::RightToLeft => child_labels.len() - 1,
        }
    }
}

/// A bracketed tree annotated with headword information. `head_word` is the
/// percolated surface word; `head_source` is the label or tag of the child
/// it was taken from (the tag itself for leaves); `head_child` its index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadedTree {
    pub label: String,
    pub head_word: String,
    pub head_source: String,
    pub head_child: usize,
    pub children: Vec<HeadedTree>,
    pub leaf: Option<(String, String)>,
}

impl HeadedTree {
    pub fn is_leaf(&self) -> bool {
        self.leaf.is_some()
    }

    /// The (headword, label) annotation pair.
    pub fn head(&self) -> (&str, &str) {
        (&self.head_word, &self.head_source)
    }
}

/// Annotates every node with the head selected by the rule table.
pub fn percolate_headwords(tree: &BracketedTree, rules: &HeadRules) -> HeadedTree {
    match tree {
        BracketedTree::Leaf { tag, word } => HeadedTree {
            label: tag.clone(),
            head_word: word.clone(),
            head_source: tag.clone(),
            head_child: 0,
            children: Vec::new(),
            leaf: Some((tag.clone(), word.clone())),
        },
        BracketedTree::Node { label, children } => {
            let annotated: Vec<HeadedTree> = children
                .iter()
                .map(|c| percolate_headwords(c, rules))
                .collect();
            let child_labels: Vec<&str> = annotated.iter().map(|c| c.label.as_str()).collect();
            let head_child = rules.select(label, &child_labels);
            let head_word = annotated[head_child].head_word.clone();
            let head_source = annotated[head_child].label.clone();
            HeadedTree {
                label: label.clone(),
                head_word,
                head_source,
                head_child,
                children: annotated,
                leaf: None,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracketed::parse_bracketed;

    fn toy_rules() -> HeadRules {
        HeadRules::parse("NP rtl NN\nS ltr VP\n").unwrap()
    }

    #[test]
    fn leaf_heads_itself() {
        let t = parse_bracketed("(NN flight)").unwrap();
        let h = percolate_headwords(&t, &toy_rules());
        assert_eq!(h.head(), ("flight", "NN"));
    }

    #[test]
    fn np_rule_prefers_nn() {
        let t = parse_bracketed("(NP (DT a) (NN flight))").unwrap();
        let h = percolate_headwords(&t, &toy_rules());
        assert_eq!(h.head(), ("flight", "NN"));
        assert_eq!(h.head_child, 1);
    }

    #[test]
    fn s_rule_prefers_vp() {
        let t = parse_bracketed("(S (NP (DT a) (NN flight)) (VP (VB leaves)))").unwrap();
        let h = percolate_headwords(&t, &toy_rules());
        assert_eq!(h.head(), ("leaves", "VP"));
        assert_eq!(h.head_child, 1);
    }

    #[test]
    fn fallback_takes_direction_first_child() {
        let rules = HeadRules::parse("NP rtl ZZZ\n").unwrap();
        let t = parse_bracketed("(NP (DT a) (NN flight))").unwrap();
        let h = percolate_headwords(&t, &rules);
        // rtl with no match: rightmost child.
        assert_eq!(h.head(), ("flight", "NN"));
        // No rule at all: leftmost child.
        let t2 = parse_bracketed("(QQ (DT a) (NN flight))").unwrap();
        let h2 = percolate_headwords(&t2, &rules);
        assert_eq!(h2.head(), ("a", "DT"));
    }

    #[test]
    fn builtin_table_parses() {
        let rules = HeadRules::default_table();
        assert_eq!(rules.select("S", &["NP", "VP"]), 1);
    }

    #[test]
    fn bad_direction_rejected() {
        assert!(HeadRules::parse("NP sideways NN\n").is_err());
    }
}
