//! Bracketed-parse reading and canonical serialization.
//!
//! Input trees are Penn-Treebank-style s-expressions with `(TAG word)`
//! leaves, one tree per line. Function tags and trace subtrees are
//! stripped on ingest.

use crate::error::{Result, SlmError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BracketedTree {
    Leaf {
        tag: String,
        word: String,
    },
    Node {
        label: String,
        children: Vec<BracketedTree>,
    },
}

impl BracketedTree {
    pub fn label(&self) -> &str {
        match self {
            BracketedTree::Leaf { tag, .. } => tag,
            BracketedTree::Node { label, .. } => label,
        }
    }

    /// Leaf (tag, word) pairs in surface order.
    pub fn yield_pairs(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        self.collect_yield(&mut out);
        out
    }

    fn collect_yield<'a>(&'a self, out: &mut Vec<(&'a str, &'a str)>) {
        match self {
            BracketedTree::Leaf { tag, word } => out.push((tag, word)),
            BracketedTree::Node { children, .. } => {
                for c in children {
                    c.collect_yield(out);
                }
            }
        }
    }

    /// Canonical single-space rendering; parses back to an equal tree.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s
    }

    fn write(&self, out: &mut String) {
        match self {
            BracketedTree::Leaf { tag, word } => {
                out.push('(');
                out.push_str(tag);
                out.push(' ');
                out.push_str(word);
                out.push(')');
            }
            BracketedTree::Node { label, children } => {
                out.push('(');
                out.push_str(label);
                for c in children {
                    out.push(' ');
                    c.write(out);
                }
                out.push(')');
            }
        }
    }
}

/// Parses one bracketed tree, reporting the character offset on failure.
pub fn parse_bracketed(text: &str) -> Result<BracketedTree> {
    let mut parser = Parser {
        chars: text.char_indices().peekable(),
        len: text.len(),
    };
    parser.skip_ws();
    let tree = parser.parse_tree()?;
    parser.skip_ws();
    if let Some(&(offset, _)) = parser.chars.peek() {
        return Err(err_at(offset, "trailing input after tree"));
    }
    Ok(tree)
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    len: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(&(_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn parse_tree(&mut self) -> Result<BracketedTree> {
        match self.chars.next() {
            Some((_, '(')) => {}
            Some((offset, c)) => return Err(err_at(offset, &format!("expected '(', found {c:?}"))),
            None => return Err(err_at(self.len, "expected '(', found end of input")),
        }
        self.skip_ws();
        let start = self.peek_offset();
        let head = self.parse_atom()?;
        self.skip_ws();
        match self.chars.peek() {
            Some(&(offset, ')')) => {
                // A single atom inside parens has no word/children.
                let _ = offset;
                Err(err_at(start, "node with a label but no children"))
            }
            Some(&(_, '(')) => {
                let mut children = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        Some(&(_, '(')) => children.push(self.parse_tree()?),
                        Some(&(_, ')')) => {
                            self.chars.next();
                            return Ok(BracketedTree::Node {
                                label: head,
                                children,
                            });
                        }
                        Some(&(offset, _)) => {
                            return Err(err_at(offset, "mixed atom among subtree children"))
                        }
                        None => return Err(err_at(self.len, "unbalanced parentheses")),
                    }
                }
            }
            Some(&(_, _)) => {
                let word = self.parse_atom()?;
                self.skip_ws();
                match self.chars.next() {
                    Some((_, ')')) => Ok(BracketedTree::Leaf { tag: head, word }),
                    Some((offset, _)) => Err(err_at(offset, "leaf must hold exactly two atoms")),
                    None => Err(err_at(self.len, "unbalanced parentheses")),
                }
            }
            None => Err(err_at(self.len, "unbalanced parentheses")),
        }
    }

    fn parse_atom(&mut self) -> Result<String> {
        let mut atom = String::new();
        while let Some(&(offset, c)) = self.chars.peek() {
            if c.is_whitespace() || c == '(' || c == ')' {
                break;
            }
            let _ = offset;
            atom.push(c);
            self.chars.next();
        }
        if atom.is_empty() {
            Err(err_at(self.peek_offset(), "empty node"))
        } else {
            Ok(atom)
        }
    }

    fn peek_offset(&mut self) -> usize {
        self.chars.peek().map(|&(o, _)| o).unwrap_or(self.len)
    }
}

fn err_at(offset: usize, message: &str) -> SlmError {
    SlmError::Parse {
        offset,
        message: message.to_string(),
    }
}

/// Reads one tree per non-empty line.
pub fn parse_tree_file(text: &str) -> Result<Vec<BracketedTree>> {
    let mut trees = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let tree =
            parse_bracketed(line).map_err(|e| SlmError::Format(format!("line {}: {e}", i + 1)))?;
        trees.push(tree);
    }
    Ok(trees)
}

/// Removes trace leaves (`-NONE-`) and function-tag/coindexation suffixes
/// (`NP-SBJ`, `NP=2`, `NP-1`). Returns `None` when the whole tree is empty
/// after trace removal.
pub fn strip_annotations(tree: &BracketedTree) -> Option<BracketedTree> {
    match tree {
        BracketedTree::Leaf { tag, word } => {
            if tag == "-NONE-" {
                None
            } else {
                Some(BracketedTree::Leaf {
                    tag: strip_label(tag),
                    word: word.clone(),
                })
            }
        }
        BracketedTree::Node { label, children } => {
            let kept: Vec<BracketedTree> = children.iter().filter_map(strip_annotations).collect();
            if kept.is_empty() {
                None
            } else {
                Some(BracketedTree::Node {
                    label: strip_label(label),
                    children: kept,
                })
            }
        }
    }
}

fn strip_label(label: &str) -> String {
    // Bracket-style tags (-LRB-, -NONE-) stay whole.
    if label.starts_with('-') {
        return label.to_string();
    }
    let cut = label.find(['-', '=']).unwrap_or(label.len());
    label[..cut].to_string()
}
