//! Syntactic language modeling toolkit.
//!
//! The model assigns a joint probability to a sentence and a binary parse
//! built incrementally by three conditional components: a word predictor,
//! a tagger, and a parser that combines adjacent constituents. Components
//! are deleted-interpolation tables initialized from a treebank and
//! reestimated with an N-best EM loop; decoding uses a synchronous
//! multi-stack beam search. Evaluation covers perplexity, N-best
//! rescoring, and word error rate against a trigram baseline.

pub mod binarize;
pub mod bracketed;
pub mod component;
pub mod derivation;
pub mod em;
pub mod error;
pub mod estimation;
pub mod eval;
pub mod headrules;
pub mod model;
pub mod modelfile;
pub mod ngram;
pub mod search;
pub mod synth;
pub mod tree;
pub mod vocab;

pub use component::{ComponentModel, WeightEmOptions};
pub use error::{Result, SlmError};
pub use model::{Action, DerivationMode, ExposedHead, SlmModel};
pub use search::{SearchParams, StackSet};
pub use tree::TreeNode;
pub use vocab::Vocabulary;
