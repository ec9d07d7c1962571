//! Fixture builders shared by the criterion benchmarks.

use slm_core::estimation::{ingest_treebank, initialize, EstimationOptions};
use slm_core::headrules::HeadRules;
use slm_core::model::SlmModel;
use slm_core::synth;
use slm_core::vocab::WordId;

pub fn bench_rules() -> HeadRules {
    HeadRules::parse("S ltr VP S NP\nNP rtl NN NP\nVP ltr VB VP\nPP ltr IN\n").unwrap()
}

/// A trained toy model plus mapped sentences for decoding benchmarks.
pub fn bench_model(n_trees: usize, seed: u64) -> (SlmModel, Vec<Vec<WordId>>) {
    let trees = synth::sample_treebank(&synth::travel_lexicon(), n_trees, seed);
    let (vocab, indexed) =
        ingest_treebank(&trees, &bench_rules(), &synth::travel_lexicon().words()).unwrap();
    let model = initialize(&indexed, vocab, &EstimationOptions::with_seed(seed)).unwrap();
    let sentences = indexed.iter().map(|t| t.yield_words()).collect();
    (model, sentences)
}
