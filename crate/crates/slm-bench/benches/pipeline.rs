use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use slm_bench::bench_model;
use slm_core::em::{e_step, EmOptions};
use slm_core::estimation::EstimationOptions;
use slm_core::eval::{edit_counts, oracle_wer};
use slm_core::ngram::{SentenceScorer, SlmLm};
use slm_core::search::{best_parse, SearchParams};
use slm_core::synth;

fn bench_search(c: &mut Criterion) {
    let (model, sentences) = bench_model(200, 71);
    let params = SearchParams::default();
    c.bench_function("best_parse/default_beam", |b| {
        let mut it = sentences.iter().cycle();
        b.iter(|| {
            let s = it.next().unwrap();
            black_box(best_parse(&model, s, &params).unwrap())
        });
    });
    c.bench_function("sentence_logprob/default_beam", |b| {
        let lm = SlmLm {
            model: &model,
            params,
        };
        let mut it = sentences.iter().cycle();
        b.iter(|| {
            let s = it.next().unwrap();
            black_box(lm.word_probs(s).unwrap())
        });
    });
}

fn bench_em(c: &mut Criterion) {
    let (model, sentences) = bench_model(100, 73);
    let opts = EmOptions {
        estimation: EstimationOptions::with_seed(73),
        ..Default::default()
    };
    c.bench_function("e_step/100_sentences", |b| {
        b.iter_batched(
            || (),
            |_| black_box(e_step(&model, &sentences, &opts).unwrap()),
            BatchSize::SmallInput,
        );
    });
}

fn bench_wer(c: &mut Criterion) {
    let words = synth::travel_lexicon().words();
    let lists = synth::sample_nbest(&words, 50, 10, 99);
    c.bench_function("oracle_wer/50x10", |b| {
        b.iter(|| black_box(oracle_wer(&lists)));
    });
    let reference: Vec<String> = (0..30).map(|i| words[i % words.len()].clone()).collect();
    let mut hypothesis = reference.clone();
    hypothesis[7] = words[0].clone();
    hypothesis.remove(19);
    c.bench_function("edit_counts/30_words", |b| {
        b.iter(|| black_box(edit_counts(&reference, &hypothesis)));
    });
}

criterion_group!(benches, bench_search, bench_em, bench_wer);
criterion_main!(benches);
