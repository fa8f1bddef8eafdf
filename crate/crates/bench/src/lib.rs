//! Shared fixtures for the benchmarks.

use nerkit_core::schemes::convert_corpus;
use nerkit_core::synth::{generate, SynthConfig, SynthData};
use nerkit_core::taggers::{surfaces_of, tag_corpus, train_unigram};
use nerkit_core::{Corpus, RepairPolicy, Scheme};

/// The default synthetic corpus.
pub fn data() -> SynthData {
    generate(&SynthConfig::default())
}

/// Gold BIOES tags and unigram-tagger output over the same sentences.
pub fn learning_pair(data: &SynthData, sentences: usize) -> (Corpus, Corpus) {
    let gold = convert_corpus(&data.train, Scheme::Bioes, RepairPolicy::Conll).expect("valid");
    let model = train_unigram(&gold).expect("non-empty");
    let gold = Corpus::new(gold.sentences[..sentences].to_vec(), Scheme::Bioes);
    let initial = tag_corpus(&model, &surfaces_of(&gold));
    (initial, gold)
}
