//! Shared fixtures for the criterion benches.

use cocite_core::shuffle::build_groups;
use cocite_core::synth::{generate, SynthConfig};
use cocite_core::{Background, Corpus, GroupSet};

/// A local synthetic corpus of roughly `citations` citations
/// (3 disciplines, 20 references per publication on average).
pub fn corpus_with_citations(citations: usize, seed: u64) -> Corpus {
    let cfg = SynthConfig {
        pubs_per_discipline: (citations / 60).max(1),
        seed,
        ..SynthConfig::default()
    };
    generate(&cfg)
        .expect("valid synth config")
        .corpus
        .with_background(Background::Local)
}

pub fn local_groups(corpus: &Corpus) -> GroupSet {
    build_groups(corpus, corpus).expect("corpus is its own pool")
}
