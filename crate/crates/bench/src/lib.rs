//! Shared fixtures for the benchmarks.

use biastrace::cooc::{self, CoocMatrix};
use biastrace::corpus::{build_vocabulary, Corpus, Vocabulary};
use biastrace::glove::{self, GloveModel, Hyperparams};
use biastrace::metrics::{ResolvedWeat, WeatSpec};
use biastrace::synth::{self, SynthConfig, DESK_MIN_COUNT};

pub struct Fixture {
    pub corpus: Corpus,
    pub vocab: Vocabulary,
    pub spec: ResolvedWeat,
    pub x: CoocMatrix,
    pub hyper: Hyperparams,
}

/// The desk corpus cut down to `n_docs` documents.
pub fn fixture(n_docs: usize) -> Fixture {
    let weat = WeatSpec::weat1();
    let config = SynthConfig {
        n_docs,
        ..SynthConfig::default()
    };
    let corpus = synth::generate(&config, &weat).expect("valid config").corpus;
    let vocab = build_vocabulary(&corpus, DESK_MIN_COUNT).expect("nonempty vocabulary");
    let hyper = synth::desk_hyperparams();
    let x = cooc::extract_cooc(&corpus, &vocab, hyper.window).expect("valid window");
    Fixture {
        spec: weat.resolve(&vocab).expect("bias words present"),
        corpus,
        vocab,
        x,
        hyper,
    }
}

pub fn trained(f: &Fixture, epochs: usize) -> GloveModel {
    let hyper = Hyperparams { epochs, ..f.hyper };
    glove::train(&f.x, &hyper, f.vocab.checksum()).expect("trainable").model
}
