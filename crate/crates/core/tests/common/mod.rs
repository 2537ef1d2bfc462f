#![allow(dead_code)]

use biastrace::cooc::{self, CoocMatrix};
use biastrace::corpus::{build_vocabulary, Corpus, Vocabulary};
use biastrace::glove::{self, GloveModel, Hyperparams};
use biastrace::metrics::{ResolvedWeat, WeatSpec};
use biastrace::synth::{self, SynthConfig};

pub struct Small {
    pub corpus: Corpus,
    pub vocab: Vocabulary,
    pub x: CoocMatrix,
    pub spec: ResolvedWeat,
    pub hyper: Hyperparams,
    pub models: Vec<GloveModel>,
}

pub fn small_config() -> SynthConfig {
    SynthConfig {
        n_docs: 240,
        filler_words: 300,
        topic_words: 30,
        min_len: 30,
        max_len: 80,
        ..SynthConfig::default()
    }
}

pub fn small_hyper() -> Hyperparams {
    Hyperparams {
        dim: 8,
        epochs: 25,
        x_max: 10.0,
        learning_rate: 0.1,
        window: 5,
        ..Hyperparams::default()
    }
}

/// A few hundred synthetic documents with `n_models` trained models.
pub fn small(n_models: usize) -> Small {
    let spec = WeatSpec::weat1();
    let corpus = synth::generate(&small_config(), &spec).unwrap().corpus;
    let vocab = build_vocabulary(&corpus, 2).unwrap();
    let hyper = small_hyper();
    let x = cooc::extract_cooc(&corpus, &vocab, hyper.window).unwrap();
    let models = (0..n_models as u64)
        .map(|s| glove::train(&x, &hyper.with_seed(s), vocab.checksum()).unwrap().model)
        .collect();
    Small {
        spec: spec.resolve(&vocab).unwrap(),
        corpus,
        vocab,
        x,
        hyper,
        models,
    }
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}
