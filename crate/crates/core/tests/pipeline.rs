mod common;

use biastrace::cooc::{self, WordMask};
use biastrace::corpus::{build_vocabulary, load_corpus, parse_index, Corpus, LoadOptions, RecordSeparator, Vocabulary};
use biastrace::synth;
use common::small_config;
use proptest::prelude::*;

fn synth_text() -> String {
    let spec = biastrace::WeatSpec::weat1();
    synth::generate(&small_config(), &spec).unwrap().to_text()
}

#[test]
fn corpus_file_round_trip_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.txt");
    let text = synth_text();
    std::fs::write(&path, &text).unwrap();
    let corpus = load_corpus(&path, &LoadOptions::default()).unwrap();
    assert_eq!(corpus.len(), small_config().n_docs);
    let index = parse_index(&corpus.index_string()).unwrap();
    for (entry, doc) in index.iter().zip(corpus.documents()) {
        let raw = &text.as_bytes()[entry.span.range()];
        assert_eq!(std::str::from_utf8(raw).unwrap(), doc.tokens.join(" "));
        assert_eq!(entry.token_count, doc.tokens.len());
    }
}

#[test]
fn separators_and_length_filters() {
    let text = b"a b c\nd e\n\nf\n\n\ng h i j\n";
    let blank = Corpus::parse(text, &LoadOptions::default());
    assert_eq!(blank.len(), 3);
    assert_eq!(blank.get(0).unwrap().tokens, ["a", "b", "c", "d", "e"]);
    let lines = Corpus::parse(
        text,
        &LoadOptions {
            separator: RecordSeparator::Line,
            ..LoadOptions::default()
        },
    );
    assert_eq!(lines.len(), 4);
    let filtered = Corpus::parse(
        text,
        &LoadOptions {
            min_len: 2,
            max_len: 4,
            separator: RecordSeparator::Line,
        },
    );
    assert_eq!(filtered.len(), 3);
    assert_eq!(filtered.get(2).unwrap().tokens, ["g", "h", "i", "j"]);
    assert_eq!(filtered.get(2).unwrap().doc_id, 2);
}

#[test]
fn vocabulary_round_trip() {
    let corpus = Corpus::parse(synth_text().as_bytes(), &LoadOptions::default());
    let vocab = build_vocabulary(&corpus, 3).unwrap();
    assert!(vocab.counts().iter().all(|&c| c >= 3));
    assert!(vocab.counts().windows(2).all(|w| w[0] >= w[1]));
    let back = Vocabulary::parse(&vocab.to_file_string()).unwrap();
    assert_eq!(back.words(), vocab.words());
    assert_eq!(back.checksum(), vocab.checksum());
    assert!(build_vocabulary(&corpus, u64::MAX).is_err());
}

#[test]
fn cooc_serialization_is_exact() {
    let corpus = Corpus::parse(synth_text().as_bytes(), &LoadOptions::default());
    let vocab = build_vocabulary(&corpus, 2).unwrap();
    let x = cooc::extract_cooc(&corpus, &vocab, 5).unwrap();
    assert!(x.is_symmetric());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.bin");
    cooc::serialize(&x, &p).unwrap();
    let y = cooc::deserialize(&p).unwrap();
    assert_eq!(cooc::to_bytes(&x), cooc::to_bytes(&y));
    let mut bytes = cooc::to_bytes(&x);
    bytes.truncate(bytes.len() - 3);
    assert!(cooc::from_bytes(&bytes).is_err());
}

#[test]
fn removal_equals_re_extraction_bit_for_bit() {
    let corpus = Corpus::parse(synth_text().as_bytes(), &LoadOptions::default());
    let vocab = build_vocabulary(&corpus, 2).unwrap();
    let window = 7;
    let x = cooc::extract_cooc(&corpus, &vocab, window).unwrap();
    let removed = [0usize, 5, 17, 18, 101, 239];
    let mut x_tilde = x.clone();
    for &id in &removed {
        let d = cooc::doc_cooc_rows(corpus.get(id).unwrap(), &vocab, window, &WordMask::all(vocab.len())).unwrap();
        x_tilde = cooc::apply_removal(&x_tilde, &d).unwrap();
    }
    let fresh = cooc::extract_cooc(&corpus.without(&removed).unwrap(), &vocab, window).unwrap();
    assert_eq!(cooc::to_bytes(&x_tilde), cooc::to_bytes(&fresh));
}

#[test]
fn requantize_matches_extraction_at_the_new_window_scale() {
    let corpus = Corpus::parse(synth_text().as_bytes(), &LoadOptions::default());
    let vocab = build_vocabulary(&corpus, 2).unwrap();
    let x5 = cooc::extract_cooc(&corpus, &vocab, 5).unwrap();
    let x10 = x5.requantize(10).unwrap();
    assert_eq!(x10.scale(), cooc::harmonic_scale(10).unwrap() as f64);
    for (i, j, w) in x5.entries() {
        assert_eq!(x10.weight(i, j), w);
    }
    assert!(cooc::harmonic_scale(0).is_err());
    assert!(cooc::harmonic_scale(17).is_err());
}

fn token_docs() -> impl Strategy<Value = Vec<Vec<String>>> {
    let word = prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]).prop_map(String::from);
    prop::collection::vec(prop::collection::vec(word, 1..12), 2..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cooc_is_additive_over_documents(docs in token_docs(), window in 1usize..8) {
        let corpus = Corpus::from_documents(docs);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let x = cooc::extract_cooc(&corpus, &vocab, window).unwrap();
        let mut sum = cooc::CoocMatrix::empty(vocab.len(), cooc::harmonic_scale(window).unwrap() as f64);
        for d in corpus.documents() {
            let part = cooc::extract_cooc(&Corpus::from_documents(vec![d.tokens.clone()]), &vocab, window).unwrap();
            sum = sum.sum(&part).unwrap();
        }
        prop_assert_eq!(cooc::to_bytes(&sum), cooc::to_bytes(&x));
        prop_assert!(x.is_symmetric());
    }

    #[test]
    fn removal_then_addition_restores(docs in token_docs(), pick in 0usize..10, window in 1usize..8) {
        let corpus = Corpus::from_documents(docs);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let x = cooc::extract_cooc(&corpus, &vocab, window).unwrap();
        let doc = corpus.get(pick % corpus.len()).unwrap();
        let d = cooc::doc_cooc_rows(doc, &vocab, window, &WordMask::all(vocab.len())).unwrap();
        let back = cooc::apply_addition(&cooc::apply_removal(&x, &d).unwrap(), &d).unwrap();
        prop_assert_eq!(cooc::to_bytes(&back), cooc::to_bytes(&x));
    }
}
