use biastrace::cooc;
use biastrace::glove::{self, Hyperparams};
use biastrace::influence::{InfluenceEngine, InfluenceOptions};
use biastrace::ppmi::{PpmiOptions, PpmiScanner};
use biastrace_bench::{fixture, trained};
use criterion::{criterion_group, criterion_main, Criterion};

fn extraction(c: &mut Criterion) {
    let f = fixture(500);
    c.bench_function("extract_cooc/500_docs", |b| {
        b.iter(|| cooc::extract_cooc(&f.corpus, &f.vocab, f.hyper.window).unwrap())
    });
}

fn training(c: &mut Criterion) {
    let f = fixture(500);
    let one_epoch = Hyperparams { epochs: 1, ..f.hyper };
    let mut g = c.benchmark_group("train");
    g.sample_size(10);
    g.bench_function("one_epoch/500_docs", |b| {
        b.iter(|| glove::train(&f.x, &one_epoch, f.vocab.checksum()).unwrap())
    });
    g.finish();
}

fn scans(c: &mut Criterion) {
    let f = fixture(500);
    let models = vec![trained(&f, 10)];
    let engine = InfluenceEngine::new(&f.x, &f.vocab, &models, &f.spec, InfluenceOptions::default()).unwrap();
    let ppmi = PpmiScanner::new(&f.x, &f.vocab, &f.spec, f.hyper.window, PpmiOptions::default()).unwrap();
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    g.bench_function("influence/500_docs", |b| b.iter(|| engine.scan(&f.corpus)));
    g.bench_function("ppmi/500_docs", |b| b.iter(|| ppmi.scan(&f.corpus)));
    g.finish();
}

criterion_group!(benches, extraction, training, scans);
criterion_main!(benches);
