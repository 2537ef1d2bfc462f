use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use biastrace::bias_gradient;
use biastrace::cooc::{self, CoocMatrix};
use biastrace::corpus::{self, Corpus, Vocabulary};
use biastrace::glove::{self, GloveModel};
use biastrace::harness::{self, EffectSummary, GroundTruth, PerturbationSet, ProtocolConfig, SetApprox};
use biastrace::influence::{self, DiffBiasRecord, InfluenceEngine, InfluenceOptions};
use biastrace::metrics::{self, ResolvedWeat, WeatSpec};
use biastrace::ppmi::{self, PpmiOptions};
use biastrace::synth::{self, SynthConfig};
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::provenance;
use crate::{CorpusArgs, HyperArgs, StdDevArg};

fn load_corpus(args: &CorpusArgs) -> Result<Corpus> {
    let c = corpus::load_corpus(&args.corpus, &args.options())
        .with_context(|| format!("loading corpus {}", args.corpus.display()))?;
    log::info!("{} documents, {} tokens", c.len(), c.token_count());
    Ok(c)
}

/// A WEAT spec file, or the name of a bundled test (`weat1`, `weat2`).
fn load_spec(arg: &str) -> Result<WeatSpec> {
    let path = Path::new(arg);
    if path.exists() {
        return WeatSpec::load(path).with_context(|| format!("loading WEAT spec {arg}"));
    }
    match arg {
        "weat1" => Ok(WeatSpec::weat1()),
        "weat2" => Ok(WeatSpec::weat2()),
        _ => bail!("WEAT spec {arg} is neither a file nor a bundled test (weat1, weat2)"),
    }
}

fn load_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::load(path).with_context(|| format!("loading vocabulary {}", path.display()))
}

/// Models plus the vocabulary they were trained with: `vocab` if given,
/// else the word order of the first embedding file.
fn load_models(paths: &[PathBuf], vocab: Option<&Path>) -> Result<(Vec<GloveModel>, Vocabulary)> {
    ensure!(!paths.is_empty(), "at least one model is required");
    let mut models = Vec::with_capacity(paths.len());
    let mut words = None;
    for p in paths {
        let loaded = glove::load_embeddings(p).with_context(|| format!("loading model {}", p.display()))?;
        if words.is_none() {
            words = Some(loaded.vocabulary()?);
        }
        models.push(loaded.model);
    }
    let vocab = match vocab {
        Some(p) => load_vocab(p)?,
        None => words.expect("at least one model"),
    };
    for (m, p) in models.iter().zip(paths) {
        m.check_vocab(&vocab).with_context(|| format!("model {}", p.display()))?;
    }
    Ok((models, vocab))
}

/// Reads a co-occurrence file back onto the lattice of `window`.
fn load_cooc(path: &Path, window: usize) -> Result<CoocMatrix> {
    let x = cooc::deserialize(path).with_context(|| format!("loading co-occurrences {}", path.display()))?;
    x.requantize(window)
        .with_context(|| format!("co-occurrences {} do not match window {window}", path.display()))
}

fn resolve(spec: &WeatSpec, vocab: &Vocabulary) -> Result<ResolvedWeat> {
    spec.resolve(vocab).context("resolving WEAT words")
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &serde_json::to_string_pretty(value)?)
}

/// JSON files named directly or found in the given directories.
fn json_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    let name = f.file_name().and_then(|n| n.to_str()).unwrap_or("");
                    name.ends_with(".json") && !name.ends_with("meta.json")
                })
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

#[derive(Args, Debug, Serialize)]
pub struct VocabArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn vocab(a: VocabArgs) -> Result<()> {
    let c = load_corpus(&a.corpus)?;
    let v = corpus::build_vocabulary(&c, a.min_count)?;
    v.save(&a.out)?;
    log::info!("{} words with count ≥ {}", v.len(), a.min_count);
    provenance::record(&a.out, "vocab", &a)
}

#[derive(Args, Debug, Serialize)]
pub struct CoocArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = 8)]
    window: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the document index (`doc_id start len tokens`).
    #[arg(long)]
    index: Option<PathBuf>,
}

pub fn cooc(a: CoocArgs) -> Result<()> {
    let c = load_corpus(&a.corpus)?;
    let v = load_vocab(&a.vocab)?;
    let x = cooc::extract_cooc(&c, &v, a.window)?;
    log::info!("V = {}, {} nonzero entries", x.vocab_size(), x.nnz());
    cooc::serialize(&x, &a.out)?;
    if let Some(p) = &a.index {
        c.write_index(p)?;
    }
    provenance::record(&a.out, "cooc", &a)
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    cooc: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss as CSV.
    #[arg(long)]
    losses: Option<PathBuf>,
}

pub fn train(a: TrainArgs) -> Result<()> {
    let hyper = a.hyper.resolve(a.seed);
    let v = load_vocab(&a.vocab)?;
    let x = load_cooc(&a.cooc, hyper.window)?;
    ensure!(x.vocab_size() == v.len(), "vocabulary has {} words, co-occurrences V = {}", v.len(), x.vocab_size());
    let out = glove::train(&x, &hyper, v.checksum())?;
    log::info!("final epoch loss {:.6e}", out.epoch_losses.last().copied().unwrap_or(f64::NAN));
    glove::save_embeddings(&out.model, &v, &a.out)?;
    if let Some(p) = &a.losses {
        let mut text = String::from("epoch,loss\n");
        for (e, l) in out.epoch_losses.iter().enumerate() {
            text.push_str(&format!("{},{l}\n", e + 1));
        }
        write(p, &text)?;
    }
    provenance::record(&a.out, "train", &(&a, hyper))
}

#[derive(Args, Debug, Serialize)]
pub struct WeatArgs {
    /// One or more embedding files.
    #[arg(long = "model", alias = "models", num_args = 1.., required = true)]
    models: Vec<PathBuf>,
    #[arg(long)]
    spec: String,
    #[arg(long, value_enum, default_value = "sample")]
    std_dev: StdDevArg,
    /// Also print per-target projection bias onto the A−B direction.
    #[arg(long)]
    projection: bool,
    /// Write the effect-size summary as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn weat(a: WeatArgs) -> Result<()> {
    let (models, v) = load_models(&a.models, None)?;
    let spec = resolve(&load_spec(&a.spec)?, &v)?;
    let summary = harness::effect_summary(&models, &spec, a.std_dev.into())?;
    for (seed, e) in summary.seeds.iter().zip(&summary.per_seed) {
        println!("seed {seed}: {e:.6}");
    }
    match summary.std {
        Some(s) => println!("effect size {:.6} ± {s:.6} over {} models", summary.mean, models.len()),
        None => println!("effect size {:.6}", summary.mean),
    }
    if a.projection {
        let targets: Vec<u32> = spec.s.iter().chain(&spec.t).copied().collect();
        let proj = metrics::projection_bias(&models[0].w, &spec, &targets)?;
        for (id, p) in targets.iter().zip(proj) {
            println!("{}\t{p:.6}", spec.word(*id));
        }
    }
    if let Some(out) = &a.out {
        write_json(out, &summary)?;
        provenance::record(out, "weat", &a)?;
    }
    Ok(())
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Influence,
    Ppmi,
}

#[derive(Args, Debug, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    cooc: PathBuf,
    /// Baseline models (influence method).
    #[arg(long = "models", alias = "model", num_args = 1..)]
    models: Vec<PathBuf>,
    /// Vocabulary file; defaults to the word order of the first model.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    spec: String,
    #[arg(long, value_enum, default_value = "influence")]
    method: Method,
    /// Extra Hessian damping.
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, value_enum, default_value = "sample")]
    std_dev: StdDevArg,
    /// Window for the PPMI method when no model says otherwise.
    #[arg(long, default_value_t = 8)]
    window: usize,
    /// Context-distribution exponent for the PPMI method.
    #[arg(long, default_value_t = 1.0)]
    ppmi_alpha: f64,
    #[arg(long)]
    out: PathBuf,
    /// Histogram of the per-document values as CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    bins: usize,
}

pub fn scan(a: ScanArgs) -> Result<()> {
    let c = load_corpus(&a.corpus)?;
    let spec_file = load_spec(&a.spec)?;
    let records: Vec<DiffBiasRecord> = match a.method {
        Method::Influence => {
            let (models, v) = load_models(&a.models, a.vocab.as_deref())?;
            let spec = resolve(&spec_file, &v)?;
            let x = load_cooc(&a.cooc, models[0].hyper.window)?;
            let opts = InfluenceOptions {
                damping: a.damping,
                std_dev: a.std_dev.into(),
            };
            InfluenceEngine::new(&x, &v, &models, &spec, opts)?.scan(&c)
        }
        Method::Ppmi => {
            let v = match (&a.vocab, a.models.is_empty()) {
                (Some(p), _) => load_vocab(p)?,
                (None, false) => load_models(&a.models, None)?.1,
                (None, true) => bail!("the PPMI scan needs --vocab (or a model to take it from)"),
            };
            let spec = resolve(&spec_file, &v)?;
            let x = load_cooc(&a.cooc, a.window)?;
            let opts = PpmiOptions {
                context_alpha: a.ppmi_alpha,
                std_dev: a.std_dev.into(),
            };
            ppmi::ppmi_diff_scan(&c, &v, &x, &spec, a.window, opts)?
        }
    };
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} documents could not be scored");
    }
    let method = match a.method {
        Method::Influence => "influence",
        Method::Ppmi => "ppmi",
    };
    influence::write_scan_csv(&records, &a.out, Some(method))?;
    if let Some(p) = &a.histogram {
        let values: Vec<f64> = records.iter().map(|r| r.delta_b).collect();
        write(p, &influence::histogram_csv_string(&influence::histogram(&values, a.bins)))?;
    }
    provenance::record(&a.out, "scan", &a)
}

#[derive(Args, Debug, Serialize)]
pub struct PerturbArgs {
    #[arg(long)]
    scan: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "10,30,50,100")]
    sizes: Vec<usize>,
    /// Total number of random sets, spread over the sizes.
    #[arg(long, default_value_t = 4)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, one JSON file per set.
    #[arg(long)]
    out: PathBuf,
}

pub fn perturb(a: PerturbArgs) -> Result<()> {
    let rows = influence::read_scan_csv(&a.scan)?;
    let records: Vec<DiffBiasRecord> = rows
        .into_iter()
        .map(|r| DiffBiasRecord {
            doc_id: r.doc_id,
            per_seed: Vec::new(),
            delta_b: r.delta_b_mean,
            std: r.delta_b_std,
            weat_words_touched: r.weat_words_touched,
            error: (!r.delta_b_mean.is_finite()).then(|| "no estimate".to_string()),
        })
        .collect();
    let sets = harness::make_perturbation_sets(&records, &a.sizes, a.random, a.seed)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for s in &sets {
        s.save(&a.out.join(format!("{}.json", s.name)))?;
    }
    log::info!("wrote {} sets to {}", sets.len(), a.out.display());
    provenance::record(&a.out, "perturb", &a)
}

#[derive(Args, Debug, Serialize)]
pub struct ApproxArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    cooc: PathBuf,
    #[arg(long = "models", alias = "model", num_args = 1.., required = true)]
    models: Vec<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    spec: String,
    /// Set files, or directories of them.
    #[arg(long, num_args = 1.., required = true)]
    sets: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, value_enum, default_value = "sample")]
    std_dev: StdDevArg,
    #[arg(long)]
    out: PathBuf,
}

pub fn approx(a: ApproxArgs) -> Result<()> {
    let c = load_corpus(&a.corpus)?;
    let (models, v) = load_models(&a.models, a.vocab.as_deref())?;
    let spec = resolve(&load_spec(&a.spec)?, &v)?;
    let x = load_cooc(&a.cooc, models[0].hyper.window)?;
    let opts = InfluenceOptions {
        damping: a.damping,
        std_dev: a.std_dev.into(),
    };
    let engine = InfluenceEngine::new(&x, &v, &models, &spec, opts)?;
    let mut rows = Vec::new();
    for p in json_files(&a.sets)? {
        let set = PerturbationSet::load(&p)?;
        let est = engine.estimate_set(&c, &set.doc_ids)?;
        rows.push(SetApprox {
            set: set.name.clone(),
            kind: Some(set.kind),
            size: set.size(),
            delta_per_model: est.per_model,
            delta_mean: est.mean,
            delta_std: est.std,
        });
    }
    write(&a.out, &harness::approx_csv_string(&rows))?;
    provenance::record(&a.out, "approx", &a)
}

#[derive(Args, Debug, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// The vocabulary of the unperturbed corpus, kept fixed.
    #[arg(long)]
    vocab: PathBuf,
    /// Perturbation set to remove; without it nothing is removed.
    #[arg(long)]
    set: Option<PathBuf>,
    /// Number of models to train.
    #[arg(long, default_value_t = 3)]
    seeds: usize,
    /// Models use seeds `seed + seed_offset + k`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    seed_offset: u64,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    spec: String,
    #[arg(long, value_enum, default_value = "sample")]
    std_dev: StdDevArg,
    #[arg(long)]
    out: PathBuf,
}

pub fn validate(a: ValidateArgs) -> Result<()> {
    let c = load_corpus(&a.corpus)?;
    let v = load_vocab(&a.vocab)?;
    let spec = resolve(&load_spec(&a.spec)?, &v)?;
    let hyper = a.hyper.resolve(a.seed);
    let set = match &a.set {
        Some(p) => Some(PerturbationSet::load(p)?),
        None => None,
    };
    let ids = set.as_ref().map(|s| s.doc_ids.clone()).unwrap_or_default();
    let seeds: Vec<u64> = (0..a.seeds as u64).map(|k| a.seed.wrapping_add(a.seed_offset).wrapping_add(k)).collect();
    let effect = harness::ground_truth(&c, &v, &ids, &hyper, &seeds, &spec, a.std_dev.into())?;
    println!("effect size without {} documents: {:.6} (std {:?})", ids.len(), effect.mean, effect.std);
    let truth = GroundTruth {
        set: set.as_ref().map_or_else(|| "none".to_string(), |s| s.name.clone()),
        kind: set.as_ref().map(|s| s.kind),
        n_removed: ids.len(),
        effect,
        hyper,
    };
    truth.save(&a.out)?;
    provenance::record(&a.out, "validate", &a)
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    approx: PathBuf,
    /// Ground-truth files, or directories of them.
    #[arg(long, num_args = 1.., required = true)]
    truth: Vec<PathBuf>,
    /// Baseline effect summary as written by `weat --out`.
    #[arg(long, conflicts_with = "models")]
    baseline: Option<PathBuf>,
    /// Baseline models, as an alternative to --baseline.
    #[arg(long, num_args = 1..)]
    models: Vec<PathBuf>,
    /// Needed with --models.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// One row per set for plotting.
    #[arg(long)]
    sets_csv: Option<PathBuf>,
}

pub fn report(a: ReportArgs) -> Result<()> {
    let baseline: EffectSummary = match (&a.baseline, a.models.is_empty()) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        (None, false) => {
            let Some(spec) = &a.spec else { bail!("--models needs --spec") };
            let (models, v) = load_models(&a.models, None)?;
            harness::effect_summary(&models, &resolve(&load_spec(spec)?, &v)?, Default::default())?
        }
        (None, true) => bail!("give the baseline with --baseline or --models"),
    };
    let approx = harness::read_approx_csv(&a.approx)?;
    let truths = json_files(&a.truth)?
        .iter()
        .map(|p| GroundTruth::load(p))
        .collect::<biastrace::Result<Vec<_>>>()?;
    let report = harness::assemble_report(&baseline, &approx, &truths)?;
    for s in &report.sets {
        println!(
            "{:<16} approx {:+.4}  truth {:+.4}  t {:>8}  p {:>8}  direction {}",
            s.set,
            s.approx_effect,
            s.truth.mean,
            s.t.map_or("-".into(), |t| format!("{t:.3}")),
            s.p.map_or("-".into(), |p| format!("{p:.4}")),
            if s.direction_ok { "ok" } else { "wrong" }
        );
    }
    if let Some(r2) = report.r_squared {
        println!("r² = {r2:.4}");
    }
    write_json(&a.out, &report)?;
    if let Some(p) = &a.sets_csv {
        write(p, &harness::outcomes_csv_string(&report))?;
    }
    provenance::record(&a.out, "report", &a)
}

#[derive(Args, Debug, Serialize)]
pub struct GradientArgs {
    #[arg(long)]
    cooc: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, value_enum, default_value = "sample")]
    std_dev: StdDevArg,
    #[arg(long)]
    out: PathBuf,
}

pub fn gradient(a: GradientArgs) -> Result<()> {
    let (models, v) = load_models(std::slice::from_ref(&a.model), a.vocab.as_deref())?;
    let spec = resolve(&load_spec(&a.spec)?, &v)?;
    let x = load_cooc(&a.cooc, models[0].hyper.window)?;
    let opts = InfluenceOptions {
        damping: a.damping,
        std_dev: a.std_dev.into(),
    };
    let g = bias_gradient::bias_gradient(&x, &models[0], &spec, opts)?;
    log::info!("{} entries over {} rows", g.len(), g.rows.len());
    bias_gradient::write_gradient_csv(&g, &a.out)?;
    provenance::record(&a.out, "gradient", &(&a, g.model_ref))
}

#[derive(Args, Debug, Serialize)]
pub struct AnalogyArgs {
    #[arg(long)]
    model: PathBuf,
    /// `a b c d` lines; `:` lines are section headers.
    #[arg(long)]
    questions: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn analogy(a: AnalogyArgs) -> Result<()> {
    let (models, v) = load_models(std::slice::from_ref(&a.model), None)?;
    let text = fs::read_to_string(&a.questions).with_context(|| format!("reading {}", a.questions.display()))?;
    let r = harness::analogy_eval(&models[0].w, &v, &text)?;
    println!(
        "top-1 accuracy {:.2}% ({} of {} attempted, {} skipped)",
        100.0 * r.accuracy,
        r.correct,
        r.attempted,
        r.skipped
    );
    if let Some(out) = &a.out {
        write_json(out, &r)?;
        provenance::record(out, "analogy", &a)?;
    }
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    /// Generator settings as JSON; missing fields take the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_docs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Word sets to plant; defaults to weat1.
    #[arg(long, default_value = "weat1")]
    spec: String,
    #[arg(long)]
    out: PathBuf,
    /// Per-document generation labels as JSON.
    #[arg(long)]
    labels: Option<PathBuf>,
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let mut config: SynthConfig = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(n) = a.n_docs {
        config.n_docs = n;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    let generated = synth::generate(&config, &load_spec(&a.spec)?)?;
    write(&a.out, &generated.to_text())?;
    if let Some(p) = &a.labels {
        write_json(p, &generated.labels)?;
    }
    log::info!("{} documents, {} tokens", generated.corpus.len(), generated.corpus.token_count());
    provenance::record(&a.out, "synth", &(&a, &config))
}

#[derive(Args, Debug, Serialize)]
pub struct ProtocolArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Baseline models use seeds `seed + k`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    baseline_seeds: usize,
    #[arg(long, default_value_t = 3)]
    retrain_seeds: usize,
    #[arg(long, default_value_t = 1000)]
    seed_offset: u64,
    #[arg(long, value_delimiter = ',', default_value = "10,30,50,100")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    set_seed: u64,
    /// Top-k sizes for the PPMI comparison.
    #[arg(long, value_delimiter = ',', default_value = "10,30")]
    ppmi_top_k: Vec<usize>,
    /// Skip the PPMI comparison.
    #[arg(long)]
    no_ppmi: bool,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, value_enum, default_value = "sample")]
    std_dev: StdDevArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    sets_csv: Option<PathBuf>,
    /// Per-document scan of the baseline models.
    #[arg(long)]
    scan_out: Option<PathBuf>,
}

pub fn protocol(a: ProtocolArgs) -> Result<()> {
    let c = load_corpus(&a.corpus)?;
    let v = corpus::build_vocabulary(&c, a.min_count)?;
    let spec = resolve(&load_spec(&a.spec)?, &v)?;
    let config = ProtocolConfig {
        hyper: a.hyper.resolve(a.seed),
        n_baseline: a.baseline_seeds,
        n_retrain: a.retrain_seeds,
        retrain_seed_offset: a.seed_offset,
        sizes: a.sizes.clone(),
        n_random: a.random,
        set_seed: a.set_seed,
        influence: InfluenceOptions {
            damping: a.damping,
            std_dev: a.std_dev.into(),
        },
        ppmi_top_k: if a.no_ppmi { Vec::new() } else { a.ppmi_top_k.clone() },
        ppmi: PpmiOptions {
            std_dev: a.std_dev.into(),
            ..PpmiOptions::default()
        },
    };
    let run = harness::run_protocol(&c, &v, &spec, &config)?;
    let r = &run.report;
    println!("baseline effect size {:.4} (std {:?})", r.baseline.mean, r.baseline.std);
    for s in &r.sets {
        println!(
            "{:<16} approx {:+.4}  truth {:+.4}  p {:>8}  direction {}",
            s.set,
            s.approx_effect,
            s.truth.mean,
            s.p.map_or("-".into(), |p| format!("{p:.4}")),
            if s.direction_ok { "ok" } else { "wrong" }
        );
    }
    if let Some(r2) = r.r_squared {
        println!("r² = {r2:.4}");
    }
    for p in &r.ppmi {
        println!("top-{}: influence removes {:.4}, PPMI removes {:.4}", p.k, p.influence_reduction, p.ppmi_reduction);
    }
    write_json(&a.out, r)?;
    if let Some(p) = &a.sets_csv {
        write(p, &harness::outcomes_csv_string(r))?;
    }
    if let Some(p) = &a.scan_out {
        influence::write_scan_csv(&run.scan, p, Some("influence"))?;
    }
    provenance::record(&a.out, "protocol", &(&a, &config))
}
