//! Experimental protocol: baseline ensembles, perturbation sets, ground-truth
//! retraining and the statistics used to compare approximations with it.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::cooc::{self, CoocMatrix};
use crate::corpus::{tokenize, Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::glove::{self, GloveModel, Hyperparams};
use crate::influence::{mean_std, DiffBiasRecord, InfluenceEngine, InfluenceOptions};
use crate::linalg::{dot, norm};
use crate::metrics::{self, ResolvedWeat, StdDev};
use crate::ppmi::{PpmiOptions, PpmiScanner};

/// Trains `n_seeds` models on the same matrix with seeds `hyper.seed + k`.
pub fn train_baselines(x: &CoocMatrix, vocab: &Vocabulary, hyper: &Hyperparams, n_seeds: usize) -> Result<Vec<GloveModel>> {
    if n_seeds == 0 {
        return Err(Error::InvalidArgument("n_seeds must be ≥ 1".into()));
    }
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|k| hyper.seed.wrapping_add(k)).collect();
    train_seeds(x, vocab, hyper, &seeds)
}

fn train_seeds(x: &CoocMatrix, vocab: &Vocabulary, hyper: &Hyperparams, seeds: &[u64]) -> Result<Vec<GloveModel>> {
    let hash = vocab.checksum();
    seeds
        .par_iter()
        .map(|&s| glove::train(x, &hyper.with_seed(s), hash).map(|out| out.model))
        .collect()
}

/// Per-seed effect sizes with their mean and (sample) standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub seeds: Vec<u64>,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std: Option<f64>,
}

impl EffectSummary {
    pub fn from_samples(seeds: Vec<u64>, per_seed: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&per_seed);
        EffectSummary { seeds, per_seed, mean, std }
    }
}

pub fn effect_summary(models: &[GloveModel], spec: &ResolvedWeat, kind: StdDev) -> Result<EffectSummary> {
    let per_seed = models
        .iter()
        .map(|m| metrics::weat_effect_size_with(&m.w, spec, kind))
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectSummary::from_samples(models.iter().map(|m| m.hyper.seed).collect(), per_seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Increase,
    Random,
    Decrease,
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetKind::Increase => "increase",
            SetKind::Random => "random",
            SetKind::Decrease => "decrease",
        })
    }
}

impl FromStr for SetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "increase" => Ok(SetKind::Increase),
            "random" => Ok(SetKind::Random),
            "decrease" => Ok(SetKind::Decrease),
            _ => Err(Error::InvalidArgument(format!("unknown set kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationSet {
    /// `kind-size`, with a `-n` suffix when a size has several random sets.
    pub name: String,
    pub kind: SetKind,
    /// Sorted ascending.
    pub doc_ids: Vec<usize>,
    pub seed: Option<u64>,
}

impl PerturbationSet {
    pub fn size(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: "perturbation set",
            line: e.line(),
            reason: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("set serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Documents ranked by approximated differential bias, largest first.
/// Records that failed are left out.
fn ranked(records: &[DiffBiasRecord], descending: bool) -> Vec<usize> {
    let mut rows: Vec<(f64, usize)> = records
        .iter()
        .filter(|r| r.error.is_none() && r.delta_b.is_finite())
        .map(|r| (r.delta_b, r.doc_id))
        .collect();
    rows.sort_by(|a, b| {
        let by_value = if descending { b.0.total_cmp(&a.0) } else { a.0.total_cmp(&b.0) };
        by_value.then(a.1.cmp(&b.1))
    });
    rows.into_iter().map(|(_, id)| id).collect()
}

/// The `k` documents whose removal is predicted to lower bias the most.
pub fn top_k(records: &[DiffBiasRecord], k: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = ranked(records, true).into_iter().take(k).collect();
    ids.sort_unstable();
    ids
}

/// For each size `s`: `decrease-s` holds the `s` documents with the largest
/// Δ (removing them lowers bias), `increase-s` the `s` most negative. Ties go
/// to the lower doc id. `n_random` uniform sets are spread over the sizes
/// round-robin, the k-th drawn with seed `seed + k`.
pub fn make_perturbation_sets(
    records: &[DiffBiasRecord],
    sizes: &[usize],
    n_random: usize,
    seed: u64,
) -> Result<Vec<PerturbationSet>> {
    let n_docs = records.len();
    let mut seen = vec![false; n_docs];
    for r in records {
        if r.doc_id >= n_docs || std::mem::replace(&mut seen[r.doc_id], true) {
            return Err(Error::InvalidArgument("scan records must cover each document exactly once".into()));
        }
    }
    let down = ranked(records, true);
    let up = ranked(records, false);
    let mut sets = Vec::new();
    for &s in sizes {
        if s > n_docs {
            return Err(Error::InvalidArgument(format!("set size {s} exceeds the corpus ({n_docs} documents)")));
        }
        if s == n_docs {
            log::warn!("set size {s} equals the corpus size");
        }
        if s > down.len() {
            return Err(Error::InvalidArgument(format!(
                "set size {s} exceeds the {} documents with a usable estimate",
                down.len()
            )));
        }
        for (kind, order) in [(SetKind::Decrease, &down), (SetKind::Increase, &up)] {
            let mut doc_ids = order[..s].to_vec();
            doc_ids.sort_unstable();
            sets.push(PerturbationSet {
                name: format!("{kind}-{s}"),
                kind,
                doc_ids,
                seed: None,
            });
        }
    }
    if n_random > 0 && sizes.is_empty() {
        return Err(Error::InvalidArgument("random sets need at least one size".into()));
    }
    let per_size = n_random.div_ceil(sizes.len().max(1));
    for k in 0..n_random {
        let s = sizes[k % sizes.len()];
        let rep = k / sizes.len() + 1;
        let set_seed = seed.wrapping_add(k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(set_seed);
        let mut doc_ids = index::sample(&mut rng, n_docs, s).into_vec();
        doc_ids.sort_unstable();
        let name = if per_size > 1 { format!("random-{s}-{rep}") } else { format!("random-{s}") };
        sets.push(PerturbationSet {
            name,
            kind: SetKind::Random,
            doc_ids,
            seed: Some(set_seed),
        });
    }
    Ok(sets)
}

/// Ground truth for one set: the effect size of models trained on the
/// corpus with the set removed. Co-occurrences are re-extracted from
/// scratch with the vocabulary frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub set: String,
    pub kind: Option<SetKind>,
    pub n_removed: usize,
    pub effect: EffectSummary,
    pub hyper: Hyperparams,
}

impl GroundTruth {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: "ground truth",
            line: e.line(),
            reason: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("ground truth serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Retrains on `corpus` minus `doc_ids` for each seed.
pub fn ground_truth(
    corpus: &Corpus,
    vocab: &Vocabulary,
    doc_ids: &[usize],
    hyper: &Hyperparams,
    seeds: &[u64],
    spec: &ResolvedWeat,
    kind: StdDev,
) -> Result<EffectSummary> {
    let x = perturbed_cooc(corpus, vocab, doc_ids, hyper.window)?;
    let models = train_seeds(&x, vocab, hyper, seeds)?;
    effect_summary(&models, spec, kind)
}

fn perturbed_cooc(corpus: &Corpus, vocab: &Vocabulary, doc_ids: &[usize], window: usize) -> Result<CoocMatrix> {
    let reduced = corpus.without(doc_ids)?;
    cooc::extract_cooc(&reduced, vocab, window)
}

/// Unequal-variance t statistic and two-sided p value.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateSample("Welch's test needs at least two samples per group".into()));
    }
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    let (va, vb) = (sa.unwrap().powi(2), sb.unwrap().powi(2));
    if va == 0.0 || vb == 0.0 {
        return Err(Error::DegenerateSample("Welch's test needs nonzero variance in both groups".into()));
    }
    let (qa, qb) = (va / a.len() as f64, vb / b.len() as f64);
    let t = (ma - mb) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (a.len() - 1) as f64 + qb * qb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::DegenerateSample(e.to_string()))?;
    let p = 2.0 * dist.cdf(-t.abs());
    Ok((t, p.min(1.0)))
}

/// Squared Pearson correlation.
pub fn r_squared(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} x values, {} y values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateSample("r² needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateSample("x is constant".into()));
    }
    if syy == 0.0 {
        return Err(Error::DegenerateSample("y is constant".into()));
    }
    Ok((sxy * sxy / (sxx * syy)).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogyResult {
    pub correct: usize,
    pub attempted: usize,
    pub skipped: usize,
    pub accuracy: f64,
}

/// Top-1 accuracy on `a b c d` questions: the answer is the word nearest to
/// `ŵ_b − ŵ_a + ŵ_c` among unit vectors, excluding `a`, `b` and `c`. Lines
/// starting with `:` are section headers. Words go through the corpus
/// tokenizer, so case is folded.
pub fn analogy_eval(w: &glove::Vectors, vocab: &Vocabulary, questions: &str) -> Result<AnalogyResult> {
    let unit: Vec<Vec<f64>> = (0..w.len())
        .map(|i| {
            let v = w.row(i);
            let n = norm(v);
            if n > 0.0 {
                v.iter().map(|x| x / n).collect()
            } else {
                v.to_vec()
            }
        })
        .collect();
    let mut parsed = Vec::new();
    let mut skipped = 0;
    for (n, line) in questions.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(':') {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 4 {
            return Err(Error::Parse {
                what: "analogy questions",
                line: n + 1,
                reason: format!("expected 4 words, found {}", words.len()),
            });
        }
        let ids: Option<Vec<u32>> = words
            .iter()
            .map(|w| {
                let t = tokenize(w);
                if t.len() == 1 {
                    vocab.id(&t[0])
                } else {
                    None
                }
            })
            .collect();
        match ids {
            Some(ids) => parsed.push([ids[0], ids[1], ids[2], ids[3]]),
            None => skipped += 1,
        }
    }
    if parsed.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no analogy question could be attempted ({skipped} skipped as out of vocabulary)"
        )));
    }
    let correct = parsed
        .par_iter()
        .filter(|&&[a, b, c, d]| {
            let mut q = unit[b as usize].clone();
            for (k, x) in q.iter_mut().enumerate() {
                *x += unit[c as usize][k] - unit[a as usize][k];
            }
            let mut best = (f64::NEG_INFINITY, u32::MAX);
            for (i, v) in unit.iter().enumerate() {
                let i = i as u32;
                if i == a || i == b || i == c {
                    continue;
                }
                let s = dot(&q, v);
                if s > best.0 {
                    best = (s, i);
                }
            }
            best.1 == d
        })
        .count();
    Ok(AnalogyResult {
        correct,
        attempted: parsed.len(),
        skipped,
        accuracy: correct as f64 / parsed.len() as f64,
    })
}

/// Approximation for one set: Δ per baseline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetApprox {
    pub set: String,
    pub kind: Option<SetKind>,
    pub size: usize,
    pub delta_per_model: Vec<f64>,
    pub delta_mean: f64,
    pub delta_std: Option<f64>,
}

pub fn approx_csv_string(rows: &[SetApprox]) -> String {
    let mut out = String::from("set,kind,size,delta_b_mean,delta_b_std,n_seeds\n");
    for r in rows {
        let kind = r.kind.map(|k| k.to_string()).unwrap_or_default();
        let std = r.delta_std.map(|s| s.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.set,
            kind,
            r.size,
            r.delta_mean,
            std,
            r.delta_per_model.len()
        ));
    }
    out
}

#[derive(Deserialize)]
struct ApproxRow {
    set: String,
    kind: String,
    size: usize,
    delta_b_mean: f64,
    delta_b_std: Option<f64>,
    n_seeds: usize,
}

/// Reads an approximation table; per-model values are not stored, so
/// `delta_per_model` comes back empty.
pub fn read_approx_csv(path: &Path) -> Result<Vec<SetApprox>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        what: "approximation CSV",
        line: 0,
        reason: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (n, row) in rdr.deserialize::<ApproxRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            what: "approximation CSV",
            line: n + 2,
            reason: e.to_string(),
        })?;
        let _ = row.n_seeds;
        out.push(SetApprox {
            set: row.set,
            kind: if row.kind.is_empty() { None } else { Some(row.kind.parse()?) },
            size: row.size,
            delta_per_model: Vec::new(),
            delta_mean: row.delta_b_mean,
            delta_std: row.delta_b_std,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetOutcome {
    pub set: String,
    pub kind: Option<SetKind>,
    pub size: usize,
    /// Baseline mean effect minus the approximated Δ.
    pub approx_effect: f64,
    pub approx_delta_mean: f64,
    pub approx_delta_std: Option<f64>,
    pub truth: EffectSummary,
    pub t: Option<f64>,
    pub p: Option<f64>,
    /// The ground-truth shift has the predicted sign: up for increase sets,
    /// down for decrease sets, the approximation's sign otherwise.
    pub direction_ok: bool,
}

impl SetOutcome {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p.is_some_and(|p| p < alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpmiComparison {
    pub k: usize,
    pub influence_set: String,
    pub ppmi_doc_ids: Vec<usize>,
    pub influence_reduction: f64,
    pub ppmi_reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: Option<ProtocolConfig>,
    pub baseline: EffectSummary,
    pub sets: Vec<SetOutcome>,
    /// Over sets having both an approximation and a ground truth.
    pub r_squared: Option<f64>,
    pub ppmi: Vec<PpmiComparison>,
}

/// Joins approximations with ground truths by set name and computes the
/// statistics. Every set must appear on both sides.
pub fn assemble_report(baseline: &EffectSummary, approx: &[SetApprox], truths: &[GroundTruth]) -> Result<ExperimentReport> {
    let mut by_name: HashMap<&str, &GroundTruth> = HashMap::new();
    for t in truths {
        if by_name.insert(t.set.as_str(), t).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate ground truth for set {:?}", t.set)));
        }
    }
    if approx.len() != truths.len() {
        return Err(Error::InvalidArgument(format!(
            "{} approximations but {} ground truths",
            approx.len(),
            truths.len()
        )));
    }
    let mut sets = Vec::with_capacity(approx.len());
    for a in approx {
        let truth = by_name
            .get(a.set.as_str())
            .ok_or_else(|| Error::InvalidArgument(format!("no ground truth for set {:?}", a.set)))?;
        let (t, p) = match welch_t(&truth.effect.per_seed, &baseline.per_seed) {
            Ok((t, p)) => (Some(t), Some(p)),
            Err(_) => (None, None),
        };
        let shift = truth.effect.mean - baseline.mean;
        // Targeted sets are predicted to move bias by construction; other
        // sets in the direction of their approximation.
        let predicted = match a.kind {
            Some(SetKind::Increase) => 1.0,
            Some(SetKind::Decrease) => -1.0,
            _ => -a.delta_mean,
        };
        sets.push(SetOutcome {
            set: a.set.clone(),
            kind: a.kind,
            size: a.size,
            approx_effect: baseline.mean - a.delta_mean,
            approx_delta_mean: a.delta_mean,
            approx_delta_std: a.delta_std,
            truth: truth.effect.clone(),
            t,
            p,
            direction_ok: shift * predicted > 0.0,
        });
    }
    let r2 = if sets.len() >= 2 {
        let x: Vec<f64> = sets.iter().map(|s| s.approx_effect).collect();
        let y: Vec<f64> = sets.iter().map(|s| s.truth.mean).collect();
        r_squared(&x, &y).ok()
    } else {
        None
    };
    Ok(ExperimentReport {
        config: None,
        baseline: baseline.clone(),
        sets,
        r_squared: r2,
        ppmi: Vec::new(),
    })
}

/// One row per set, for plotting approximations against ground truth.
pub fn outcomes_csv_string(report: &ExperimentReport) -> String {
    let mut out = String::from("set,kind,size,approx_effect,truth_mean,truth_std,approx_delta_mean,approx_delta_std,t,p\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in &report.sets {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.set,
            s.kind.map(|k| k.to_string()).unwrap_or_default(),
            s.size,
            s.approx_effect,
            s.truth.mean,
            opt(s.truth.std),
            s.approx_delta_mean,
            opt(s.approx_delta_std),
            opt(s.t),
            opt(s.p)
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub hyper: Hyperparams,
    pub n_baseline: usize,
    pub n_retrain: usize,
    /// Retrain seeds are `hyper.seed + retrain_seed_offset + k`.
    pub retrain_seed_offset: u64,
    pub sizes: Vec<usize>,
    pub n_random: usize,
    pub set_seed: u64,
    pub influence: InfluenceOptions,
    /// Top-k sizes for the PPMI comparison; empty skips it.
    pub ppmi_top_k: Vec<usize>,
    pub ppmi: PpmiOptions,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            hyper: Hyperparams::default(),
            n_baseline: 5,
            n_retrain: 3,
            retrain_seed_offset: 1000,
            sizes: vec![10, 30, 50, 100],
            n_random: 4,
            set_seed: 0,
            influence: InfluenceOptions::default(),
            ppmi_top_k: vec![10, 30],
            ppmi: PpmiOptions::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn retrain_seeds(&self) -> Vec<u64> {
        (0..self.n_retrain as u64)
            .map(|k| self.hyper.seed.wrapping_add(self.retrain_seed_offset).wrapping_add(k))
            .collect()
    }
}

/// Everything a protocol run produced, for inspection beyond the report.
pub struct ProtocolRun {
    pub report: ExperimentReport,
    pub baselines: Vec<GloveModel>,
    pub scan: Vec<DiffBiasRecord>,
    pub sets: Vec<PerturbationSet>,
    pub approx: Vec<SetApprox>,
}

/// Baselines, scan, set construction, approximation and ground truth, with
/// all retraining jobs run concurrently.
pub fn run_protocol(corpus: &Corpus, vocab: &Vocabulary, spec: &ResolvedWeat, config: &ProtocolConfig) -> Result<ProtocolRun> {
    let hyper = &config.hyper;
    let x = cooc::extract_cooc(corpus, vocab, hyper.window)?;
    log::info!("protocol: {} documents, V = {}, nnz = {}", corpus.len(), vocab.len(), x.nnz());
    let baselines = train_baselines(&x, vocab, hyper, config.n_baseline)?;
    let baseline = effect_summary(&baselines, spec, config.influence.std_dev)?;
    log::info!("baseline effect size {:.4} ± {:?}", baseline.mean, baseline.std);

    let engine = InfluenceEngine::new(&x, vocab, &baselines, spec, config.influence)?;
    let scan = engine.scan(corpus);
    let sets = make_perturbation_sets(&scan, &config.sizes, config.n_random, config.set_seed)?;
    let approx = sets
        .iter()
        .map(|s| {
            let est = engine.estimate_set(corpus, &s.doc_ids)?;
            Ok(SetApprox {
                set: s.name.clone(),
                kind: Some(s.kind),
                size: s.size(),
                delta_per_model: est.per_model,
                delta_mean: est.mean,
                delta_std: est.std,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // PPMI top-k sets; the matching influence top-k are the decrease sets.
    let mut ppmi_sets = Vec::new();
    if !config.ppmi_top_k.is_empty() {
        let scanner = PpmiScanner::new(&x, vocab, spec, hyper.window, config.ppmi)?;
        let ppmi_scan = scanner.scan(corpus);
        for &k in &config.ppmi_top_k {
            ppmi_sets.push((k, top_k(&ppmi_scan, k)));
        }
    }
    let mut removals: Vec<Vec<usize>> = sets.iter().map(|s| s.doc_ids.clone()).collect();
    let ppmi_index: Vec<usize> = ppmi_sets
        .iter()
        .map(|(_, ids)| match removals.iter().position(|r| r == ids) {
            Some(p) => p,
            None => {
                removals.push(ids.clone());
                removals.len() - 1
            }
        })
        .collect();

    let seeds = config.retrain_seeds();
    let kind = config.influence.std_dev;
    let matrices = removals
        .par_iter()
        .map(|ids| perturbed_cooc(corpus, vocab, ids, hyper.window))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..removals.len()).flat_map(|r| seeds.iter().map(move |&s| (r, s))).collect();
    let hash = vocab.checksum();
    let effects = jobs
        .par_iter()
        .map(|&(r, s)| {
            let model = glove::train(&matrices[r], &hyper.with_seed(s), hash)?.model;
            metrics::weat_effect_size_with(&model.w, spec, kind)
        })
        .collect::<Result<Vec<f64>>>()?;
    let summaries: Vec<EffectSummary> = effects
        .chunks(seeds.len())
        .map(|c| EffectSummary::from_samples(seeds.clone(), c.to_vec()))
        .collect();

    let truths: Vec<GroundTruth> = sets
        .iter()
        .zip(&summaries)
        .map(|(s, e)| GroundTruth {
            set: s.name.clone(),
            kind: Some(s.kind),
            n_removed: s.size(),
            effect: e.clone(),
            hyper: *hyper,
        })
        .collect();
    let mut report = assemble_report(&baseline, &approx, &truths)?;
    for ((k, ids), &r) in ppmi_sets.iter().zip(&ppmi_index) {
        let name = format!("{}-{k}", SetKind::Decrease);
        let influence = sets
            .iter()
            .position(|s| s.name == name)
            .map(|p| &summaries[p])
            .ok_or_else(|| Error::InvalidArgument(format!("PPMI comparison at k = {k} needs set size {k}")))?;
        report.ppmi.push(PpmiComparison {
            k: *k,
            influence_set: name,
            ppmi_doc_ids: ids.clone(),
            influence_reduction: baseline.mean - influence.mean,
            ppmi_reduction: baseline.mean - summaries[r].mean,
        });
    }
    report.config = Some(config.clone());
    Ok(ProtocolRun {
        report,
        baselines,
        scan,
        sets,
        approx,
    })
}
