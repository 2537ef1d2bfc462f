//! Influence-function estimates of how removing documents changes bias.
//!
//! With `u`, `b`, `c` held fixed, the GloVe loss separates into one
//! quadratic per word vector, so the Hessian is block diagonal with D×D
//! blocks `H_i = Σ_j 2 f(X_ij) u_j u_jᵀ`. A perturbation of row `i` moves
//! `w_i` by `−H_i⁻¹ (∇L(X̃_i) − ∇L(X_i))`; only rows of bias-metric words
//! need to be evaluated. Gradients and Hessians are kept in V-normalized
//! form (the factor V in the point-wise loss cancels against the 1/V in
//! the update).

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cooc::{self, CoocDelta, CoocMatrix, WordMask, ZERO_EPS};
use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::glove::{weight_f, ContextParams, GloveModel, Hyperparams};
use crate::linalg::{axpy, dot, Cholesky, SquareMatrix};
use crate::metrics::{self, Overlay, ResolvedWeat, StdDev};

/// Relative damping floor: `λ ≥ 1e-8 · trace(H) / D`.
pub const RELATIVE_DAMPING: f64 = 1e-8;
/// Absolute damping used when the Hessian is exactly zero.
pub const ABSOLUTE_DAMPING: f64 = 1e-8;
const DAMPING_RETRIES: usize = 3;

/// V-normalized point-wise gradient `Σ_j 2 f(X_ij)(w_i·u_j + b_i + c_j − log X_ij) u_j`.
pub fn pointwise_grad(
    row: impl IntoIterator<Item = (u32, f64)>,
    w_i: &[f64],
    b_i: f64,
    ctx: &ContextParams,
    hyper: &Hyperparams,
) -> Vec<f64> {
    let mut g = vec![0.0; w_i.len()];
    for (j, x) in row {
        if x <= 0.0 {
            continue;
        }
        let u_j = ctx.u.row(j as usize);
        let r = dot(w_i, u_j) + b_i + ctx.c[j as usize] - x.ln();
        axpy(2.0 * weight_f(x, hyper) * r, u_j, &mut g);
    }
    g
}

/// The damped, factorized Hessian block of one word.
#[derive(Debug, Clone)]
pub struct WordSystem {
    pub word_id: u32,
    pub hessian: SquareMatrix,
    pub lambda: f64,
    factor: Cholesky,
}

impl WordSystem {
    /// Solves `(H + λI) x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor.solve(rhs)
    }

    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }
}

/// `H = Σ_j 2 f(X_ij) u_j u_jᵀ`, factorized with damping
/// `λ = max(damping, 1e-8 · trace(H) / D)` (escalated ×10 on failure).
pub fn word_hessian(
    word_id: u32,
    row: impl IntoIterator<Item = (u32, f64)>,
    u: &crate::glove::Vectors,
    damping: f64,
    hyper: &Hyperparams,
) -> Result<WordSystem> {
    if !(damping >= 0.0) {
        return Err(Error::InvalidArgument(format!("damping must be ≥ 0, got {damping}")));
    }
    let d = u.dim();
    let mut h = SquareMatrix::zeros(d);
    for (j, x) in row {
        let f = weight_f(x, hyper);
        if f > 0.0 {
            h.add_outer(2.0 * f, u.row(j as usize));
        }
    }
    let mut lambda = damping.max(RELATIVE_DAMPING * h.trace() / d as f64);
    if lambda == 0.0 {
        lambda = ABSOLUTE_DAMPING;
    }
    for attempt in 0..=DAMPING_RETRIES {
        let mut damped = h.clone();
        damped.add_diagonal(lambda);
        if let Some(factor) = Cholesky::factor(&damped) {
            return Ok(WordSystem {
                word_id,
                hessian: h,
                lambda,
                factor,
            });
        }
        if attempt < DAMPING_RETRIES {
            lambda *= 10.0;
        }
    }
    Err(Error::NotPositiveDefinite {
        word: format!("#{word_id}"),
        lambda,
    })
}

/// [`word_hessian`] on the unperturbed row of `i`, with errors naming the word.
pub(crate) fn named_word_system(
    spec: &ResolvedWeat,
    i: u32,
    x: &CoocMatrix,
    model: &GloveModel,
    damping: f64,
) -> Result<WordSystem> {
    let ctx = model.context()?;
    word_hessian(i, x.row(i), &ctx.u, damping, &model.hyper).map_err(|e| match e {
        Error::NotPositiveDefinite { lambda, .. } => Error::NotPositiveDefinite {
            word: spec.word(i),
            lambda,
        },
        e => e,
    })
}

/// `w̃_i = w_i* − (H + λI)⁻¹ (grad_after − grad_before)`.
pub fn approx_perturbed_vector(system: &WordSystem, w_star: &[f64], grad_before: &[f64], grad_after: &[f64]) -> Vec<f64> {
    let diff: Vec<f64> = grad_after.iter().zip(grad_before).map(|(a, b)| a - b).collect();
    if diff.iter().all(|&x| x == 0.0) {
        return w_star.to_vec();
    }
    let step = system.solve(&diff);
    w_star.iter().zip(&step).map(|(w, s)| w - s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluenceOptions {
    /// User damping added to every Hessian block.
    pub damping: f64,
    pub std_dev: StdDev,
}

impl Default for InfluenceOptions {
    fn default() -> Self {
        InfluenceOptions {
            damping: 0.0,
            std_dev: StdDev::Sample,
        }
    }
}

/// Approximated differential bias of one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffBiasRecord {
    pub doc_id: usize,
    /// `B(w*) − B(w̃)` per baseline model.
    pub per_seed: Vec<f64>,
    pub delta_b: f64,
    pub std: Option<f64>,
    pub weat_words_touched: usize,
    pub error: Option<String>,
}

/// Approximation for a set of documents removed together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEstimate {
    pub per_model: Vec<f64>,
    pub mean: f64,
    pub std: Option<f64>,
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = (n >= 2).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
    (mean, std)
}

struct PreparedModel<'a> {
    model: &'a GloveModel,
    ctx: &'a ContextParams,
    systems: HashMap<u32, WordSystem>,
    base_effect: f64,
}

/// Baseline models prepared for repeated perturbation queries: one cached
/// Hessian factorization per bias word per model, on the unperturbed X.
pub struct InfluenceEngine<'a> {
    x: &'a CoocMatrix,
    vocab: &'a Vocabulary,
    spec: ResolvedWeat,
    union: Vec<u32>,
    mask: WordMask,
    window: usize,
    std_dev: StdDev,
    models: Vec<PreparedModel<'a>>,
}

impl<'a> InfluenceEngine<'a> {
    pub fn new(
        x: &'a CoocMatrix,
        vocab: &'a Vocabulary,
        models: &'a [GloveModel],
        spec: &ResolvedWeat,
        opts: InfluenceOptions,
    ) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::InvalidArgument("at least one model is required".into()))?;
        let window = first.hyper.window;
        let union = spec.union();
        let mut prepared = Vec::with_capacity(models.len());
        for model in models {
            model.check_vocab(vocab)?;
            if model.vocab_size() != x.vocab_size() {
                return Err(Error::DimensionMismatch(format!(
                    "model has V = {}, co-occurrences have V = {}",
                    model.vocab_size(),
                    x.vocab_size()
                )));
            }
            if model.hyper.window != window {
                return Err(Error::InvalidArgument("baseline models disagree on the context window".into()));
            }
            let ctx = model.context()?;
            let systems = union
                .par_iter()
                .map(|&i| named_word_system(spec, i, x, model, opts.damping).map(|s| (i, s)))
                .collect::<Result<HashMap<_, _>>>()?;
            let base_effect = metrics::weat_effect_size_with(&model.w, spec, opts.std_dev)?;
            prepared.push(PreparedModel {
                model,
                ctx,
                systems,
                base_effect,
            });
        }
        Ok(InfluenceEngine {
            x,
            vocab,
            spec: spec.clone(),
            mask: WordMask::from_ids(x.vocab_size(), union.iter().copied()),
            union,
            window,
            std_dev: opts.std_dev,
            models: prepared,
        })
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn spec(&self) -> &ResolvedWeat {
        &self.spec
    }

    /// Effect size of each unperturbed baseline model.
    pub fn base_effects(&self) -> Vec<f64> {
        self.models.iter().map(|m| m.base_effect).collect()
    }

    pub fn system(&self, model: usize, word: u32) -> Option<&WordSystem> {
        self.models[model].systems.get(&word)
    }

    /// `∇L(X̃_i) − ∇L(X_i)`, summed over the entries the delta changes.
    /// Entries driven to zero drop out of the perturbed gradient.
    fn grad_change(&self, pm: &PreparedModel, i: u32, delta: &CoocDelta) -> Result<Option<Vec<f64>>> {
        let (idx, vals) = self.x.row_raw(i);
        let scale = self.x.scale();
        let eps = ZERO_EPS * scale;
        let w_i = pm.model.w.row(i as usize);
        let b_i = pm.ctx.b[i as usize];
        let hyper = &pm.model.hyper;
        let mut change = vec![0.0; w_i.len()];
        let mut any = false;
        for (j, dv) in delta.row_raw(i) {
            if dv == 0.0 {
                continue;
            }
            let base = idx.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0);
            if dv > base + eps {
                return Err(Error::RemovalExceedsBase {
                    i,
                    j,
                    base: base / scale,
                    delta: dv / scale,
                });
            }
            let after = base - dv;
            let after = if after <= eps { 0.0 } else { after / scale };
            let before = base / scale;
            let u_j = pm.ctx.u.row(j as usize);
            let pred = dot(w_i, u_j) + b_i + pm.ctx.c[j as usize];
            let term = |x: f64| if x > 0.0 { 2.0 * weight_f(x, hyper) * (pred - x.ln()) } else { 0.0 };
            let coef = term(after) - term(before);
            if coef != 0.0 {
                axpy(coef, u_j, &mut change);
                any = true;
            }
        }
        Ok(any.then_some(change))
    }

    /// Approximate perturbed vectors `w̃_i` for every bias word whose row the
    /// delta changes. All other vectors are unchanged by construction.
    pub fn perturbed_vectors(&self, model: usize, delta: &CoocDelta) -> Result<HashMap<u32, Vec<f64>>> {
        let delta = delta.rescaled(self.x.scale());
        let pm = &self.models[model];
        let mut out = HashMap::new();
        for &i in &self.union {
            if let Some(change) = self.grad_change(pm, i, &delta)? {
                let step = pm.systems[&i].solve(&change);
                let mut w = pm.model.w.row(i as usize).to_vec();
                axpy(-1.0, &step, &mut w);
                out.insert(i, w);
            }
        }
        Ok(out)
    }

    /// `B(w*) − B(w̃)` per model, and the number of bias words touched.
    pub fn delta_for(&self, delta: &CoocDelta) -> Result<(Vec<f64>, usize)> {
        let mut per_model = Vec::with_capacity(self.models.len());
        let mut touched = 0;
        for (k, pm) in self.models.iter().enumerate() {
            let overrides = self.perturbed_vectors(k, delta)?;
            touched = touched.max(overrides.len());
            if overrides.is_empty() {
                per_model.push(0.0);
                continue;
            }
            let overlay = Overlay {
                base: &pm.model.w,
                overrides: &overrides,
            };
            let perturbed = metrics::weat_effect_size_with(&overlay, &self.spec, self.std_dev)?;
            per_model.push(pm.base_effect - perturbed);
        }
        Ok((per_model, touched))
    }

    /// Bias-word rows of one document's co-occurrences.
    pub fn doc_delta(&self, corpus: &Corpus, doc_id: usize) -> Result<CoocDelta> {
        let doc = corpus.get(doc_id)?;
        cooc::doc_cooc_rows(doc, self.vocab, self.window, &self.mask)
    }

    /// Summed bias-word rows of a set of documents.
    pub fn set_delta(&self, corpus: &Corpus, doc_ids: &[usize]) -> Result<CoocDelta> {
        let mut ids = doc_ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut iter = ids.iter();
        let Some(&first) = iter.next() else {
            return Ok(CoocDelta::empty(cooc::harmonic_scale(self.window)? as f64));
        };
        let mut delta = self.doc_delta(corpus, first)?;
        for &id in iter {
            delta = delta.plus(&self.doc_delta(corpus, id)?);
        }
        Ok(delta)
    }

    /// Every document's approximated differential bias, in doc order.
    pub fn scan(&self, corpus: &Corpus) -> Vec<DiffBiasRecord> {
        (0..corpus.len())
            .into_par_iter()
            .map(|doc_id| {
                let result = self.set_delta(corpus, &[doc_id]).and_then(|d| self.delta_for(&d));
                match result {
                    Ok((per_seed, touched)) => {
                        let (delta_b, std) = mean_std(&per_seed);
                        DiffBiasRecord {
                            doc_id,
                            per_seed,
                            delta_b,
                            std,
                            weat_words_touched: touched,
                            error: None,
                        }
                    }
                    Err(e) => DiffBiasRecord {
                        doc_id,
                        per_seed: Vec::new(),
                        delta_b: f64::NAN,
                        std: None,
                        weat_words_touched: 0,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    }

    /// Removal of all `doc_ids` at once: deltas are summed before the solve.
    pub fn estimate_set(&self, corpus: &Corpus, doc_ids: &[usize]) -> Result<SetEstimate> {
        if doc_ids.len() * 20 > corpus.len() {
            log::warn!(
                "removing {} of {} documents; the first-order estimate assumes small perturbations",
                doc_ids.len(),
                corpus.len()
            );
        }
        let delta = self.set_delta(corpus, doc_ids)?;
        let (per_model, _) = self.delta_for(&delta)?;
        let (mean, std) = mean_std(&per_model);
        Ok(SetEstimate { per_model, mean, std })
    }
}

/// Runs the per-document scan for the given baseline models.
pub fn differential_bias_scan(
    corpus: &Corpus,
    vocab: &Vocabulary,
    x: &CoocMatrix,
    models: &[GloveModel],
    spec: &ResolvedWeat,
    opts: InfluenceOptions,
) -> Result<Vec<DiffBiasRecord>> {
    Ok(InfluenceEngine::new(x, vocab, models, spec, opts)?.scan(corpus))
}

pub fn differential_bias_of_set(
    doc_ids: &[usize],
    corpus: &Corpus,
    vocab: &Vocabulary,
    x: &CoocMatrix,
    models: &[GloveModel],
    spec: &ResolvedWeat,
    opts: InfluenceOptions,
) -> Result<SetEstimate> {
    InfluenceEngine::new(x, vocab, models, spec, opts)?.estimate_set(corpus, doc_ids)
}

pub fn write_scan_csv(records: &[DiffBiasRecord], path: &Path, method: Option<&str>) -> Result<()> {
    fs::write(path, scan_csv_string(records, method)).map_err(|e| Error::io(path, e))
}

pub fn scan_csv_string(records: &[DiffBiasRecord], method: Option<&str>) -> String {
    let mut out = String::from("doc_id,delta_b_mean,delta_b_std,n_seeds,weat_words_touched");
    if method.is_some() {
        out.push_str(",method");
    }
    out.push('\n');
    for r in records {
        let std = r.std.map(|s| s.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.doc_id,
            r.delta_b,
            std,
            r.per_seed.len(),
            r.weat_words_touched
        ));
        if let Some(m) = method {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
    }
    out
}

/// Row of a scan CSV as read back.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ScanRow {
    pub doc_id: usize,
    pub delta_b_mean: f64,
    pub delta_b_std: Option<f64>,
    pub n_seeds: usize,
    pub weat_words_touched: usize,
    #[serde(default)]
    pub method: Option<String>,
}

pub fn read_scan_csv(path: &Path) -> Result<Vec<ScanRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        what: "scan CSV",
        line: 0,
        reason: e.to_string(),
    })?;
    rdr.deserialize()
        .enumerate()
        .map(|(n, row)| {
            row.map_err(|e| Error::Parse {
                what: "scan CSV",
                line: n + 2,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Equal-width histogram of finite values: `(lo, hi, count)` per bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in finite {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + k as f64 * width, lo + (k + 1) as f64 * width, c))
        .collect()
}

pub fn histogram_csv_string(hist: &[(f64, f64, usize)]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (lo, hi, c) in hist {
        out.push_str(&format!("{lo},{hi},{c}\n"));
    }
    out
}
