//! Positive pointwise mutual information baseline.
//!
//! `PPMI_ij = max(0, ln(X_ij · N / (r_i · c_j)))` over stored entries, with
//! optional context-distribution smoothing `c_j^α`. Marginals are kept in
//! the matrix's scaled units so that removal and re-addition are exact.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cooc::{self, CoocDelta, CoocMatrix, WordMask, ZERO_EPS};
use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::influence::DiffBiasRecord;
use crate::metrics::{self, ResolvedWeat, StdDev};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpmiOptions {
    /// Context-distribution exponent; 1 gives plain PPMI.
    pub context_alpha: f64,
    pub std_dev: StdDev,
}

impl Default for PpmiOptions {
    fn default() -> Self {
        PpmiOptions {
            context_alpha: 1.0,
            std_dev: StdDev::Sample,
        }
    }
}

/// Sparse PPMI rows plus the marginals of the matrix they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PpmiMatrix {
    vocab_size: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
    total: f64,
    alpha: f64,
}

/// Normalizer of the (smoothed) context distribution: `Σ_j c_j^α`.
fn context_total(col_sums: &[f64], total: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        total
    } else {
        col_sums.iter().filter(|&&c| c > 0.0).map(|c| c.powf(alpha)).sum()
    }
}

/// PPMI of one row given its scaled entries and marginals.
fn ppmi_row(
    entries: impl Iterator<Item = (u32, f64)>,
    r_i: f64,
    col: impl Fn(u32) -> f64,
    context_norm: f64,
    alpha: f64,
) -> Vec<(u32, f64)> {
    entries
        .filter_map(|(j, x)| {
            let c = col(j);
            let c = if alpha == 1.0 { c } else { c.powf(alpha) };
            let v = ((x * context_norm) / (r_i * c)).ln();
            (v > 0.0).then_some((j, v))
        })
        .collect()
}

impl PpmiMatrix {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: u32) -> (&[u32], &[f64]) {
        let r = self.indptr[i as usize]..self.indptr[i as usize + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: u32, j: u32) -> f64 {
        let (idx, vals) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    /// Row sums in the co-occurrence matrix's scaled units.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

pub fn build_ppmi(x: &CoocMatrix) -> PpmiMatrix {
    build_ppmi_with(x, 1.0)
}

pub fn build_ppmi_with(x: &CoocMatrix, context_alpha: f64) -> PpmiMatrix {
    let v = x.vocab_size();
    let row_sums = x.row_sums_scaled();
    let mut col_sums = vec![0.0; v];
    for i in 0..v as u32 {
        let (idx, vals) = x.row_raw(i);
        for (&j, &val) in idx.iter().zip(vals) {
            col_sums[j as usize] += val;
        }
    }
    let total: f64 = row_sums.iter().sum();
    let norm = context_total(&col_sums, total, context_alpha);
    let rows: Vec<Vec<(u32, f64)>> = (0..v as u32)
        .into_par_iter()
        .map(|i| {
            let (idx, vals) = x.row_raw(i);
            ppmi_row(
                idx.iter().copied().zip(vals.iter().copied()),
                row_sums[i as usize],
                |j| col_sums[j as usize],
                norm,
                context_alpha,
            )
        })
        .collect();
    let mut indptr = Vec::with_capacity(v + 1);
    indptr.push(0);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for row in rows {
        for (j, p) in row {
            indices.push(j);
            values.push(p);
        }
        indptr.push(indices.len());
    }
    PpmiMatrix {
        vocab_size: v,
        indptr,
        indices,
        values,
        row_sums,
        col_sums,
        total,
        alpha: context_alpha,
    }
}

fn sparse_dot(a: (&[u32], &[f64]), b: (&[u32], &[f64])) -> f64 {
    let (mut p, mut q, mut s) = (0, 0, 0.0);
    while p < a.0.len() && q < b.0.len() {
        match a.0[p].cmp(&b.0[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                s += a.1[p] * b.1[q];
                p += 1;
                q += 1;
            }
        }
    }
    s
}

/// Effect size over sparse rows looked up by word id.
fn effect_over_rows<'r>(
    spec: &ResolvedWeat,
    kind: StdDev,
    row: impl Fn(u32) -> (&'r [u32], &'r [f64]),
) -> Result<f64> {
    let mut norms = HashMap::new();
    for id in spec.union() {
        let n = row(id).1.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::ZeroNorm { word: spec.word(id) });
        }
        norms.insert(id, n);
    }
    metrics::effect_size_with(spec, kind, |a, b| Ok(sparse_dot(row(a), row(b)) / (norms[&a] * norms[&b])))
}

/// WEAT effect size with each word represented by its PPMI row.
pub fn ppmi_weat(p: &PpmiMatrix, spec: &ResolvedWeat) -> Result<f64> {
    ppmi_weat_with(p, spec, StdDev::Sample)
}

pub fn ppmi_weat_with(p: &PpmiMatrix, spec: &ResolvedWeat, kind: StdDev) -> Result<f64> {
    effect_over_rows(spec, kind, |i| p.row(i))
}

/// Per-document differential bias measured in PPMI space.
pub struct PpmiScanner<'a> {
    x: &'a CoocMatrix,
    vocab: &'a Vocabulary,
    base: PpmiMatrix,
    spec: ResolvedWeat,
    union: Vec<u32>,
    window: usize,
    opts: PpmiOptions,
    base_effect: f64,
}

impl<'a> PpmiScanner<'a> {
    pub fn new(
        x: &'a CoocMatrix,
        vocab: &'a Vocabulary,
        spec: &ResolvedWeat,
        window: usize,
        opts: PpmiOptions,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("cannot build PPMI from an empty matrix".into()));
        }
        if vocab.len() != x.vocab_size() {
            return Err(Error::DimensionMismatch(format!(
                "vocabulary has {} words, co-occurrences have V = {}",
                vocab.len(),
                x.vocab_size()
            )));
        }
        cooc::harmonic_scale(window)?;
        let base = build_ppmi_with(x, opts.context_alpha);
        let base_effect = ppmi_weat_with(&base, spec, opts.std_dev)?;
        Ok(PpmiScanner {
            x,
            vocab,
            base,
            union: spec.union(),
            spec: spec.clone(),
            window,
            opts,
            base_effect,
        })
    }

    pub fn base(&self) -> &PpmiMatrix {
        &self.base
    }

    pub fn base_effect(&self) -> f64 {
        self.base_effect
    }

    /// `B_ppmi(X) − B_ppmi(X − delta)` and the number of bias rows touched.
    /// Bias rows are rebuilt under marginals perturbed by the whole delta.
    pub fn delta_for(&self, delta: &CoocDelta) -> Result<(f64, usize)> {
        if delta.is_empty() {
            return Ok((0.0, 0));
        }
        let delta = delta.rescaled(self.x.scale());
        let eps = ZERO_EPS * self.x.scale();
        let mut d_row: HashMap<u32, f64> = HashMap::new();
        let mut d_col: HashMap<u32, f64> = HashMap::new();
        let mut d_total = 0.0;
        for i in delta.rows() {
            for (j, v) in delta.row_raw(i) {
                *d_row.entry(i).or_insert(0.0) += v;
                *d_col.entry(j).or_insert(0.0) += v;
                d_total += v;
            }
        }
        let total = self.base.total - d_total;
        if total <= eps {
            return Err(Error::InvalidArgument("removal leaves an empty co-occurrence matrix".into()));
        }
        let col = |j: u32| self.base.col_sums[j as usize] - d_col.get(&j).copied().unwrap_or(0.0);
        let norm = if self.opts.context_alpha == 1.0 {
            total
        } else {
            let mut n = context_total(&self.base.col_sums, self.base.total, self.opts.context_alpha);
            for (&j, _) in &d_col {
                let before = self.base.col_sums[j as usize];
                let after = col(j);
                let a = self.opts.context_alpha;
                n += if after > eps { after.powf(a) } else { 0.0 } - before.powf(a);
            }
            n
        };

        let mut touched = 0;
        let mut rows: HashMap<u32, (Vec<u32>, Vec<f64>)> = HashMap::new();
        for &i in &self.union {
            let (idx, vals) = self.x.row_raw(i);
            let mut removed: HashMap<u32, f64> = delta.row_raw(i).collect();
            if !removed.is_empty() {
                touched += 1;
            }
            let mut entries = Vec::with_capacity(idx.len());
            for (&j, &v) in idx.iter().zip(vals) {
                let dv = removed.remove(&j).unwrap_or(0.0);
                if dv > v + eps {
                    return Err(Error::RemovalExceedsBase {
                        i,
                        j,
                        base: v / self.x.scale(),
                        delta: dv / self.x.scale(),
                    });
                }
                let after = v - dv;
                if after > eps {
                    entries.push((j, after));
                }
            }
            if let Some((&j, &dv)) = removed.iter().find(|(_, &dv)| dv > eps) {
                return Err(Error::RemovalExceedsBase {
                    i,
                    j,
                    base: 0.0,
                    delta: dv / self.x.scale(),
                });
            }
            let r_i = self.base.row_sums[i as usize] - d_row.get(&i).copied().unwrap_or(0.0);
            let row = if r_i > eps {
                ppmi_row(entries.into_iter(), r_i, col, norm, self.opts.context_alpha)
            } else {
                Vec::new()
            };
            rows.insert(i, row.into_iter().unzip());
        }
        let perturbed = effect_over_rows(&self.spec, self.opts.std_dev, |i| {
            let (idx, vals) = &rows[&i];
            (idx.as_slice(), vals.as_slice())
        })?;
        Ok((self.base_effect - perturbed, touched))
    }

    pub fn doc_delta(&self, corpus: &Corpus, doc_id: usize) -> Result<CoocDelta> {
        let doc = corpus.get(doc_id)?;
        cooc::doc_cooc_rows(doc, self.vocab, self.window, &WordMask::all(self.x.vocab_size()))
    }

    pub fn scan(&self, corpus: &Corpus) -> Vec<DiffBiasRecord> {
        (0..corpus.len())
            .into_par_iter()
            .map(|doc_id| match self.doc_delta(corpus, doc_id).and_then(|d| self.delta_for(&d)) {
                Ok((delta_b, touched)) => DiffBiasRecord {
                    doc_id,
                    per_seed: vec![delta_b],
                    delta_b,
                    std: None,
                    weat_words_touched: touched,
                    error: None,
                },
                Err(e) => DiffBiasRecord {
                    doc_id,
                    per_seed: Vec::new(),
                    delta_b: f64::NAN,
                    std: None,
                    weat_words_touched: 0,
                    error: Some(e.to_string()),
                },
            })
            .collect()
    }
}

/// Per-document change in PPMI effect size under removal.
pub fn ppmi_diff_scan(
    corpus: &Corpus,
    vocab: &Vocabulary,
    x: &CoocMatrix,
    spec: &ResolvedWeat,
    window: usize,
    opts: PpmiOptions,
) -> Result<Vec<DiffBiasRecord>> {
    Ok(PpmiScanner::new(x, vocab, spec, window, opts)?.scan(corpus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_fixture() {
        // r = c = 5, N = 10: PPMI_00 = ln(4·10/25) = ln 1.6, off-diagonal ln(0.4) < 0.
        let x = CoocMatrix::from_triples(2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 4.0)]).unwrap();
        let p = build_ppmi(&x);
        assert!((p.get(0, 0) - 1.6f64.ln()).abs() < 1e-15);
        assert!((p.get(1, 1) - 1.6f64.ln()).abs() < 1e-15);
        assert_eq!(p.get(0, 1), 0.0);
        assert_eq!(p.nnz(), 2);
    }

    #[test]
    fn uniform_and_single_entry_are_zero() {
        let x = CoocMatrix::from_triples(2, &[(0, 0, 3.0), (0, 1, 3.0), (1, 0, 3.0), (1, 1, 3.0)]).unwrap();
        assert_eq!(build_ppmi(&x).nnz(), 0);
        let x = CoocMatrix::from_triples(3, &[(1, 1, 7.0)]).unwrap();
        assert_eq!(build_ppmi(&x).nnz(), 0);
    }

    #[test]
    fn scale_invariant() {
        let t = [(0, 0, 4.0), (0, 1, 1.5), (1, 0, 1.5), (1, 2, 0.25), (2, 1, 0.25), (2, 2, 9.0)];
        let doubled: Vec<_> = t.iter().map(|&(i, j, v)| (i, j, 2.0 * v)).collect();
        let a = build_ppmi(&CoocMatrix::from_triples(3, &t).unwrap());
        let b = build_ppmi(&CoocMatrix::from_triples(3, &doubled).unwrap());
        for i in 0..3 {
            assert_eq!(a.row(i), b.row(i));
        }
    }

    #[test]
    fn smoothing_hook_changes_values() {
        let x = CoocMatrix::from_triples(2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 9.0)]).unwrap();
        assert_ne!(build_ppmi_with(&x, 0.75), build_ppmi(&x));
    }
}
