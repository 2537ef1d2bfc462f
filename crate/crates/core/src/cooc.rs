//! Sparse symmetric co-occurrence matrices and per-document deltas.
//!
//! Harmonic weights `1/d` are accumulated as integers in units of
//! `1/lcm(1..=window)`, and stored as integer-valued `f64` alongside that
//! scale. Sums and differences of such values are exact, so additivity over
//! documents and delta round-trips hold bit-for-bit.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, Document, Vocabulary};
use crate::error::{Error, Result};

/// Weights at or below this (absolute) are structural zeros after removal.
pub const ZERO_EPS: f64 = 1e-9;

/// Largest supported window; keeps `lcm(1..=window)` small enough that
/// scaled counts stay exactly representable.
pub const MAX_WINDOW: usize = 16;

const MAGIC: &[u8; 4] = b"COOC";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;
const RECORD_LEN: usize = 16;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `lcm(1..=window)`: every harmonic weight `1/d` is an integer multiple of
/// its reciprocal.
pub fn harmonic_scale(window: usize) -> Result<u64> {
    if window == 0 || window > MAX_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "window must be in 1..={MAX_WINDOW}, got {window}"
        )));
    }
    Ok((1..=window as u64).fold(1, |l, d| l / gcd(l, d) * d))
}

/// Set of word ids, stored as a dense mask.
#[derive(Debug, Clone)]
pub struct WordMask {
    mask: Vec<bool>,
}

impl WordMask {
    pub fn all(vocab_size: usize) -> Self {
        WordMask {
            mask: vec![true; vocab_size],
        }
    }

    pub fn from_ids(vocab_size: usize, ids: impl IntoIterator<Item = u32>) -> Self {
        let mut mask = vec![false; vocab_size];
        for id in ids {
            mask[id as usize] = true;
        }
        WordMask { mask }
    }

    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        self.mask.get(id as usize).copied().unwrap_or(false)
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i as u32)
    }
}

type Accum = HashMap<(u32, u32), u64>;

/// Adds the harmonic-weighted pairs of one document touching `mask` to `acc`.
fn accumulate_doc(ids: &[Option<u32>], window: usize, scale: u64, mask: &WordMask, acc: &mut Accum) {
    let n = ids.len();
    let mut add = |a: u32, b: u32, d: usize| {
        let w = scale / d as u64;
        *acc.entry((a, b)).or_insert(0) += w;
        *acc.entry((b, a)).or_insert(0) += w;
    };
    for p in 0..n {
        let Some(tp) = ids[p] else { continue };
        if !mask.contains(tp) {
            continue;
        }
        // Pairs to the right are always ours; pairs to the left only when
        // the left word is outside the mask (otherwise it already added them).
        for q in (p + 1)..n.min(p + window + 1) {
            if let Some(tq) = ids[q] {
                add(tp, tq, q - p);
            }
        }
        for q in p.saturating_sub(window)..p {
            if let Some(tq) = ids[q] {
                if !mask.contains(tq) {
                    add(tq, tp, p - q);
                }
            }
        }
    }
}

fn merge(mut a: Accum, b: Accum) -> Accum {
    if a.len() < b.len() {
        return merge(b, a);
    }
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

/// Sparse V×V matrix in CSR layout; see the module docs for the scale.
#[derive(Debug, Clone)]
pub struct CoocMatrix {
    vocab_size: usize,
    scale: f64,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl PartialEq for CoocMatrix {
    /// Entrywise weight equality, regardless of internal scale.
    fn eq(&self, other: &Self) -> bool {
        self.vocab_size == other.vocab_size
            && self.indptr == other.indptr
            && self.indices == other.indices
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a / self.scale == b / other.scale)
    }
}

impl CoocMatrix {
    pub fn empty(vocab_size: usize, scale: f64) -> Self {
        CoocMatrix {
            vocab_size,
            scale,
            indptr: vec![0; vocab_size + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from weighted triples (in weight units, scale 1).
    /// Duplicates are summed; zero weights dropped.
    pub fn from_triples(vocab_size: usize, triples: &[(u32, u32, f64)]) -> Result<Self> {
        let mut map: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for &(i, j, w) in triples {
            if i as usize >= vocab_size || j as usize >= vocab_size {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) outside vocabulary of {vocab_size}"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "weight {w} at ({i}, {j}) is not finite and non-negative"
                )));
            }
            *map.entry((i, j)).or_insert(0.0) += w;
        }
        Ok(Self::from_sorted(vocab_size, 1.0, map.into_iter().filter(|(_, w)| *w > 0.0)))
    }

    fn from_sorted(vocab_size: usize, scale: f64, entries: impl Iterator<Item = ((u32, u32), f64)>) -> Self {
        let mut indptr = vec![0usize; vocab_size + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for ((i, j), v) in entries {
            indptr[i as usize + 1] += 1;
            indices.push(j);
            values.push(v);
        }
        for i in 0..vocab_size {
            indptr[i + 1] += indptr[i];
        }
        CoocMatrix {
            vocab_size,
            scale,
            indptr,
            indices,
            values,
        }
    }

    fn from_accum(vocab_size: usize, scale: u64, acc: Accum) -> Self {
        let mut entries: Vec<((u32, u32), u64)> = acc.into_iter().filter(|(_, v)| *v > 0).collect();
        entries.sort_unstable_by_key(|e| e.0);
        Self::from_sorted(vocab_size, scale as f64, entries.into_iter().map(|(k, v)| (k, v as f64)))
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Number of stored weight units per unit of weight.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Column ids and scaled values of row `i`.
    #[inline]
    pub fn row_raw(&self, i: u32) -> (&[u32], &[f64]) {
        let r = self.indptr[i as usize]..self.indptr[i as usize + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    /// `(j, weight)` pairs of row `i`, in column order.
    pub fn row(&self, i: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let (idx, vals) = self.row_raw(i);
        let s = self.scale;
        idx.iter().zip(vals).map(move |(&j, &v)| (j, v / s))
    }

    pub fn weight(&self, i: u32, j: u32) -> f64 {
        let (idx, vals) = self.row_raw(i);
        match idx.binary_search(&j) {
            Ok(k) => vals[k] / self.scale,
            Err(_) => 0.0,
        }
    }

    /// All `(i, j, weight)` triples sorted by `(i, j)`.
    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.vocab_size as u32).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn total_weight(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.scale
    }

    /// Row sums in scaled units (exact for harmonic-lattice matrices).
    pub fn row_sums_scaled(&self) -> Vec<f64> {
        (0..self.vocab_size as u32)
            .map(|i| self.row_raw(i).1.iter().sum())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries().all(|(i, j, w)| self.weight(j, i) == w)
    }

    /// Entrywise sum; both operands must share the vocabulary.
    pub fn sum(&self, other: &CoocMatrix) -> Result<CoocMatrix> {
        apply_removal(self, &CoocDelta::from_matrix(other).negated())
    }

    /// Re-expresses weights on the harmonic lattice of `window` (exact when
    /// the weights came from harmonic extraction, as in a file written by
    /// [`serialize`]).
    pub fn requantize(&self, window: usize) -> Result<CoocMatrix> {
        let l = harmonic_scale(window)? as f64;
        let mut out = self.clone();
        for (k, v) in out.values.iter_mut().enumerate() {
            let scaled = *v / self.scale * l;
            let r = scaled.round();
            if (scaled - r).abs() > 1e-6 * r.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "weight {} (record {k}) is not a multiple of 1/{l}; wrong window?",
                    *v / self.scale
                )));
            }
            *v = r;
        }
        out.scale = l;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Documents(Vec<usize>),
    Synthetic,
}

/// A sparse symmetric perturbation, in the same scaled units as the matrix
/// it came from. Positive weights are removed by [`apply_removal`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoocDelta {
    scale: f64,
    entries: BTreeMap<(u32, u32), f64>,
    pub provenance: Provenance,
}

impl CoocDelta {
    pub fn empty(scale: f64) -> Self {
        CoocDelta {
            scale,
            entries: BTreeMap::new(),
            provenance: Provenance::Synthetic,
        }
    }

    /// Builds a synthetic delta from weight-unit triples. Each `(i, j, w)`
    /// is mirrored to `(j, i)`.
    pub fn symmetric_from_triples(triples: &[(u32, u32, f64)]) -> Self {
        let mut d = CoocDelta::empty(1.0);
        for &(i, j, w) in triples {
            *d.entries.entry((i, j)).or_insert(0.0) += w;
            if i != j {
                *d.entries.entry((j, i)).or_insert(0.0) += w;
            }
        }
        d
    }

    pub fn from_matrix(x: &CoocMatrix) -> Self {
        let mut entries = BTreeMap::new();
        for i in 0..x.vocab_size as u32 {
            let (idx, vals) = x.row_raw(i);
            for (&j, &v) in idx.iter().zip(vals) {
                entries.insert((i, j), v);
            }
        }
        CoocDelta {
            scale: x.scale,
            entries,
            provenance: Provenance::Synthetic,
        }
    }

    fn from_accum(scale: u64, acc: Accum, provenance: Provenance) -> Self {
        CoocDelta {
            scale: scale as f64,
            entries: acc.into_iter().filter(|(_, v)| *v > 0).map(|(k, v)| (k, v as f64)).collect(),
            provenance,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn weight(&self, i: u32, j: u32) -> f64 {
        self.entries.get(&(i, j)).map_or(0.0, |v| v / self.scale)
    }

    /// `(i, j, weight)` in `(i, j)` order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.entries.iter().map(move |(&(i, j), &v)| (i, j, v / self.scale))
    }

    /// `(j, scaled value)` for row `i`.
    pub fn row_raw(&self, i: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.entries.range((i, 0)..=(i, u32::MAX)).map(|(&(_, j), &v)| (j, v))
    }

    /// Distinct row ids with at least one entry.
    pub fn rows(&self) -> Vec<u32> {
        let mut rows: Vec<u32> = self.entries.keys().map(|&(i, _)| i).collect();
        rows.dedup();
        rows
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.values().sum::<f64>() / self.scale
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries
            .iter()
            .all(|(&(i, j), v)| self.entries.get(&(j, i)) == Some(v))
    }

    /// `t · self`; the result is synthetic.
    pub fn scaled_by(&self, t: f64) -> Self {
        CoocDelta {
            scale: self.scale,
            entries: self.entries.iter().map(|(&k, &v)| (k, v * t)).collect(),
            provenance: Provenance::Synthetic,
        }
    }

    pub fn negated(&self) -> Self {
        let mut d = self.scaled_by(-1.0);
        d.provenance = self.provenance.clone();
        d
    }

    /// Entrywise sum. Exact when both deltas share a harmonic scale.
    pub fn plus(&self, other: &CoocDelta) -> Self {
        let factor = self.scale / other.scale;
        let mut entries = self.entries.clone();
        for (&k, &v) in &other.entries {
            let v = if factor == 1.0 { v } else { v * factor };
            let e = entries.entry(k).or_insert(0.0);
            *e += v;
            if *e == 0.0 {
                entries.remove(&k);
            }
        }
        let provenance = match (&self.provenance, &other.provenance) {
            (Provenance::Documents(a), Provenance::Documents(b)) => {
                let mut ids: Vec<usize> = a.iter().chain(b).copied().collect();
                ids.sort_unstable();
                ids.dedup();
                Provenance::Documents(ids)
            }
            (Provenance::Documents(a), _) if other.is_empty() => Provenance::Documents(a.clone()),
            (_, Provenance::Documents(b)) if self.is_empty() => Provenance::Documents(b.clone()),
            _ => Provenance::Synthetic,
        };
        CoocDelta {
            scale: self.scale,
            entries,
            provenance,
        }
    }

    /// Converts to another scale (exact when `target` is a multiple of ours).
    pub fn rescaled(&self, target: f64) -> Self {
        if target == self.scale {
            return self.clone();
        }
        let f = target / self.scale;
        CoocDelta {
            scale: target,
            entries: self.entries.iter().map(|(&k, &v)| (k, v * f)).collect(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Harmonic-weighted co-occurrence matrix of the whole corpus. Out-of-vocabulary
/// tokens occupy window positions but contribute no pairs.
pub fn extract_cooc(corpus: &Corpus, vocab: &Vocabulary, window: usize) -> Result<CoocMatrix> {
    let scale = harmonic_scale(window)?;
    let mask = WordMask::all(vocab.len());
    let acc = corpus
        .documents()
        .par_iter()
        .fold(Accum::new, |mut acc, doc| {
            accumulate_doc(&vocab.encode(&doc.tokens), window, scale, &mask, &mut acc);
            acc
        })
        .reduce(Accum::new, merge);
    Ok(CoocMatrix::from_accum(vocab.len(), scale, acc))
}

/// `X^(k)` restricted to entries whose row or column lies in `row_words`.
pub fn doc_cooc_rows(doc: &Document, vocab: &Vocabulary, window: usize, row_words: &WordMask) -> Result<CoocDelta> {
    doc_cooc_rows_encoded(&vocab.encode(&doc.tokens), doc.doc_id, window, row_words)
}

pub(crate) fn doc_cooc_rows_encoded(
    ids: &[Option<u32>],
    doc_id: usize,
    window: usize,
    row_words: &WordMask,
) -> Result<CoocDelta> {
    let scale = harmonic_scale(window)?;
    let mut acc = Accum::new();
    accumulate_doc(ids, window, scale, row_words, &mut acc);
    Ok(CoocDelta::from_accum(scale, acc, Provenance::Documents(vec![doc_id])))
}

/// `X − d`. Entries that fall to within [`ZERO_EPS`] of zero are deleted.
/// Negative delta weights add to the matrix.
pub fn apply_removal(x: &CoocMatrix, d: &CoocDelta) -> Result<CoocMatrix> {
    if let Some(&(i, j)) = d.entries.keys().find(|(i, j)| *i as usize >= x.vocab_size || *j as usize >= x.vocab_size) {
        return Err(Error::InvalidArgument(format!(
            "delta entry ({i}, {j}) outside vocabulary of {}",
            x.vocab_size
        )));
    }
    let d = d.rescaled(x.scale);
    let eps = ZERO_EPS * x.scale;
    let mut merged: Vec<((u32, u32), f64)> = Vec::with_capacity(x.nnz() + d.len());
    let mut delta = d.entries.iter().peekable();
    for i in 0..x.vocab_size as u32 {
        let (idx, vals) = x.row_raw(i);
        let mut k = 0;
        loop {
            let next_delta = delta.peek().filter(|((di, _), _)| *di == i).map(|(&(_, dj), &v)| (dj, v));
            let next_base = idx.get(k).map(|&j| (j, vals[k]));
            let (j, base, dv) = match (next_base, next_delta) {
                (None, None) => break,
                (Some((bj, bv)), Some((dj, dv))) if bj == dj => {
                    k += 1;
                    delta.next();
                    (bj, bv, dv)
                }
                (Some((bj, bv)), Some((dj, _))) if bj < dj => {
                    k += 1;
                    (bj, bv, 0.0)
                }
                (Some((bj, bv)), None) => {
                    k += 1;
                    (bj, bv, 0.0)
                }
                (_, Some((dj, dv))) => {
                    delta.next();
                    (dj, 0.0, dv)
                }
            };
            if dv > base + eps {
                return Err(Error::RemovalExceedsBase {
                    i,
                    j,
                    base: base / x.scale,
                    delta: dv / x.scale,
                });
            }
            let v = if dv == 0.0 { base } else { base - dv };
            if v > eps {
                merged.push(((i, j), v));
            }
        }
    }
    Ok(CoocMatrix::from_sorted(x.vocab_size, x.scale, merged.into_iter()))
}

/// `X + d`.
pub fn apply_addition(x: &CoocMatrix, d: &CoocDelta) -> Result<CoocMatrix> {
    apply_removal(x, &d.negated())
}

/// Little-endian binary form: 16-byte header then `(i, j, weight)` records.
pub fn to_bytes(x: &CoocMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * x.nnz());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(x.vocab_size as u32).to_le_bytes());
    out.extend_from_slice(&(x.nnz() as u32).to_le_bytes());
    for (i, j, w) in x.entries() {
        out.extend_from_slice(&i.to_le_bytes());
        out.extend_from_slice(&j.to_le_bytes());
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<CoocMatrix> {
    let framing = |offset: usize, reason: String| Error::Framing {
        offset: offset as u64,
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(framing(bytes.len(), format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(framing(0, "bad magic, expected COOC".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(framing(4, format!("unsupported version {version}")));
    }
    let vocab_size = u32_at(8) as usize;
    let count = u32_at(12) as usize;
    let body = bytes.len() - HEADER_LEN;
    if body != count * RECORD_LEN {
        let offset = HEADER_LEN + (body / RECORD_LEN).min(count) * RECORD_LEN;
        return Err(framing(
            offset,
            format!("header declares {count} records but body holds {body} bytes"),
        ));
    }
    let mut entries = Vec::with_capacity(count);
    let mut prev: Option<(u32, u32)> = None;
    for k in 0..count {
        let o = HEADER_LEN + k * RECORD_LEN;
        let (i, j) = (u32_at(o), u32_at(o + 4));
        let w = f64::from_le_bytes(bytes[o + 8..o + 16].try_into().unwrap());
        if i as usize >= vocab_size || j as usize >= vocab_size {
            return Err(framing(o, format!("index ({i}, {j}) outside vocabulary of {vocab_size}")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(framing(o + 8, format!("weight {w} is not finite and positive")));
        }
        if prev.is_some_and(|p| p >= (i, j)) {
            return Err(framing(o, "records not strictly sorted by (i, j)".into()));
        }
        prev = Some((i, j));
        entries.push(((i, j), w));
    }
    Ok(CoocMatrix::from_sorted(vocab_size, 1.0, entries.into_iter()))
}

pub fn serialize(x: &CoocMatrix, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&to_bytes(x)).map_err(|e| Error::io(path, e))
}

pub fn deserialize(path: &Path) -> Result<CoocMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
