//! Bias metrics over an embedding: WEAT association and effect size, the
//! projection onto an attribute axis, and the analytic effect-size gradient.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::glove::Vectors;
use crate::linalg::{axpy, dot, norm};

/// Four word lists defining one WEAT instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeatSpec {
    pub name: String,
    #[serde(rename = "S")]
    pub s: Vec<String>,
    #[serde(rename = "T")]
    pub t: Vec<String>,
    #[serde(rename = "A")]
    pub a: Vec<String>,
    #[serde(rename = "B")]
    pub b: Vec<String>,
}

impl WeatSpec {
    /// Science/arts targets, male/female attributes.
    pub fn weat1() -> Self {
        Self::from_toml_str(include_str!("../data/weat1.toml")).expect("bundled WEAT1 is valid")
    }

    /// Instruments/weapons targets, pleasant/unpleasant attributes.
    pub fn weat2() -> Self {
        Self::from_toml_str(include_str!("../data/weat2.toml")).expect("bundled WEAT2 is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: WeatSpec = toml::from_str(text).map_err(|e| Error::Parse {
            what: "WEAT spec",
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            reason: e.message().to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("WEAT spec serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidWeat {
                name: self.name.clone(),
                reason,
            })
        };
        if self.s.len() != self.t.len() || self.s.len() < 2 {
            return fail(format!("|S| = {}, |T| = {}; need equal sizes ≥ 2", self.s.len(), self.t.len()));
        }
        if self.a.len() != self.b.len() || self.a.is_empty() {
            return fail(format!("|A| = {}, |B| = {}; need equal sizes ≥ 1", self.a.len(), self.b.len()));
        }
        for (name, set) in [("S", &self.s), ("T", &self.t), ("A", &self.a), ("B", &self.b)] {
            if set.iter().collect::<BTreeSet<_>>().len() != set.len() {
                return fail(format!("{name} contains duplicates"));
            }
        }
        if let Some(w) = self.s.iter().find(|w| self.t.contains(w)) {
            return fail(format!("'{w}' is in both S and T"));
        }
        if let Some(w) = self.a.iter().find(|w| self.b.contains(w)) {
            return fail(format!("'{w}' is in both A and B"));
        }
        Ok(())
    }

    pub fn swap_targets(&self) -> Self {
        WeatSpec {
            s: self.t.clone(),
            t: self.s.clone(),
            ..self.clone()
        }
    }

    pub fn swap_attributes(&self) -> Self {
        WeatSpec {
            a: self.b.clone(),
            b: self.a.clone(),
            ..self.clone()
        }
    }

    /// Resolves every word to its vocabulary id; a missing word is an error.
    pub fn resolve(&self, vocab: &Vocabulary) -> Result<ResolvedWeat> {
        self.validate()?;
        let mut names = HashMap::new();
        let mut ids = |set: &[String]| -> Result<Vec<u32>> {
            set.iter()
                .map(|w| {
                    let id = vocab.id(w).ok_or_else(|| Error::UnknownWord { word: w.clone() })?;
                    names.insert(id, w.clone());
                    Ok(id)
                })
                .collect()
        };
        Ok(ResolvedWeat {
            name: self.name.clone(),
            s: ids(&self.s)?,
            t: ids(&self.t)?,
            a: ids(&self.a)?,
            b: ids(&self.b)?,
            names,
        })
    }
}

/// A [`WeatSpec`] bound to vocabulary ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedWeat {
    pub name: String,
    pub s: Vec<u32>,
    pub t: Vec<u32>,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    names: HashMap<u32, String>,
}

impl ResolvedWeat {
    /// Builds a resolved spec directly from ids (names default to `#id`).
    pub fn from_ids(name: &str, s: Vec<u32>, t: Vec<u32>, a: Vec<u32>, b: Vec<u32>) -> Result<Self> {
        let names = s.iter().chain(&t).chain(&a).chain(&b).map(|&i| (i, format!("#{i}"))).collect();
        let r = ResolvedWeat {
            name: name.to_string(),
            s,
            t,
            a,
            b,
            names,
        };
        let as_words = |v: &[u32]| v.iter().map(|i| format!("#{i}")).collect();
        WeatSpec {
            name: r.name.clone(),
            s: as_words(&r.s),
            t: as_words(&r.t),
            a: as_words(&r.a),
            b: as_words(&r.b),
        }
        .validate()?;
        Ok(r)
    }

    /// `S ∪ T ∪ A ∪ B`, sorted.
    pub fn union(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.s.iter().chain(&self.t).chain(&self.a).chain(&self.b).copied().collect();
        set.into_iter().collect()
    }

    pub fn word(&self, id: u32) -> String {
        self.names.get(&id).cloned().unwrap_or_else(|| format!("#{id}"))
    }

    pub fn swap_targets(&self) -> Self {
        ResolvedWeat {
            s: self.t.clone(),
            t: self.s.clone(),
            ..self.clone()
        }
    }

    pub fn swap_attributes(&self) -> Self {
        ResolvedWeat {
            a: self.b.clone(),
            b: self.a.clone(),
            ..self.clone()
        }
    }
}

/// Which standard deviation the effect-size denominator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdDev {
    /// `n − 1` denominator.
    #[default]
    Sample,
    /// `n` denominator.
    Population,
}

impl StdDev {
    fn denominator(self, n: usize) -> f64 {
        match self {
            StdDev::Sample => (n - 1) as f64,
            StdDev::Population => n as f64,
        }
    }
}

/// Read access to word vectors by id.
pub trait WordVectors {
    fn vector(&self, id: u32) -> &[f64];
}

impl WordVectors for Vectors {
    fn vector(&self, id: u32) -> &[f64] {
        self.row(id as usize)
    }
}

/// Base vectors with a few rows replaced.
pub struct Overlay<'a> {
    pub base: &'a Vectors,
    pub overrides: &'a HashMap<u32, Vec<f64>>,
}

impl WordVectors for Overlay<'_> {
    fn vector(&self, id: u32) -> &[f64] {
        match self.overrides.get(&id) {
            Some(v) => v,
            None => self.base.row(id as usize),
        }
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(dot(a, b) / (na * nb))
}

fn cos_ids<V: WordVectors + ?Sized>(w: &V, spec: &ResolvedWeat, x: u32, y: u32) -> Result<f64> {
    let (vx, vy) = (w.vector(x), w.vector(y));
    let (nx, ny) = (norm(vx), norm(vy));
    if nx == 0.0 {
        return Err(Error::ZeroNorm { word: spec.word(x) });
    }
    if ny == 0.0 {
        return Err(Error::ZeroNorm { word: spec.word(y) });
    }
    Ok(dot(vx, vy) / (nx * ny))
}

/// `g(c) = mean_a cos(c, a) − mean_b cos(c, b)` for an arbitrary similarity.
pub(crate) fn assoc_with(
    c: u32,
    spec: &ResolvedWeat,
    cos: &mut impl FnMut(u32, u32) -> Result<f64>,
) -> Result<f64> {
    let mut ma = 0.0;
    for &a in &spec.a {
        ma += cos(c, a)?;
    }
    let mut mb = 0.0;
    for &b in &spec.b {
        mb += cos(c, b)?;
    }
    Ok(ma / spec.a.len() as f64 - mb / spec.b.len() as f64)
}

/// Effect size from target associations in `S` then `T` order.
fn effect_from_assocs(g: &[f64], n_s: usize, kind: StdDev) -> Result<f64> {
    let n = g.len();
    let mean_s = g[..n_s].iter().sum::<f64>() / n_s as f64;
    let mean_t = g[n_s..].iter().sum::<f64>() / (n - n_s) as f64;
    let mean = g.iter().sum::<f64>() / n as f64;
    let var = g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / kind.denominator(n);
    let sd = var.sqrt();
    if !(sd > 1e-12) {
        return Err(Error::DegenerateWeat);
    }
    Ok((mean_s - mean_t) / sd)
}

pub(crate) fn effect_size_with(
    spec: &ResolvedWeat,
    kind: StdDev,
    mut cos: impl FnMut(u32, u32) -> Result<f64>,
) -> Result<f64> {
    let g = spec
        .s
        .iter()
        .chain(&spec.t)
        .map(|&c| assoc_with(c, spec, &mut cos))
        .collect::<Result<Vec<f64>>>()?;
    effect_from_assocs(&g, spec.s.len(), kind)
}

pub fn weat_assoc<V: WordVectors + ?Sized>(c: u32, spec: &ResolvedWeat, w: &V) -> Result<f64> {
    assoc_with(c, spec, &mut |x, y| cos_ids(w, spec, x, y))
}

/// WEAT effect size with the sample standard deviation.
pub fn weat_effect_size<V: WordVectors + ?Sized>(w: &V, spec: &ResolvedWeat) -> Result<f64> {
    weat_effect_size_with(w, spec, StdDev::Sample)
}

pub fn weat_effect_size_with<V: WordVectors + ?Sized>(w: &V, spec: &ResolvedWeat, kind: StdDev) -> Result<f64> {
    effect_size_with(spec, kind, |x, y| cos_ids(w, spec, x, y))
}

/// Cosine of each target with the axis from the normalized mean of `A`
/// minus the normalized mean of `B`.
pub fn projection_bias<V: WordVectors + ?Sized>(w: &V, spec: &ResolvedWeat, targets: &[u32]) -> Result<Vec<f64>> {
    let dim = w.vector(spec.a[0]).len();
    let mut axis = vec![0.0; dim];
    for (set, sign) in [(&spec.a, 1.0), (&spec.b, -1.0)] {
        for &id in set {
            let v = w.vector(id);
            let n = norm(v);
            if n == 0.0 {
                return Err(Error::ZeroNorm { word: spec.word(id) });
            }
            axpy(sign / (n * set.len() as f64), v, &mut axis);
        }
    }
    let an = norm(&axis);
    if !(an > 1e-12) {
        return Err(Error::IndistinguishableAttributes);
    }
    targets
        .iter()
        .map(|&t| {
            let v = w.vector(t);
            let n = norm(v);
            if n == 0.0 {
                return Err(Error::ZeroNorm { word: spec.word(t) });
            }
            Ok(dot(v, &axis) / (n * an))
        })
        .collect()
}

/// Exact gradient of the effect size with respect to every involved word
/// vector. Words outside `S ∪ T ∪ A ∪ B` have zero gradient and are omitted.
pub fn weat_gradient<V: WordVectors + ?Sized>(w: &V, spec: &ResolvedWeat) -> Result<BTreeMap<u32, Vec<f64>>> {
    weat_gradient_with(w, spec, StdDev::Sample)
}

pub fn weat_gradient_with<V: WordVectors + ?Sized>(
    w: &V,
    spec: &ResolvedWeat,
    kind: StdDev,
) -> Result<BTreeMap<u32, Vec<f64>>> {
    let union = spec.union();
    let dim = w.vector(union[0]).len();
    let mut norms = HashMap::new();
    for &id in &union {
        let n = norm(w.vector(id));
        if n == 0.0 {
            return Err(Error::ZeroNorm { word: spec.word(id) });
        }
        norms.insert(id, n);
    }
    let cos = |x: u32, y: u32| dot(w.vector(x), w.vector(y)) / (norms[&x] * norms[&y]);

    let targets: Vec<u32> = spec.s.iter().chain(&spec.t).copied().collect();
    let g: Vec<f64> = targets
        .iter()
        .map(|&c| assoc_with(c, spec, &mut |x, y| Ok(cos(x, y))))
        .collect::<Result<_>>()?;
    let n = g.len();
    let n_s = spec.s.len();
    let mean_s = g[..n_s].iter().sum::<f64>() / n_s as f64;
    let mean_t = g[n_s..].iter().sum::<f64>() / (n - n_s) as f64;
    let mean = g.iter().sum::<f64>() / n as f64;
    let denom = kind.denominator(n);
    let sd = (g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / denom).sqrt();
    if !(sd > 1e-12) {
        return Err(Error::DegenerateWeat);
    }
    let numer = mean_s - mean_t;

    let mut grad: BTreeMap<u32, Vec<f64>> = union.iter().map(|&id| (id, vec![0.0; dim])).collect();
    // ∂cos(x, y)/∂x = y/(|x||y|) − cos·x/|x|², accumulated with weight `scale`.
    let mut add_cos_grad = |x: u32, y: u32, scale: f64| {
        let c = cos(x, y);
        let (nx, ny) = (norms[&x], norms[&y]);
        let (vx, vy) = (w.vector(x).to_vec(), w.vector(y).to_vec());
        let gx = grad.get_mut(&x).unwrap();
        axpy(scale / (nx * ny), &vy, gx);
        axpy(-scale * c / (nx * nx), &vx, gx);
        let gy = grad.get_mut(&y).unwrap();
        axpy(scale / (nx * ny), &vx, gy);
        axpy(-scale * c / (ny * ny), &vy, gy);
    };
    for (k, &c) in targets.iter().enumerate() {
        let dnumer = if k < n_s { 1.0 / n_s as f64 } else { -1.0 / (n - n_s) as f64 };
        let dsd = (g[k] - mean) / (denom * sd);
        let coef = dnumer / sd - numer / (sd * sd) * dsd;
        for &a in &spec.a {
            add_cos_grad(c, a, coef / spec.a.len() as f64);
        }
        for &b in &spec.b {
            add_cos_grad(c, b, -coef / spec.b.len() as f64);
        }
    }
    Ok(grad)
}
