//! GloVe training and loss evaluation.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cooc::CoocMatrix;
use crate::corpus::{words_checksum, Vocabulary};
use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub dim: usize,
    pub alpha: f64,
    pub x_max: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Context window the co-occurrences were extracted with.
    pub window: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            dim: 75,
            alpha: 0.75,
            x_max: 100.0,
            epochs: 300,
            learning_rate: 0.05,
            seed: 0,
            window: 8,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dim < 1 {
            return bad("dim must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(self.x_max > 0.0) {
            return bad("x_max must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Hyperparams { seed, ..*self }
    }
}

/// GloVe weighting `min((x / x_max)^alpha, 1)`, with `f(0) = 0`.
#[inline]
pub fn weight_f(x: f64, hyper: &Hyperparams) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= hyper.x_max {
        1.0
    } else {
        (x / hyper.x_max).powf(hyper.alpha)
    }
}

/// Derivative of [`weight_f`]; zero on the clamped side, including at `x_max`.
#[inline]
pub fn weight_f_deriv(x: f64, hyper: &Hyperparams) -> f64 {
    if x <= 0.0 || x >= hyper.x_max {
        0.0
    } else {
        hyper.alpha / hyper.x_max * (x / hyper.x_max).powf(hyper.alpha - 1.0)
    }
}

/// Row-major block of `rows` vectors of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vectors {
    dim: usize,
    data: Vec<f64>,
}

impl Vectors {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Vectors {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not form rows of {dim}",
                data.len()
            )));
        }
        Ok(Vectors { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Vectors::from_flat(dim, rows.concat())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Everything except the word vectors: context vectors and both bias terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextParams {
    pub u: Vectors,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GloveModel {
    pub w: Vectors,
    context: Option<ContextParams>,
    pub hyper: Hyperparams,
    pub vocab_hash: u64,
}

impl GloveModel {
    pub fn new(w: Vectors, context: ContextParams, hyper: Hyperparams, vocab_hash: u64) -> Result<Self> {
        let v = w.len();
        if context.u.len() != v || context.b.len() != v || context.c.len() != v || context.u.dim() != w.dim() {
            return Err(Error::DimensionMismatch(format!(
                "w is {v}x{}, u is {}x{}, |b| = {}, |c| = {}",
                w.dim(),
                context.u.len(),
                context.u.dim(),
                context.b.len(),
                context.c.len()
            )));
        }
        Ok(GloveModel {
            w,
            context: Some(context),
            hyper,
            vocab_hash,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.w.len()
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    pub fn context(&self) -> Result<&ContextParams> {
        self.context.as_ref().ok_or(Error::ContextUnavailable)
    }

    pub fn has_context(&self) -> bool {
        self.context.is_some()
    }

    pub fn check_vocab(&self, vocab: &Vocabulary) -> Result<()> {
        let found = vocab.checksum();
        if found != self.vocab_hash {
            return Err(Error::VocabMismatch {
                expected: self.vocab_hash,
                found,
            });
        }
        Ok(())
    }

    fn check_shape(&self, x: &CoocMatrix) -> Result<()> {
        if x.vocab_size() != self.vocab_size() {
            return Err(Error::DimensionMismatch(format!(
                "co-occurrence matrix has V = {}, model has V = {}",
                x.vocab_size(),
                self.vocab_size()
            )));
        }
        Ok(())
    }

    /// FNV-1a over the vocabulary hash and the bits of every parameter.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        mix(self.vocab_hash);
        self.w.as_slice().iter().for_each(|v| mix(v.to_bits()));
        if let Some(ctx) = &self.context {
            let params = ctx.u.as_slice().iter().chain(&ctx.b).chain(&ctx.c);
            params.for_each(|v| mix(v.to_bits()));
        }
        h
    }

    /// `w_i·u_j + b_i + c_j − log x`
    #[inline]
    pub fn residual(&self, ctx: &ContextParams, i: u32, j: u32, x: f64) -> f64 {
        dot(self.w.row(i as usize), ctx.u.row(j as usize)) + ctx.b[i as usize] + ctx.c[j as usize] - x.ln()
    }
}

/// `J = Σ f(X_ij) (w_i·u_j + b_i + c_j − log X_ij)²` over stored entries.
pub fn loss(x: &CoocMatrix, model: &GloveModel) -> Result<f64> {
    model.check_shape(x)?;
    let ctx = model.context()?;
    Ok(x.entries()
        .map(|(i, j, xij)| {
            let r = model.residual(ctx, i, j, xij);
            weight_f(xij, &model.hyper) * r * r
        })
        .sum())
}

/// Full analytic gradient of [`loss`] for every parameter block.
#[derive(Debug, Clone)]
pub struct LossGradient {
    pub w: Vectors,
    pub u: Vectors,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

pub fn loss_gradient(x: &CoocMatrix, model: &GloveModel) -> Result<LossGradient> {
    model.check_shape(x)?;
    let ctx = model.context()?;
    let (v, d) = (model.vocab_size(), model.dim());
    let mut g = LossGradient {
        w: Vectors::zeros(v, d),
        u: Vectors::zeros(v, d),
        b: vec![0.0; v],
        c: vec![0.0; v],
    };
    for (i, j, xij) in x.entries() {
        let s = 2.0 * weight_f(xij, &model.hyper) * model.residual(ctx, i, j, xij);
        let (iu, ju) = (i as usize, j as usize);
        for k in 0..d {
            g.w.row_mut(iu)[k] += s * ctx.u.row(ju)[k];
            g.u.row_mut(ju)[k] += s * model.w.row(iu)[k];
        }
        g.b[iu] += s;
        g.c[ju] += s;
    }
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: GloveModel,
    /// Loss accumulated over each epoch's pass (pre-update residuals).
    pub epoch_losses: Vec<f64>,
}

struct Entry {
    i: u32,
    j: u32,
    log_x: f64,
    f: f64,
}

/// Adaptive-gradient GloVe training; serial and bit-reproducible per seed.
pub fn train(x: &CoocMatrix, hyper: &Hyperparams, vocab_hash: u64) -> Result<TrainOutput> {
    hyper.validate()?;
    if x.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty co-occurrence matrix".into()));
    }
    let (v, d) = (x.vocab_size(), hyper.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let half = 0.5 / d as f64;
    let mut init = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-half..half)).collect() };
    let mut w = init(v * d);
    let mut u = init(v * d);
    let mut b = init(v);
    let mut c = init(v);
    let mut gw = vec![1.0f64; v * d];
    let mut gu = vec![1.0f64; v * d];
    let mut gb = vec![1.0f64; v];
    let mut gc = vec![1.0f64; v];

    let mut entries: Vec<Entry> = x
        .entries()
        .map(|(i, j, xij)| Entry {
            i,
            j,
            log_x: xij.ln(),
            f: weight_f(xij, hyper),
        })
        .collect();
    let eta = hyper.learning_rate;
    let mut epoch_losses = Vec::with_capacity(hyper.epochs);

    for epoch in 0..hyper.epochs {
        // Shuffling the entries themselves keeps the pass sequential in memory.
        entries.shuffle(&mut rng);
        let mut cost = 0.0;
        for e in &entries {
            let (wi, uj) = (e.i as usize * d, e.j as usize * d);
            let wrow = &mut w[wi..wi + d];
            let urow = &mut u[uj..uj + d];
            let diff = dot(wrow, urow) + b[e.i as usize] + c[e.j as usize] - e.log_x;
            if !diff.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, i: e.i, j: e.j });
            }
            let fdiff = e.f * diff;
            cost += fdiff * diff;
            let step = eta * fdiff;
            let gwrow = &mut gw[wi..wi + d];
            let gurow = &mut gu[uj..uj + d];
            for k in 0..d {
                let t1 = step * urow[k];
                let t2 = step * wrow[k];
                wrow[k] -= t1 / gwrow[k].sqrt();
                urow[k] -= t2 / gurow[k].sqrt();
                gwrow[k] += t1 * t1;
                gurow[k] += t2 * t2;
            }
            b[e.i as usize] -= step / gb[e.i as usize].sqrt();
            c[e.j as usize] -= step / gc[e.j as usize].sqrt();
            gb[e.i as usize] += step * step;
            gc[e.j as usize] += step * step;
        }
        if !cost.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, i: 0, j: 0 });
        }
        log::debug!("epoch {epoch}: loss {cost}");
        epoch_losses.push(cost);
    }

    let model = GloveModel::new(
        Vectors { dim: d, data: w },
        ContextParams {
            u: Vectors { dim: d, data: u },
            b,
            c,
        },
        *hyper,
        vocab_hash,
    )?;
    Ok(TrainOutput { model, epoch_losses })
}

const SIDECAR_MAGIC: &[u8; 4] = b"GLVE";
const SIDECAR_VERSION: u32 = 1;

/// Where the context parameters of an embedding file live.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ctx");
    PathBuf::from(s)
}

/// Writes `word v1 … vD` lines for `w`, plus the binary sidecar with
/// `u`, `b`, `c` and the hyperparameters when the model has them.
pub fn save_embeddings(model: &GloveModel, vocab: &Vocabulary, path: &Path) -> Result<()> {
    model.check_vocab(vocab)?;
    let mut text = String::new();
    for (i, word) in vocab.words().iter().enumerate() {
        text.push_str(word);
        for x in model.w.row(i) {
            // `{}` prints the shortest representation that round-trips exactly.
            text.push(' ');
            text.push_str(&x.to_string());
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))?;

    let Ok(ctx) = model.context() else {
        return Ok(());
    };
    let (v, d) = (model.vocab_size(), model.dim());
    let mut out = Vec::with_capacity(16 + 8 * (v * d + 2 * v) + 64);
    out.extend_from_slice(SIDECAR_MAGIC);
    out.extend_from_slice(&SIDECAR_VERSION.to_le_bytes());
    out.extend_from_slice(&(v as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for x in ctx.u.as_slice().iter().chain(&ctx.b).chain(&ctx.c) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let h = &model.hyper;
    for x in [h.alpha, h.x_max, h.learning_rate] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&(h.epochs as u64).to_le_bytes());
    out.extend_from_slice(&h.seed.to_le_bytes());
    out.extend_from_slice(&(h.window as u64).to_le_bytes());
    out.extend_from_slice(&model.vocab_hash.to_le_bytes());
    let side = sidecar_path(path);
    let mut f = fs::File::create(&side).map_err(|e| Error::io(&side, e))?;
    f.write_all(&out).map_err(|e| Error::io(&side, e))
}

/// An embedding file read back: the word order it carries and the model.
#[derive(Debug, Clone)]
pub struct LoadedEmbeddings {
    pub words: Vec<String>,
    pub model: GloveModel,
}

impl LoadedEmbeddings {
    pub fn vocabulary(&self) -> Result<Vocabulary> {
        Vocabulary::from_ordered_words(self.words.clone())
    }
}

pub fn load_embeddings(path: &Path) -> Result<LoadedEmbeddings> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut words = Vec::new();
    let mut data = Vec::new();
    let mut dim = None;
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let word = fields.next().unwrap_or_default();
        let start = data.len();
        for field in fields {
            data.push(field.parse::<f64>().map_err(|_| Error::Parse {
                what: "embedding",
                line: n + 1,
                reason: format!("bad value '{field}'"),
            })?);
        }
        let got = data.len() - start;
        match dim {
            None => dim = Some(got),
            Some(d) if d != got => {
                return Err(Error::DimensionMismatch(format!(
                    "line {} has {got} values, expected {d}",
                    n + 1
                )))
            }
            _ => {}
        }
        words.push(word.to_string());
    }
    let dim = dim.filter(|&d| d > 0).ok_or_else(|| Error::DimensionMismatch("embedding file has no vectors".into()))?;
    let w = Vectors::from_flat(dim, data)?;
    let vocab_hash = words_checksum(&words);

    let side = sidecar_path(path);
    let model = if side.exists() {
        let bytes = fs::read(&side).map_err(|e| Error::io(&side, e))?;
        let (context, hyper, stored_hash) = parse_sidecar(&bytes, words.len(), dim)?;
        if stored_hash != vocab_hash {
            return Err(Error::VocabMismatch {
                expected: stored_hash,
                found: vocab_hash,
            });
        }
        GloveModel::new(w, context, hyper, vocab_hash)?
    } else {
        GloveModel {
            w,
            context: None,
            hyper: Hyperparams {
                dim,
                ..Hyperparams::default()
            },
            vocab_hash,
        }
    };
    Ok(LoadedEmbeddings { words, model })
}

fn parse_sidecar(bytes: &[u8], v: usize, d: usize) -> Result<(ContextParams, Hyperparams, u64)> {
    let need = 16 + 8 * (v * d + 2 * v) + 8 * 7;
    if bytes.len() < 16 || &bytes[..4] != SIDECAR_MAGIC {
        return Err(Error::DimensionMismatch("sidecar is not a GLVE file".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let version = u32_at(4) as u32;
    if version != SIDECAR_VERSION {
        return Err(Error::DimensionMismatch(format!("unsupported sidecar version {version}")));
    }
    let (sv, sd) = (u32_at(8), u32_at(12));
    if sv != v || sd != d {
        return Err(Error::DimensionMismatch(format!(
            "sidecar is {sv}x{sd}, embedding file is {v}x{d}"
        )));
    }
    if bytes.len() != need {
        return Err(Error::DimensionMismatch(format!(
            "sidecar has {} bytes, expected {need}",
            bytes.len()
        )));
    }
    let f64s: Vec<f64> = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let u64_at = |k: usize| u64::from_le_bytes(bytes[16 + 8 * k..24 + 8 * k].try_into().unwrap());
    let vd = v * d;
    let context = ContextParams {
        u: Vectors::from_flat(d, f64s[..vd].to_vec())?,
        b: f64s[vd..vd + v].to_vec(),
        c: f64s[vd + v..vd + 2 * v].to_vec(),
    };
    let t = vd + 2 * v;
    let hyper = Hyperparams {
        dim: d,
        alpha: f64s[t],
        x_max: f64s[t + 1],
        learning_rate: f64s[t + 2],
        epochs: u64_at(t + 3) as usize,
        seed: u64_at(t + 4),
        window: u64_at(t + 5) as usize,
    };
    Ok((context, hyper, u64_at(t + 6)))
}
