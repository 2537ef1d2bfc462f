//! Gradient of the bias metric with respect to the co-occurrence entries of
//! bias-word rows, and its first-order prediction of differential bias.
//!
//! With `u`, `b`, `c` fixed, `w_i` depends only on row `i` of X. Implicit
//! differentiation of the point-wise optimality condition gives
//! `∂w_i/∂X_ij = 2 (f(X_ij)/X_ij − f′(X_ij)·r_ij) H_i⁻¹ u_j`, so each
//! gradient entry is a dot product with `H_i⁻¹ ∇_{w_i}B`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::cooc::{CoocDelta, CoocMatrix};
use crate::error::{Error, Result};
use crate::glove::{weight_f, weight_f_deriv, GloveModel, Hyperparams};
use crate::influence::{named_word_system, InfluenceOptions};
use crate::linalg::dot;
use crate::metrics::{self, ResolvedWeat};

/// `∂B/∂X_ij` for every stored entry of every bias-word row.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasGradient {
    /// Row `i` → `(j, ∂B/∂X_ij)` sorted by `j`.
    pub rows: BTreeMap<u32, Vec<(u32, f64)>>,
    /// [`GloveModel::checksum`] of the model the gradient was taken at.
    pub model_ref: u64,
}

impl BiasGradient {
    pub fn get(&self, i: u32, j: u32) -> Option<f64> {
        let row = self.rows.get(&i)?;
        row.binary_search_by_key(&j, |&(k, _)| k).ok().map(|k| row[k].1)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.rows.iter().flat_map(|(&i, row)| row.iter().map(move |&(j, g)| (i, j, g)))
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `2 (f(x)/x − f′(x)·residual)`; `f′` is taken as 0 from `x_max` on.
pub fn column_coefficient(x: f64, residual: f64, hyper: &Hyperparams) -> f64 {
    2.0 * (weight_f(x, hyper) / x - weight_f_deriv(x, hyper) * residual)
}

pub fn bias_gradient(
    x: &CoocMatrix,
    model: &GloveModel,
    spec: &ResolvedWeat,
    opts: InfluenceOptions,
) -> Result<BiasGradient> {
    if x.vocab_size() != model.vocab_size() {
        return Err(Error::DimensionMismatch(format!(
            "co-occurrence matrix has V = {}, model has V = {}",
            x.vocab_size(),
            model.vocab_size()
        )));
    }
    let ctx = model.context()?;
    let grad_w = metrics::weat_gradient_with(&model.w, spec, opts.std_dev)?;
    let rows = grad_w
        .par_iter()
        .map(|(&i, g)| {
            let system = named_word_system(spec, i, x, model, opts.damping)?;
            // H is symmetric, so ∇B·H⁻¹u_j = (H⁻¹∇B)·u_j.
            let v = system.solve(g);
            let row = x
                .row(i)
                .map(|(j, xij)| {
                    let r = model.residual(ctx, i, j, xij);
                    (j, column_coefficient(xij, r, &model.hyper) * dot(&v, ctx.u.row(j as usize)))
                })
                .collect();
            Ok((i, row))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(BiasGradient {
        rows,
        model_ref: model.checksum(),
    })
}

/// First-order prediction of `B(X) − B(X − delta)`. Entries outside the
/// gradient's rows contribute nothing; entries on a zero co-occurrence of a
/// gradient row have no derivative.
pub fn taylor_delta(grad: &BiasGradient, delta: &CoocDelta) -> Result<f64> {
    let mut total = 0.0;
    for (i, j, w) in delta.iter() {
        if !grad.rows.contains_key(&i) || w == 0.0 {
            continue;
        }
        match grad.get(i, j) {
            Some(g) => total += g * w,
            None => return Err(Error::NonDifferentiable { i, j }),
        }
    }
    Ok(total)
}

/// `i,j,dB_dXij` rows ordered by decreasing magnitude.
pub fn gradient_csv_string(grad: &BiasGradient) -> String {
    let mut entries: Vec<(u32, u32, f64)> = grad.entries().collect();
    entries.sort_by(|a, b| b.2.abs().total_cmp(&a.2.abs()).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut out = String::from("i,j,dB_dXij\n");
    for (i, j, g) in entries {
        out.push_str(&format!("{i},{j},{g}\n"));
    }
    out
}

pub fn write_gradient_csv(grad: &BiasGradient, path: &Path) -> Result<()> {
    fs::write(path, gradient_csv_string(grad)).map_err(|e| Error::io(path, e))
}
