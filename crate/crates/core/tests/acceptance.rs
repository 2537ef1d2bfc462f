//! End-to-end acceptance run on the synthetic desk corpus. Prints one line
//! per criterion and exits non-zero if any fails.

use std::time::Instant;

use biastrace::bias_gradient::{bias_gradient, taylor_delta};
use biastrace::cooc::{self, CoocMatrix};
use biastrace::corpus::{build_vocabulary, Corpus, Vocabulary};
use biastrace::glove::{self, loss, loss_gradient, weight_f, ContextParams, GloveModel, Hyperparams, Vectors};
use biastrace::harness::{self, ProtocolConfig, SetKind};
use biastrace::influence::{self, InfluenceEngine, InfluenceOptions};
use biastrace::linalg::norm;
use biastrace::metrics::{weat_effect_size, weat_gradient, ResolvedWeat, WeatSpec};
use biastrace::ppmi;
use biastrace::synth::{self, SynthConfig, DESK_MIN_COUNT};
use biastrace::WordMask;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Desk {
    corpus: Corpus,
    vocab: Vocabulary,
    spec: ResolvedWeat,
    x: CoocMatrix,
    hyper: Hyperparams,
}

fn desk() -> Desk {
    let weat = WeatSpec::weat1();
    let corpus = synth::generate(&SynthConfig::default(), &weat).unwrap().corpus;
    let vocab = build_vocabulary(&corpus, DESK_MIN_COUNT).unwrap();
    let hyper = synth::desk_hyperparams();
    let x = cooc::extract_cooc(&corpus, &vocab, hyper.window).unwrap();
    Desk {
        spec: weat.resolve(&vocab).unwrap(),
        corpus,
        vocab,
        x,
        hyper,
    }
}

#[derive(Default)]
struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn line(&mut self, id: &'static str, ok: bool, what: &str) {
        println!("{} {id:<3} {what}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id);
        }
    }
}

fn info(what: &str) {
    println!("     ... {what}");
}

fn vec_rel(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(1e-300)
}

fn pearson_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Loss of row `i` alone with `u`, `b`, `c` fixed.
fn row_loss(row: &[(u32, f64)], w: &[f64], bi: f64, ctx: &ContextParams, h: &Hyperparams) -> f64 {
    row.iter()
        .map(|&(j, x)| {
            let uj = ctx.u.row(j as usize);
            let r: f64 = w.iter().zip(uj).map(|(a, b)| a * b).sum::<f64>() + bi + ctx.c[j as usize] - x.ln();
            weight_f(x, h) * r * r
        })
        .sum()
}

/// The minimizer of [`row_loss`], from its normal equations.
fn exact_row_minimizer(row: &[(u32, f64)], bi: f64, ctx: &ContextParams, h: &Hyperparams) -> Vec<f64> {
    let d = ctx.u.dim();
    let mut a = vec![vec![0.0; d]; d];
    let mut rhs = vec![0.0; d];
    for &(j, x) in row {
        let f = weight_f(x, h);
        let uj = ctx.u.row(j as usize);
        let target = x.ln() - bi - ctx.c[j as usize];
        for p in 0..d {
            rhs[p] += f * uj[p] * target;
            for q in 0..d {
                a[p][q] += f * uj[p] * uj[q];
            }
        }
    }
    solve_dense(a, rhs)
}

fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| f64::from(i == j)).collect()).collect();
    for _ in 0..d {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        for row in q.iter_mut() {
            let k = 2.0 * row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / vv;
            for (r, vi) in row.iter_mut().zip(&v) {
                *r -= k * vi;
            }
        }
    }
    q
}

fn criterion_5(d: &Desk, r: &mut Report) {
    // A short run on the desk matrix; the checks hold at any parameters.
    let hyper = Hyperparams { epochs: 3, ..d.hyper };
    let model = glove::train(&d.x, &hyper, d.vocab.checksum()).unwrap().model;
    let ctx = model.context().unwrap();
    let dim = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // GloVe gradient, every parameter block.
    let g = loss_gradient(&d.x, &model).unwrap();
    let mut worst_grad: f64 = 0.0;
    for _ in 0..12 {
        let word = rng.gen_range(0..d.vocab.len());
        let k = rng.gen_range(0..dim);
        for block in 0..4 {
            let analytic = match block {
                0 => g.w.row(word)[k],
                1 => g.u.row(word)[k],
                2 => g.b[word],
                _ => g.c[word],
            };
            let eval = |eps: f64| {
                let mut w = model.w.clone();
                let mut c = ctx.clone();
                match block {
                    0 => w.row_mut(word)[k] += eps,
                    1 => c.u.row_mut(word)[k] += eps,
                    2 => c.b[word] += eps,
                    _ => c.c[word] += eps,
                }
                loss(&d.x, &GloveModel::new(w, c, model.hyper, model.vocab_hash).unwrap()).unwrap()
            };
            let eps = 1e-4;
            let fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
            worst_grad = worst_grad.max((fd - analytic).abs() / analytic.abs().max(1.0));
        }
    }

    // Block Hessian against second differences of the row loss.
    let mut worst_hess: f64 = 0.0;
    for &i in d.spec.union().iter().take(4) {
        let row: Vec<(u32, f64)> = d.x.row(i).collect();
        let sys = influence::word_hessian(i, row.iter().copied(), &ctx.u, 0.0, &model.hyper).unwrap();
        let w0 = model.w.row(i as usize).to_vec();
        let bi = ctx.b[i as usize];
        let h = 1e-3;
        let at = |dp: usize, sp: f64, dq: usize, sq: f64| {
            let mut w = w0.clone();
            w[dp] += sp;
            w[dq] += sq;
            row_loss(&row, &w, bi, ctx, &model.hyper)
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for p in 0..dim {
            for q in 0..dim {
                let fd = (at(p, h, q, h) - at(p, h, q, -h) - at(p, -h, q, h) + at(p, -h, q, -h)) / (4.0 * h * h);
                let a = sys.hessian.get(p, q);
                num += (fd - a).powi(2);
                den += a * a;
            }
        }
        worst_hess = worst_hess.max((num / den).sqrt());
    }

    // WEAT gradient.
    let wg = weat_gradient(&model.w, &d.spec).unwrap();
    let mut worst_weat: f64 = 0.0;
    for (&i, grad) in &wg {
        for k in 0..dim {
            let eval = |eps: f64| {
                let mut w = model.w.clone();
                w.row_mut(i as usize)[k] += eps;
                weat_effect_size(&w, &d.spec).unwrap()
            };
            let eps = 1e-6;
            let fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
            let scale = norm(grad).max(1e-3);
            worst_weat = worst_weat.max((fd - grad[k]).abs() / scale);
        }
    }

    r.line("5a", worst_grad <= 1e-5, &format!("GloVe gradient vs central differences: max rel err {worst_grad:.2e} (≤ 1e-5)"));
    r.line("5b", worst_hess <= 1e-4, &format!("block Hessian vs finite-difference Hessian: max rel err {worst_hess:.2e} (≤ 1e-4)"));
    r.line("5c", worst_weat <= 1e-5, &format!("WEAT gradient vs central differences: max rel err {worst_weat:.2e} (≤ 1e-5)"));
}

fn criterion_5d(d: &Desk, models: &[GloveModel], scan: &[influence::DiffBiasRecord], r: &mut Report) {
    let model = &models[0];
    let grad = bias_gradient(&d.x, model, &d.spec, InfluenceOptions::default()).unwrap();
    let one = std::slice::from_ref(model);
    let engine = InfluenceEngine::new(&d.x, &d.vocab, one, &d.spec, InfluenceOptions::default()).unwrap();

    // Directional derivatives along the 40 most influential documents.
    let mut ranked: Vec<&influence::DiffBiasRecord> = scan.iter().collect();
    ranked.sort_by(|a, b| b.delta_b.abs().total_cmp(&a.delta_b.abs()));
    let eps = 1e-5;
    let mut taylor = Vec::new();
    let mut path = Vec::new();
    let mut at_full = Vec::new();
    for rec in ranked.iter().take(40) {
        let delta = engine.doc_delta(&d.corpus, rec.doc_id).unwrap();
        taylor.push(taylor_delta(&grad, &delta).unwrap());
        path.push(engine.delta_for(&delta.scaled_by(eps)).unwrap().0[0] / eps);
        at_full.push(engine.delta_for(&delta.scaled_by(0.1)).unwrap().0[0] / 0.1);
    }
    let r2 = pearson_r2(&taylor, &path);
    let slope = taylor.iter().zip(&path).map(|(a, b)| a * b).sum::<f64>() / taylor.iter().map(|a| a * a).sum::<f64>();
    r.line(
        "5d",
        r2 >= 0.999,
        &format!("bias gradient vs influence path at ε = {eps:.0e}: R² {r2:.6}, slope {slope:.4} (R² ≥ 0.999)"),
    );
    info(&format!("same at ε = 0.1: R² {:.4}", pearson_r2(&taylor, &at_full)));

    // How often the first-order prediction of a whole-document removal has the
    // sign of the influence estimate.
    let mut agree = 0;
    let mut total = 0;
    for rec in scan.iter().filter(|s| s.delta_b.abs() > 1e-6) {
        let delta = engine.doc_delta(&d.corpus, rec.doc_id).unwrap();
        let t = taylor_delta(&grad, &delta).unwrap();
        let est = engine.delta_for(&delta).unwrap().0[0];
        total += 1;
        agree += usize::from(t.signum() == est.signum());
    }
    info(&format!("bias gradient and influence agree in sign on {agree}/{total} documents"));
}

fn criterion_6(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let spec = ResolvedWeat::from_ids("random", vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![8, 9, 10], vec![11, 12, 13]).unwrap();
    let (mut anti, mut rot, mut scale, mut orth) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let dim = 25;
    for _ in 0..500 {
        let rows: Vec<Vec<f64>> = (0..14).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let w = Vectors::from_rows(&rows).unwrap();
        let e = weat_effect_size(&w, &spec).unwrap();
        let e_st = weat_effect_size(&w, &spec.swap_targets()).unwrap();
        let e_ab = weat_effect_size(&w, &spec.swap_attributes()).unwrap();
        anti = anti.max((e + e_st).abs()).max((e + e_ab).abs());

        let q = random_orthogonal(dim, &mut rng);
        let rotated: Vec<Vec<f64>> = rows
            .iter()
            .map(|v| q.iter().map(|qr| qr.iter().zip(v).map(|(a, b)| a * b).sum()).collect())
            .collect();
        rot = rot.max((weat_effect_size(&Vectors::from_rows(&rotated).unwrap(), &spec).unwrap() - e).abs());

        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .map(|v| {
                let s = 10f64.powf(rng.gen_range(-3.0..3.0));
                v.iter().map(|x| x * s).collect()
            })
            .collect();
        scale = scale.max((weat_effect_size(&Vectors::from_rows(&scaled).unwrap(), &spec).unwrap() - e).abs());

        for (&i, g) in &weat_gradient(&w, &spec).unwrap() {
            let v = w.row(i as usize);
            let d: f64 = g.iter().zip(v).map(|(a, b)| a * b).sum();
            orth = orth.max(d.abs());
        }
    }
    r.line("6a", anti <= 1e-12, &format!("WEAT antisymmetry under S↔T and A↔B: max |B + B_swapped| {anti:.1e} (≤ 1e-12)"));
    r.line(
        "6b",
        rot <= 1e-10 && scale <= 1e-10,
        &format!("rotation / per-vector scaling invariance: max drift {rot:.1e} / {scale:.1e} (≤ 1e-10)"),
    );
    r.line("6c", orth <= 1e-10, &format!("gradient orthogonality: max |∇_i B · w_i| {orth:.1e} (≤ 1e-10)"));
}

fn criterion_7(d: &Desk, r: &mut Report) {
    let bytes = |m: &CoocMatrix| cooc::to_bytes(m);
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // X is the sum of the matrices of any partition of the corpus.
    let mut ids: Vec<usize> = (0..d.corpus.len()).collect();
    ids.shuffle(&mut rng);
    let mut sum = CoocMatrix::empty(d.vocab.len(), d.x.scale());
    for part in ids.chunks(ids.len() / 5 + 1) {
        let rest: Vec<usize> = ids.iter().copied().filter(|i| !part.contains(i)).collect();
        let piece = cooc::extract_cooc(&d.corpus.without(&rest).unwrap(), &d.vocab, d.hyper.window).unwrap();
        sum = sum.sum(&piece).unwrap();
    }
    let additive = bytes(&sum) == bytes(&d.x);

    // Removing documents one by one matches re-extraction, and adding them back restores X.
    let removed: Vec<usize> = ids[..25].to_vec();
    let mut x = d.x.clone();
    let mut deltas = Vec::new();
    for &id in &removed {
        let delta = cooc::doc_cooc_rows(d.corpus.get(id).unwrap(), &d.vocab, d.hyper.window, &WordMask::all(d.vocab.len())).unwrap();
        x = cooc::apply_removal(&x, &delta).unwrap();
        deltas.push(delta);
    }
    let fresh = cooc::extract_cooc(&d.corpus.without(&removed).unwrap(), &d.vocab, d.hyper.window).unwrap();
    let removal_exact = bytes(&x) == bytes(&fresh);
    for delta in deltas.iter().rev() {
        x = cooc::apply_addition(&x, delta).unwrap();
    }
    let round_trip = bytes(&x) == bytes(&d.x);
    r.line(
        "7a",
        additive && removal_exact && round_trip,
        &format!("co-occurrence additivity {additive}, removal = re-extraction {removal_exact}, delta round trip {round_trip}"),
    );

    // Files read back identically.
    let dir = tempfile::tempdir().unwrap();
    let xp = dir.path().join("x.bin");
    cooc::serialize(&d.x, &xp).unwrap();
    let cooc_ok = bytes(&cooc::deserialize(&xp).unwrap()) == bytes(&d.x);
    let vp = dir.path().join("vocab.txt");
    d.vocab.save(&vp).unwrap();
    let back = Vocabulary::load(&vp).unwrap();
    let vocab_ok = back.words() == d.vocab.words() && back.counts() == d.vocab.counts();

    // Serial training is bit-reproducible, and the embedding files round-trip.
    let a = glove::train(&d.x, &d.hyper.with_seed(3), d.vocab.checksum()).unwrap().model;
    let b = glove::train(&d.x, &d.hyper.with_seed(3), d.vocab.checksum()).unwrap().model;
    let deterministic = a.checksum() == b.checksum();
    let ep = dir.path().join("vectors.txt");
    glove::save_embeddings(&a, &d.vocab, &ep).unwrap();
    let emb_ok = glove::load_embeddings(&ep).unwrap().model.checksum() == a.checksum();
    r.line(
        "7b",
        cooc_ok && vocab_ok && emb_ok,
        &format!("serialization round trips: co-occurrences {cooc_ok}, vocabulary {vocab_ok}, embeddings {emb_ok}"),
    );
    r.line("7c", deterministic, &format!("training twice with seed 3 gives identical parameters: {deterministic}"));
}

/// Relative error of the influence estimate of `w̃_i` against the exact
/// minimizer of the row loss on `X̃_i`, for one (word, document) pair.
fn frozen_error(d: &Desk, model: &GloveModel, i: u32, doc_id: usize) -> Option<f64> {
    let ctx = model.context().unwrap();
    let h = &model.hyper;
    let doc = d.corpus.get(doc_id).unwrap();
    let delta = cooc::doc_cooc_rows(doc, &d.vocab, h.window, &WordMask::from_ids(d.vocab.len(), [i])).unwrap();
    let row_weight: f64 = d.x.row(i).map(|(_, v)| v).sum();
    let removed: f64 = delta.iter().filter(|e| e.0 == i).map(|e| e.2).sum();
    if removed == 0.0 || removed > 0.01 * row_weight {
        return None;
    }
    let xt = cooc::apply_removal(&d.x, &delta).unwrap();
    let w = model.w.row(i as usize);
    let bi = ctx.b[i as usize];
    let sys = influence::word_hessian(i, d.x.row(i), &ctx.u, 0.0, h).unwrap();
    let before = influence::pointwise_grad(d.x.row(i), w, bi, ctx, h);
    let after = influence::pointwise_grad(xt.row(i), w, bi, ctx, h);
    let approx = influence::approx_perturbed_vector(&sys, w, &before, &after);
    let row: Vec<(u32, f64)> = xt.row(i).collect();
    let exact = exact_row_minimizer(&row, bi, ctx, h);
    Some(vec_rel(&approx, &exact))
}

fn criterion_4(d: &Desk, r: &mut Report) {
    // The estimate is a Newton step from the trained vector, so its error is
    // the gradient left at w*; this needs a tightly converged model.
    let hyper = Hyperparams {
        epochs: 1000,
        learning_rate: 0.05,
        ..d.hyper
    };
    let t = Instant::now();
    let model = glove::train(&d.x, &hyper, d.vocab.checksum()).unwrap().model;
    info(&format!("frozen-quadratic model: {} epochs at rate {} in {:.0?}", hyper.epochs, hyper.learning_rate, t.elapsed()));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut errs = Vec::new();
    while errs.len() < 100 {
        let doc_id = rng.gen_range(0..d.corpus.len());
        let ids: Vec<u32> = d.vocab.encode(&d.corpus.get(doc_id).unwrap().tokens).into_iter().flatten().collect();
        let Some(&i) = ids.choose(&mut rng) else { continue };
        if let Some(e) = frozen_error(d, &model, i, doc_id) {
            errs.push(e);
        }
    }
    errs.sort_by(f64::total_cmp);
    let max = errs[errs.len() - 1];
    r.line(
        "4",
        max <= 0.05,
        &format!("frozen quadratic over 100 (word, document) pairs: median {:.2}%, max {:.2}% (≤ 5%)", 100.0 * errs[50], 100.0 * max),
    );
}

fn criteria_1_to_3(d: &Desk, r: &mut Report) -> (Vec<GloveModel>, Vec<influence::DiffBiasRecord>) {
    let config = ProtocolConfig {
        hyper: d.hyper,
        ..ProtocolConfig::default()
    };
    let t = Instant::now();
    let run = harness::run_protocol(&d.corpus, &d.vocab, &d.spec, &config).unwrap();
    let elapsed = t.elapsed();
    let rep = &run.report;
    info(&format!(
        "desk corpus: {} documents, V = {}, nnz = {}; protocol took {:.0?}",
        d.corpus.len(),
        d.vocab.len(),
        d.x.nnz(),
        elapsed
    ));
    info(&format!("baseline effect size {:.3} ± {:.3}", rep.baseline.mean, rep.baseline.std.unwrap_or(f64::NAN)));
    for o in &rep.sets {
        info(&format!(
            "{:<14} approx {:+.3}  truth {:+.3} ± {:.3}  p {:.3}  direction {}",
            o.set,
            o.approx_effect,
            o.truth.mean,
            o.truth.std.unwrap_or(f64::NAN),
            o.p.unwrap_or(f64::NAN),
            if o.direction_ok { "ok" } else { "wrong" }
        ));
    }

    let r2 = rep.r_squared.unwrap_or(f64::NAN);
    let in_budget = elapsed.as_secs() < 30 * 60;
    r.line(
        "1",
        r2 >= 0.90 && in_budget,
        &format!("approximated vs retrained effect sizes over {} sets: r² = {r2:.3} (≥ 0.90), {:.0?} (< 30 min)", rep.sets.len(), elapsed),
    );

    let targeted: Vec<_> = rep.sets.iter().filter(|o| o.kind != Some(SetKind::Random) && o.size >= 30).collect();
    let targeted_ok = targeted.iter().filter(|o| o.direction_ok && o.significant(0.05)).count();
    let random: Vec<_> = rep.sets.iter().filter(|o| o.kind == Some(SetKind::Random)).collect();
    let random_sig = random.iter().filter(|o| o.significant(0.05)).count();
    r.line(
        "2",
        targeted_ok == targeted.len() && random_sig <= 1,
        &format!(
            "targeted sets of size ≥ 30 moving as predicted with p < 0.05: {targeted_ok}/{}; significant random sets: {random_sig}/{} (≤ 1)",
            targeted.len(),
            random.len()
        ),
    );

    let dominates = !rep.ppmi.is_empty() && rep.ppmi.iter().all(|c| c.influence_reduction > c.ppmi_reduction);
    let detail: Vec<String> = rep
        .ppmi
        .iter()
        .map(|c| {
            let pct = |x: f64| 100.0 * x / rep.baseline.mean;
            format!("k={}: {:.1}% vs {:.1}%", c.k, pct(c.influence_reduction), pct(c.ppmi_reduction))
        })
        .collect();
    r.line("3", dominates, &format!("bias reduction, influence vs PPMI top-k: {}", detail.join(", ")));

    // PPMI and embedding effect sizes over random word sets.
    let p = ppmi::build_ppmi(&d.x);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let pool: Vec<u32> = (0..d.vocab.len() as u32).filter(|&i| d.vocab.counts()[i as usize] >= 20).collect();
    while a.len() < 500 {
        let w: Vec<u32> = pool.choose_multiple(&mut rng, 24).copied().collect();
        let spec = ResolvedWeat::from_ids("random", w[..8].to_vec(), w[8..16].to_vec(), w[16..20].to_vec(), w[20..].to_vec()).unwrap();
        if let (Ok(x), Ok(y)) = (ppmi::ppmi_weat(&p, &spec), weat_effect_size(&run.baselines[0].w, &spec)) {
            a.push(x);
            b.push(y);
        }
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    info(&format!(
        "PPMI vs embedding effect size over 500 random word sets: r² = {:.3}, correlation {}",
        pearson_r2(&a, &b),
        if cov > 0.0 { "positive" } else { "not positive" }
    ));
    (run.baselines, run.scan)
}

fn main() {
    let start = Instant::now();
    let mut report = Report::default();
    let d = desk();

    let (baselines, scan) = criteria_1_to_3(&d, &mut report);
    criterion_4(&d, &mut report);
    criterion_5(&d, &mut report);
    criterion_5d(&d, &baselines, &scan, &mut report);
    criterion_6(&mut report);
    criterion_7(&d, &mut report);
    println!("SKIP 8   full-scale replication on Simple Wikipedia (needs the external corpus; not run here)");

    println!("acceptance finished in {:.0?}", start.elapsed());
    if report.failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed: {}", report.failed.join(", "));
        std::process::exit(1);
    }
}
