//! Scalar reference implementations and fixtures shared by the integration tests.
//!
//! The oracles below are written with plain loops over row-major slices and
//! do not call into the crate's numeric code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sprl::data::{EmbeddingTable, Instance, Label, LabelMode, PropertyCatalog, Dataset};
use sprl::decoders::{Activation, MtDecoderParams, TargetVocab};
use sprl::model::{Example, Model, ModelConfig};
use sprl::numeric::Graph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(r: &mut ChaCha8Rng, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-bound..bound)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `W x` for a `rows × x.len()` row-major matrix.
pub fn mv(w: &[f64], rows: usize, x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    assert_eq!(w.len(), rows * cols);
    let mut out = vec![0.0; rows];
    for r in 0..rows {
        let mut acc = 0.0;
        for c in 0..cols {
            acc += w[r * cols + c] * x[c];
        }
        out[r] = acc;
    }
    out
}

pub fn softmax_o(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Raw LSTM weights: `w_in` is `4d × n`, `w_h` is `4d × d`, gates i, f, g, o.
#[derive(Clone, Debug)]
pub struct RawLstm {
    pub d: usize,
    pub w_in: Vec<f64>,
    pub w_h: Vec<f64>,
    pub b: Vec<f64>,
}

impl RawLstm {
    pub fn of(p: &sprl::encoder::LstmParams) -> Self {
        RawLstm {
            d: p.hidden_dim(),
            w_in: p.w_input.value().data().to_vec(),
            w_h: p.w_hidden.value().data().to_vec(),
            b: p.bias.value().data().to_vec(),
        }
    }
}

pub fn lstm_cell_o(p: &RawLstm, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = p.d;
    let a = mv(&p.w_in, 4 * d, x);
    let r = mv(&p.w_h, 4 * d, h);
    let mut h2 = vec![0.0; d];
    let mut c2 = vec![0.0; d];
    for j in 0..d {
        let pre = |k: usize| a[k * d + j] + r[k * d + j] + p.b[k * d + j];
        let i = logistic(pre(0));
        let f = logistic(pre(1));
        let g = pre(2).tanh();
        let o = logistic(pre(3));
        c2[j] = f * c[j] + i * g;
        h2[j] = o * c2[j].tanh();
    }
    (h2, c2)
}

/// Bidirectional states `[fwd_t; bwd_t]` and the last forward state.
pub fn bilstm_o(xs: &[Vec<f64>], fwd: &RawLstm, bwd: &RawLstm) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = xs.len();
    let run = |p: &RawLstm, order: Vec<usize>| {
        let mut h = vec![0.0; p.d];
        let mut c = vec![0.0; p.d];
        let mut out = vec![Vec::new(); n];
        for t in order {
            let (h2, c2) = lstm_cell_o(p, &xs[t], &h, &c);
            out[t] = h2.clone();
            h = h2;
            c = c2;
        }
        out
    };
    let f = run(fwd, (0..n).collect());
    let b = run(bwd, (0..n).rev().collect());
    let states = (0..n).map(|t| [f[t].clone(), b[t].clone()].concat()).collect();
    (states, f[n - 1].clone())
}

/// Bilinear attention `s · (W_α h_t + b_α)` followed by softmax.
pub fn attention_o(s: &[f64], states: &[Vec<f64>], w_alpha: &[f64], b_alpha: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let logits: Vec<f64> = states
        .iter()
        .map(|h| {
            let k = mv(w_alpha, s.len(), h);
            k.iter().zip(b_alpha).zip(s).map(|((k, b), s)| (k + b) * s).sum()
        })
        .collect();
    let alpha = softmax_o(&logits);
    let width = states[0].len();
    let mut ctx = vec![0.0; width];
    for (a, h) in alpha.iter().zip(states) {
        for j in 0..width {
            ctx[j] += a * h[j];
        }
    }
    (ctx, alpha)
}

/// One decoder step: stacked LSTM, attention, `tanh` output layer, softmax.
pub fn mt_step_o(
    params: &MtDecoderParams,
    y_prev: usize,
    state: &[(Vec<f64>, Vec<f64>)],
    states: &[Vec<f64>],
) -> (Vec<(Vec<f64>, Vec<f64>)>, Vec<f64>) {
    let e = params.embedding.shape()[1];
    let y = if y_prev < params.vocab_size() { y_prev } else { TargetVocab::UNK_ID };
    let mut x = params.embedding.value().data()[y * e..(y + 1) * e].to_vec();
    let mut next = Vec::new();
    for (layer, (h, c)) in params.layers.iter().zip(state) {
        let (h2, c2) = lstm_cell_o(&RawLstm::of(layer), &x, h, c);
        next.push((h2.clone(), c2));
        x = h2;
    }
    let (ctx, _) = attention_o(&x, states, params.w_alpha.value().data(), params.b_alpha.value().data());
    let joined = [x, ctx].concat();
    let v = params.vocab_size();
    let z: Vec<f64> = mv(params.w_out.value().data(), v, &joined)
        .iter()
        .zip(params.b_out.value().data())
        .map(|(a, b)| (a + b).tanh())
        .collect();
    (next, softmax_o(&z))
}

pub fn spr_scores_o(
    h: &[f64],
    w_shared: &[f64],
    b_shared: &[f64],
    w_attr: &[f64],
    b_attr: &[f64],
    activation: Activation,
) -> Vec<f64> {
    let m = b_shared.len();
    let hidden: Vec<f64> = mv(w_shared, m, h)
        .iter()
        .zip(b_shared)
        .map(|(z, b)| {
            let z = z + b;
            match activation {
                Activation::Relu => z.max(0.0),
                Activation::Tanh => z.tanh(),
            }
        })
        .collect();
    mv(w_attr, b_attr.len(), &hidden)
        .iter()
        .zip(b_attr)
        .map(|(s, b)| s + b)
        .collect()
}

pub fn binary_loss_o(scores: &[f64], labels: &[bool]) -> f64 {
    scores
        .iter()
        .zip(labels)
        .map(|(s, l)| {
            let p = logistic(*s);
            if *l {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum()
}

pub fn scalar_loss_o(scores: &[f64], targets: &[f64]) -> f64 {
    scores.iter().zip(targets).map(|(s, t)| (s - t) * (s - t)).sum()
}

pub fn f1_o(pred: &[bool], gold: &[bool]) -> f64 {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    for (p, g) in pred.iter().zip(gold) {
        match (p, g) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

/// Raw-moment form: `(nΣxy − ΣxΣy) / √((nΣx² − (Σx)²)(nΣy² − (Σy)²))`.
pub fn pearson_o(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx * vy).sqrt())
}

/// Change in false negatives and false positives, counted over every instance.
pub fn contingency_o(
    base: &BTreeMap<String, bool>,
    new: &BTreeMap<String, bool>,
    gold: &BTreeMap<String, bool>,
) -> (i64, i64) {
    let errors = |p: &BTreeMap<String, bool>| {
        let mut fn_ = 0i64;
        let mut fp = 0i64;
        for (id, g) in gold {
            match (p[id], *g) {
                (false, true) => fn_ += 1,
                (true, false) => fp += 1,
                _ => {}
            }
        }
        (fn_, fp)
    };
    let (bn, bp) = errors(base);
    let (nn, np) = errors(new);
    (nn - bn, np - bp)
}

/// Words `w0 .. w{n-1}`.
pub fn words(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

pub fn random_sentence(r: &mut ChaCha8Rng, len: usize, vocab: usize) -> Vec<String> {
    (0..len).map(|_| format!("w{}", r.random_range(0..vocab))).collect()
}

pub fn table_for(vocab: usize, dim: usize, seed: u64) -> EmbeddingTable {
    let v: BTreeSet<String> = words(vocab).into_iter().collect();
    EmbeddingTable::random(&v, dim, seed)
}

pub fn tiny_config(r: &mut ChaCha8Rng) -> ModelConfig {
    ModelConfig {
        embedding_dim: r.random_range(1..=5),
        hidden_dim: r.random_range(1..=5),
        shared_dim: r.random_range(1..=5),
        activation: if r.random_bool(0.5) { Activation::Tanh } else { Activation::Relu },
        mt_layers: r.random_range(1..=2),
        mt_embedding_dim: r.random_range(1..=5),
        mt_vocab_size: 8,
    }
}

pub fn catalog(k: usize) -> PropertyCatalog {
    PropertyCatalog::new((0..k).map(|i| format!("p{i}")).collect()).unwrap()
}

/// Random binary-labeled instances over the `w*` vocabulary.
pub fn binary_dataset(r: &mut ChaCha8Rng, n: usize, k: usize, vocab: usize) -> Dataset {
    let instances = (0..n)
        .map(|i| {
            let len = r.random_range(2..=6);
            let tokens = random_sentence(r, len, vocab);
            let pred = r.random_range(0..len);
            let arg = (pred + r.random_range(1..len)) % len;
            Instance {
                sentence_id: format!("s{i}"),
                tokens,
                pred_head: pred,
                arg_head: arg,
                labels: (0..k).map(|_| Some(Label::Binary(r.random_bool(0.5)))).collect(),
                supersense: None,
                propbank_role: None,
            }
        })
        .collect();
    Dataset {
        mode: LabelMode::Binary,
        catalog: catalog(k),
        instances,
    }
}

/// Largest relative error between analytic and central-difference gradients
/// of `model`'s loss on `example`, over every parameter entry.
///
/// Entries whose gradients are both below `floor` in magnitude are compared on
/// the scale of `floor`.
/// Outcome of a finite-difference comparison.
pub struct GradientCheck {
    pub worst: f64,
    pub checked: usize,
    /// Entries where the two one-sided quotients disagree, i.e. the
    /// perturbation straddles a relu kink.
    pub kinks: usize,
}

/// Compares analytic gradients against central differences on every entry of
/// every parameter reached by the loss. The relative error denominator is
/// floored at `floor · max(1, |loss|)`, the scale below which round-off in
/// `(up − down) / 2h` dominates.
pub fn gradient_check(model: &Model, task: &str, example: Example<'_>, table: &EmbeddingTable, step: f64, floor: f64) -> GradientCheck {
    let (analytic, base) = {
        let mut g = Graph::new();
        let loss = model.loss_graph(&mut g, task, example, table, true).unwrap();
        let base = g.value(loss).item();
        (g.backward(loss).unwrap().into_param_grads(), base)
    };
    let floor = floor * base.abs().max(1.0);
    let mut probe = model.clone();
    let names: Vec<String> = probe.params().iter().map(|p| p.name().to_string()).collect();
    let mut out = GradientCheck { worst: 0.0, checked: 0, kinks: 0 };
    for (pi, name) in names.iter().enumerate() {
        let Some(grad) = analytic.get(name) else {
            continue;
        };
        let grad = grad.to_vec();
        for k in 0..grad.len() {
            let orig = probe.params()[pi].value().data()[k];
            probe.params_mut()[pi].value_mut().data_mut()[k] = orig + step;
            let up = probe.loss(task, example, table).unwrap();
            probe.params_mut()[pi].value_mut().data_mut()[k] = orig - step;
            let down = probe.loss(task, example, table).unwrap();
            probe.params_mut()[pi].value_mut().data_mut()[k] = orig;
            let (right, left) = ((up - base) / step, (base - down) / step);
            if (right - left).abs() > 1e-3 * right.abs().max(left.abs()).max(1.0) {
                out.kinks += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * step);
            let denom = grad[k].abs().max(numeric.abs()).max(floor);
            out.worst = out.worst.max((grad[k] - numeric).abs() / denom);
            out.checked += 1;
        }
    }
    out
}

/// Table over the generator vocabulary built from its Gaussian vectors.
pub fn synthetic_table(dim: usize, seed: u64) -> EmbeddingTable {
    let mut text = String::new();
    for (w, v) in sprl::synthetic::synthetic_embeddings(dim, seed) {
        text.push_str(&w);
        for x in v {
            text.push_str(&format!(" {x}"));
        }
        text.push('\n');
    }
    let vocab: BTreeSet<String> = sprl::synthetic::synthetic_vocabulary()
        .into_iter()
        .map(String::from)
        .collect();
    EmbeddingTable::from_reader(std::io::Cursor::new(text), "synthetic", &vocab, dim, seed).unwrap()
}

pub fn synthetic_dataset(records: &[sprl::data::Record]) -> Dataset {
    Dataset::from_records(
        records,
        LabelMode::Binary,
        Some(&sprl::synthetic::synthetic_catalog()),
        &sprl::data::Resolvers::default(),
    )
    .unwrap()
}
