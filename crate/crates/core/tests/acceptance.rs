//! Acceptance suite. Prints one PASS/FAIL/SKIPPED line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Criteria 8 and 9 need the SPR1 corpus and pretrained vectors: set
//! `SPRL_SPR1_DIR` to a directory holding prepared `train.jsonl`, `dev.jsonl`
//! and `test.jsonl` with raw ratings, and `SPRL_EMBEDDINGS` to a 300-d
//! vector file.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use common::*;
use sprl::data::{
    binarize_scalar, map_binary, map_scalar, merge_redundant, Dataset, Instance, Label, LabelMode,
    PropertyCatalog, Rating, Resolvers, SupersenseDistribution, STANDARD_FRACTIONS,
};
use sprl::decoders::{
    attention, binary_loss, mt_initial_state, mt_sequence_loss, mt_step, propbank_forward, scalar_loss,
    spr_scores, Activation, MtDecoderParams, PropBankDecoderParams, SprDecoderParams, SupersenseDecoderParams,
    TargetVocab,
};
use sprl::decoders::supersense::supersense_forward_raw;
use sprl::encoder::{encode, lstm_cell, pair_state, EncoderParams, HiddenStates, LstmParams};
use sprl::evaluation::{aggregate, contingency_delta, f1, pearson, spearman, spr_report, BinaryCounts, Correlation, Predictions};
use sprl::model::{Example, Model, ModelConfig};
use sprl::numeric::Tensor;
use sprl::seeds::Seeds;
use sprl::synthetic::{random_label_records, synthetic_splits};
use sprl::training::{
    ablation_run, train, AblationMode, AblationSpec, ExperimentConfig, PreparedExperiment, Task, TrainOptions,
};

enum Verdict {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

// 1 -------------------------------------------------------------------------

const FD_STEP: f64 = 1e-5;
const FD_FLOOR: f64 = 1e-6;
const FD_TOLERANCE: f64 = 1e-4;
const GRADIENT_CASES: u64 = 120;

fn gradient_integrity() -> Verdict {
    let mut worst = 0.0f64;
    let mut entries = 0;
    let mut kinks = 0;
    let mut per_kind = [0usize; 5];
    for case in 0..GRADIENT_CASES {
        let mut r = rng(1000 + case);
        let cfg = tiny_config(&mut r);
        let table = table_for(6, cfg.embedding_dim, case);
        let mut model = Model::new(cfg.clone(), case);
        let len = r.random_range(1..=5);
        let tokens = random_sentence(&mut r, len, 6);
        let pred = r.random_range(0..len);
        let arg = r.random_range(0..len);
        let kind = (case % 5) as usize;
        per_kind[kind] += 1;
        let mut inst = Instance {
            sentence_id: format!("g{case}"),
            tokens: tokens.clone(),
            pred_head: pred,
            arg_head: arg,
            labels: Vec::new(),
            supersense: None,
            propbank_role: None,
        };
        let check = match kind {
            0 | 1 => {
                let k = r.random_range(1..=5);
                model.add_spr("t", catalog(k), case).unwrap();
                inst.labels = (0..k)
                    .map(|_| match (kind, r.random_bool(0.85)) {
                        (_, false) => None,
                        (0, true) => Some(Label::Binary(r.random_bool(0.5))),
                        _ => Some(Label::Scalar(r.random_range(1.0..=5.0))),
                    })
                    .collect();
                if inst.labels.iter().all(Option::is_none) {
                    inst.labels[0] = Some(if kind == 0 { Label::Binary(true) } else { Label::Scalar(2.5) });
                }
                let weights: Vec<f64> = (0..k).map(|_| r.random_range(0.1..2.0)).collect();
                let ex = Example::Spr {
                    instance: &inst,
                    labels: &inst.labels,
                    weights: &weights,
                };
                gradient_check(&model, "t", ex, &table, FD_STEP, FD_FLOOR)
            }
            2 => {
                model.add_propbank("t", case).unwrap();
                inst.propbank_role = Some(r.random_range(0..16));
                gradient_check(&model, "t", Example::PropBank(&inst), &table, FD_STEP, FD_FLOOR)
            }
            3 => {
                model.add_supersense("t", case).unwrap();
                let raw: Vec<f64> = (0..26).map(|_| r.random_range(0.0..1.0)).collect();
                let total: f64 = raw.iter().sum();
                inst.supersense = Some(SupersenseDistribution::new(raw.iter().map(|v| v / total).collect()).unwrap());
                gradient_check(&model, "t", Example::Supersense(&inst), &table, FD_STEP, FD_FLOOR)
            }
            _ => {
                let tlen = r.random_range(1..=4);
                let target_words = random_sentence(&mut r, tlen, 6);
                let vocab = TargetVocab::build([target_words.as_slice()], cfg.mt_vocab_size);
                model.add_mt("t", vocab.clone(), case).unwrap();
                let mut target = vocab.encode(&target_words);
                target.push(TargetVocab::EOS_ID);
                let ex = Example::Mt {
                    source: &tokens,
                    target: &target,
                };
                gradient_check(&model, "t", ex, &table, FD_STEP, FD_FLOOR)
            }
        };
        worst = worst.max(check.worst);
        entries += check.checked;
        kinks += check.kinks;
    }
    verdict(
        worst <= FD_TOLERANCE && GRADIENT_CASES >= 100,
        format!(
            "{GRADIENT_CASES} configurations (spr-binary/spr-scalar/propbank/supersense/mt = {per_kind:?}), \
             {entries} parameter entries ({kinks} straddling a relu kink skipped), max relative error {worst:.2e}"
        ),
    )
}

// 2 -------------------------------------------------------------------------

const ORACLE_CASES: u64 = 60;
const ORACLE_TOLERANCE: f64 = 1e-12;

fn random_tensor(r: &mut rand_chacha::ChaCha8Rng, shape: &[usize], bound: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), uniform_vec(r, n, bound)).unwrap()
}

fn oracle_equivalence() -> Verdict {
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut note = |name: &'static str, err: f64| {
        let e = worst.entry(name).or_insert(0.0);
        *e = e.max(err);
    };
    for case in 0..ORACLE_CASES {
        let mut r = rng(5000 + case);
        let n = r.random_range(1..=5);
        let d = r.random_range(1..=5);

        let cell = LstmParams::from_tensors(
            "c",
            random_tensor(&mut r, &[4 * d, n], 1.0),
            random_tensor(&mut r, &[4 * d, d], 1.0),
            random_tensor(&mut r, &[4 * d], 1.0),
        );
        let (x, h, c) = (uniform_vec(&mut r, n, 2.0), uniform_vec(&mut r, d, 1.0), uniform_vec(&mut r, d, 1.0));
        let (h1, c1) = lstm_cell(&cell, &x, &h, &c).unwrap();
        let (h2, c2) = lstm_cell_o(&RawLstm::of(&cell), &x, &h, &c);
        note("lstm_cell", max_abs_diff(&h1, &h2).max(max_abs_diff(&c1, &c2)));

        let enc = EncoderParams::new(n, d, &mut r);
        let table = table_for(7, n, case);
        let len = r.random_range(1..=6);
        let tokens = random_sentence(&mut r, len, 9);
        let got = encode(&tokens, &table, &enc).unwrap();
        let xs: Vec<Vec<f64>> = tokens.iter().map(|t| table.vector(t).into_owned()).collect();
        let (want, last) = bilstm_o(&xs, &RawLstm::of(&enc.forward), &RawLstm::of(&enc.backward));
        let mut e = max_abs_diff(got.last_forward(), &last);
        for t in 0..len {
            e = e.max(max_abs_diff(got.state(t), &want[t]));
        }
        let (pe, pa) = (r.random_range(0..len), r.random_range(0..len));
        e = e.max(max_abs_diff(&pair_state(&got, pe, pa).unwrap(), &[want[pe].clone(), want[pa].clone()].concat()));
        note("encode", e);

        let v = r.random_range(4..=9);
        let layers = r.random_range(1..=2);
        let emb = r.random_range(1..=5);
        let mut mt = MtDecoderParams::new("mt", v, emb, d, 2 * d, layers, &mut r).unwrap();
        mt.b_alpha.value_mut().data_mut().copy_from_slice(&uniform_vec(&mut r, d, 0.5));
        mt.b_out.value_mut().data_mut().copy_from_slice(&uniform_vec(&mut r, v, 0.5));
        let mem: Vec<Vec<f64>> = (0..len).map(|_| uniform_vec(&mut r, 2 * d, 1.0)).collect();
        let hs = HiddenStates::new(mem.clone(), mem[len - 1][..d].to_vec());
        let s = uniform_vec(&mut r, d, 1.0);
        let (ctx, alpha) = attention(&s, &hs, &mt).unwrap();
        let (ctx_o, alpha_o) = attention_o(&s, &mem, mt.w_alpha.value().data(), mt.b_alpha.value().data());
        note("attention", max_abs_diff(&ctx, &ctx_o).max(max_abs_diff(&alpha, &alpha_o)));

        let state: Vec<(Vec<f64>, Vec<f64>)> = (0..layers)
            .map(|_| (uniform_vec(&mut r, d, 1.0), uniform_vec(&mut r, d, 1.0)))
            .collect();
        let y_prev = r.random_range(0..=v);
        let (next, dist) = mt_step(y_prev, &state, &hs, &mt).unwrap();
        let (next_o, dist_o) = mt_step_o(&mt, y_prev, &state, &mem);
        let mut e = max_abs_diff(&dist, &dist_o);
        for ((a, b), (c, dd)) in next.iter().zip(&next_o) {
            e = e.max(max_abs_diff(a, c)).max(max_abs_diff(b, dd));
        }
        note("mt_step", e);

        // Teacher-forced sequence loss through the encoder.
        let mut mt_e = MtDecoderParams::new("mt", v, emb, d, 2 * d, layers, &mut r).unwrap();
        mt_e.b_out.value_mut().data_mut().copy_from_slice(&uniform_vec(&mut r, v, 0.5));
        let vocab_words: Vec<String> = words(v - 3);
        let vocab = TargetVocab::build([vocab_words.as_slice()], v);
        let rlen = r.random_range(1..=4);
        let reference = random_sentence(&mut r, rlen, v);
        let loss = mt_sequence_loss(&tokens, &reference, &table, &enc, &mt_e, &vocab).unwrap();
        let enc_states = encode(&tokens, &table, &enc).unwrap();
        let mut st = mt_initial_state(&enc_states, &mt_e).unwrap();
        let mut prev = TargetVocab::BOS_ID;
        let mut loss_o = 0.0;
        for y in vocab.encode(&reference) {
            let (ns, p) = mt_step_o(&mt_e, prev, &st, enc_states.states());
            loss_o -= p[y].ln();
            st = ns;
            prev = y;
        }
        note("mt_sequence_loss", (loss - loss_o).abs());

        let m = r.random_range(1..=5);
        let k = r.random_range(1..=5);
        let act = if case % 2 == 0 { Activation::Relu } else { Activation::Tanh };
        let spr = SprDecoderParams::from_tensors(
            "s",
            random_tensor(&mut r, &[m, 4 * d], 1.0),
            random_tensor(&mut r, &[m], 1.0),
            random_tensor(&mut r, &[k, m], 1.0),
            random_tensor(&mut r, &[k], 1.0),
            act,
            catalog(k),
        );
        let h_ea = uniform_vec(&mut r, 4 * d, 1.0);
        let scores = spr_scores(&h_ea, &spr).unwrap();
        let scores_o = spr_scores_o(
            &h_ea,
            spr.w_shared.value().data(),
            spr.b_shared.value().data(),
            spr.w_attr.value().data(),
            spr.b_attr.value().data(),
            act,
        );
        note("spr_scores", max_abs_diff(&scores, &scores_o));

        let labels: Vec<bool> = (0..k).map(|_| r.random_bool(0.5)).collect();
        let sc = uniform_vec(&mut r, k, 4.0);
        note("binary_loss", (binary_loss(&sc, &labels).unwrap() - binary_loss_o(&sc, &labels)).abs());
        let targets: Vec<f64> = (0..k).map(|_| r.random_range(1.0..=5.0)).collect();
        note("scalar_loss", (scalar_loss(&sc, &targets).unwrap() - scalar_loss_o(&sc, &targets)).abs());

        let pb = PropBankDecoderParams::from_tensors("p", random_tensor(&mut r, &[16, 4 * d], 1.0), random_tensor(&mut r, &[16], 1.0));
        let gold = r.random_range(0..16);
        let (pdist, ploss) = propbank_forward(&h_ea, &pb, gold).unwrap();
        let z: Vec<f64> = mv(pb.weight.value().data(), 16, &h_ea)
            .iter()
            .zip(pb.bias.value().data())
            .map(|(a, b)| a + b)
            .collect();
        let p_o = softmax_o(&z);
        note("propbank_loss", max_abs_diff(&pdist, &p_o).max((ploss + p_o[gold].ln()).abs()));

        let ss = SupersenseDecoderParams::from_tensors("u", random_tensor(&mut r, &[26, 2 * d], 1.0), random_tensor(&mut r, &[26], 1.0));
        let h_a = uniform_vec(&mut r, 2 * d, 1.0);
        let raw: Vec<f64> = (0..26).map(|_| if r.random_bool(0.3) { r.random_range(0.0..3.0) } else { 0.0 }).collect();
        let total: f64 = raw.iter().sum::<f64>().max(1e-9);
        let mut g: Vec<f64> = raw.iter().map(|v| v / total).collect();
        if raw.iter().all(|v| *v == 0.0) {
            g[0] = 1.0;
        }
        let (sdist, sloss) = supersense_forward_raw(&h_a, &ss, &g).unwrap();
        let z: Vec<f64> = mv(ss.weight.value().data(), 26, &h_a)
            .iter()
            .zip(ss.bias.value().data())
            .map(|(a, b)| a + b)
            .collect();
        let s_o = softmax_o(&z);
        let ce: f64 = -g.iter().zip(&s_o).map(|(gi, pi)| gi * pi.ln()).sum::<f64>();
        note("supersense_loss", max_abs_diff(&sdist, &s_o).max((sloss - ce).abs()));

        let props = r.random_range(1..=5);
        let items = r.random_range(1..=20);
        let mut all_p = Vec::new();
        let mut all_g = Vec::new();
        let mut counts = Vec::new();
        let mut macro_o = 0.0;
        for _ in 0..props {
            let p: Vec<bool> = (0..items).map(|_| r.random_bool(0.5)).collect();
            let gl: Vec<bool> = (0..items).map(|_| r.random_bool(0.4)).collect();
            let c = BinaryCounts::from_predictions(&p, &gl).unwrap();
            note("f1", (f1(&c).f1 - f1_o(&p, &gl)).abs());
            macro_o += f1_o(&p, &gl) / props as f64;
            counts.push(c);
            all_p.extend(p);
            all_g.extend(gl);
        }
        let agg = aggregate(&counts);
        note("aggregate", (agg.micro_f1 - f1_o(&all_p, &all_g)).abs().max((agg.macro_f1 - macro_o).abs()));

        let pn = r.random_range(2..=15);
        let xs: Vec<f64> = (0..pn).map(|_| r.random_range(1.0..5.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x + r.random_range(-2.0..2.0)).collect();
        let e = match (pearson(&xs, &ys).unwrap(), pearson_o(&xs, &ys)) {
            (Correlation::Defined(a), Some(b)) => (a - b).abs(),
            (Correlation::Undefined, None) => 0.0,
            _ => f64::INFINITY,
        };
        note("pearson", e);

        let ni = r.random_range(1..=30);
        let mut base = Predictions::new();
        let mut new = Predictions::new();
        let mut gold = Predictions::new();
        for i in 0..ni {
            let id = format!("i{i}");
            base.insert(id.clone(), r.random_bool(0.5));
            new.insert(id.clone(), r.random_bool(0.5));
            gold.insert(id, r.random_bool(0.5));
        }
        let dl = contingency_delta(&base, &new, &gold, None).unwrap();
        let (dn, dp) = contingency_o(&base, &new, &gold);
        let differ = base.iter().filter(|(id, b)| new[*id] != **b).count() as u64;
        let ok = dl.delta_false_neg == dn && dl.delta_false_pos == dp && dl.differ == differ;
        note("contingency_delta", if ok { 0.0 } else { f64::INFINITY });
    }
    let max = worst.values().cloned().fold(0.0, f64::max);
    let listing: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    verdict(
        max <= ORACLE_TOLERANCE,
        format!("{ORACLE_CASES} cases per function; max |Δ|: {}", listing.join(", ")),
    )
}

// 3 -------------------------------------------------------------------------

fn mapping_correctness() -> Verdict {
    // 1, 2, 3, 4, 5, N/A
    let binary = [false, false, false, true, true, false];
    let scalar = [1.0, 2.0, 3.0, 4.0, 5.0, 1.0];
    let mut problems = Vec::new();
    for (i, r) in Rating::ALL.iter().enumerate() {
        if map_binary(*r) != binary[i] {
            problems.push(format!("map_binary({r})"));
        }
        if map_scalar(*r) != scalar[i] {
            problems.push(format!("map_scalar({r})"));
        }
        if binarize_scalar(map_scalar(*r)) != map_binary(*r) {
            problems.push(format!("consistency at {r}"));
        }
    }
    for (i, a) in Rating::ALL.iter().enumerate() {
        for (j, b) in Rating::ALL.iter().enumerate() {
            let want = (scalar[i] + scalar[j]) / 2.0;
            if merge_redundant(*a, *b) != want || merge_redundant(*b, *a) != want {
                problems.push(format!("merge_redundant({a}, {b})"));
            }
        }
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            "6 ratings and 36 merged pairs".into()
        } else {
            problems.join("; ")
        },
    )
}

// 4 -------------------------------------------------------------------------

fn overfit_capacity() -> Verdict {
    let records = random_label_records(64, 4);
    let catalog = PropertyCatalog::spr1();
    let data = Dataset::from_records(&records, LabelMode::Binary, Some(&catalog), &Resolvers::default()).unwrap();
    let table = synthetic_table(50, 4);
    let cfg = ModelConfig {
        embedding_dim: 50,
        hidden_dim: 150,
        shared_dim: 100,
        ..ModelConfig::default()
    };
    let seeds = Seeds::from_master(4);
    let mut model = Model::new(cfg, seeds.init);
    model.add_spr("spr", catalog.clone(), seeds.init).unwrap();
    let task = Task::target("spr", Task::spr_data(data.clone(), None));
    let options = TrainOptions {
        epochs: 200,
        schedule_seed: seeds.schedule,
        ..TrainOptions::default()
    };
    let out = train(model, &[task], 0, &table, &options).unwrap();
    let scores = out.model.spr_scores("spr", &data.instances, &table).unwrap();
    let report = spr_report(&catalog, LabelMode::Binary, &data.instances, &scores, "train", None).unwrap();
    let last = out.history.last().map(|h| h.train_loss).unwrap_or(f64::NAN);
    verdict(
        report.micro_f1 >= 0.99,
        format!(
            "64 random-label instances x 18 properties, d=150 m=100, 200 epochs: training micro-F1 {:.4}, final loss {last:.4}",
            report.micro_f1
        ),
    )
}

// 5 -------------------------------------------------------------------------

const SYNTHETIC_N: usize = 5000;
const SYNTHETIC_SEED: u64 = 5;

fn synthetic_learnability() -> Verdict {
    let (train_r, dev_r, test_r) = synthetic_splits(SYNTHETIC_N, SYNTHETIC_SEED);
    let (train_d, dev_d, test_d) = (synthetic_dataset(&train_r), synthetic_dataset(&dev_r), synthetic_dataset(&test_r));
    let table = synthetic_table(32, SYNTHETIC_SEED);
    let cfg = ModelConfig {
        embedding_dim: 32,
        hidden_dim: 64,
        shared_dim: 64,
        ..ModelConfig::default()
    };
    let seeds = Seeds::from_master(SYNTHETIC_SEED);
    let mut model = Model::new(cfg, seeds.init);
    model.add_spr("syn", train_d.catalog.clone(), seeds.init).unwrap();
    let task = Task::target("syn", Task::spr_data(train_d, Some(dev_d)));
    let options = TrainOptions {
        schedule_seed: seeds.schedule,
        ..TrainOptions::default()
    };
    let out = train(model, &[task], 0, &table, &options).unwrap();
    let scores = out.model.spr_scores("syn", &test_d.instances, &table).unwrap();
    let report = spr_report(&test_d.catalog, LabelMode::Binary, &test_d.instances, &scores, "test", None).unwrap();
    let per: Vec<String> = report
        .properties
        .iter()
        .map(|p| format!("{} {:.3}", p.property, p.f1))
        .collect();
    verdict(
        report.micro_f1 >= 0.95,
        format!(
            "{SYNTHETIC_N} instances, d=64 m=64, 10 epochs, best dev epoch {}: test micro-F1 {:.4} ({})",
            out.best_epoch,
            report.micro_f1,
            per.join(", ")
        ),
    )
}

// 6 -------------------------------------------------------------------------

/// Prediction maps whose disagreements fall into the given cells, plus some
/// agreeing instances that must not count.
fn maps_for(new_true: usize, base_true: usize, new_false: usize, base_false: usize) -> (Predictions, Predictions, Predictions) {
    let mut base = Predictions::new();
    let mut new = Predictions::new();
    let mut gold = Predictions::new();
    let mut add = |tag: &str, count: usize, g: bool, b: bool, n: bool| {
        for i in 0..count {
            let id = format!("{tag}{i:03}");
            gold.insert(id.clone(), g);
            base.insert(id.clone(), b);
            new.insert(id, n);
        }
    };
    add("nt", new_true, true, false, true);
    add("bt", base_true, true, true, false);
    add("nf", new_false, false, true, false);
    add("bf", base_false, false, false, true);
    add("agree_t", 7, true, true, true);
    add("agree_f", 9, false, false, false);
    (base, new, gold)
}

fn contingency_arithmetic() -> Verdict {
    let rows = [("physical contact", (27, 13, 17, 23), (80, -14, 6)), ("volition", (27, 13, 25, 15), (80, -14, -10))];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, (a, b, c, d), (differ, dfn, dfp)) in rows {
        let (base, new, gold) = maps_for(a, b, c, d);
        let got = contingency_delta(&base, &new, &gold, None).unwrap();
        let (ofn, ofp) = contingency_o(&base, &new, &gold);
        let pass = got.differ == differ && got.delta_false_neg == dfn && got.delta_false_pos == dfp && ofn == dfn && ofp == dfp;
        ok &= pass;
        detail.push(format!(
            "{name}: differ {} ΔFalse− {} ΔFalse+ {}",
            got.differ, got.delta_false_neg, got.delta_false_pos
        ));
    }
    verdict(ok, detail.join("; "))
}

// 7 -------------------------------------------------------------------------

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sprl"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "sprl {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn same_bytes(a: &Path, b: &Path) -> Result<bool, String> {
    let x = fs::read(a).map_err(|e| format!("{}: {e}", a.display()))?;
    let y = fs::read(b).map_err(|e| format!("{}: {e}", b.display()))?;
    Ok(x == y)
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let p = |s: &str| root.join(s).display().to_string();
    let steps = || -> Result<Vec<(String, bool)>, String> {
        run_cli(&["synth", "--instances", "300", "--embedding-dim", "8", "--seed", "2", "--out-dir", &p("data")])?;
        let config = p("data/single.toml");
        for run in ["r1", "r2"] {
            run_cli(&["train", "--config", &config, "--seed", "3", "--out-dir", &p(run)])?;
        }
        for (ev, run) in [("e1", "r1"), ("e2", "r1"), ("e3", "r2")] {
            let ckpt = p(&format!("{run}/checkpoint.bin"));
            run_cli(&["eval", "--checkpoint", &ckpt, "--data", &p("data/test.jsonl"), "--split", "test", "--out-dir", &p(ev)])?;
        }
        for ab in ["a1", "a2"] {
            run_cli(&[
                "ablate", "--config", &config, "--property", "volition", "--fractions", "0.05,0.5", "--seed", "4",
                "--out-dir", &p(ab),
            ])?;
        }
        let pairs = [
            ("r1/history.csv", "r2/history.csv"),
            ("r1/checkpoint.bin", "r2/checkpoint.bin"),
            ("e1/metrics.csv", "e2/metrics.csv"),
            ("e1/metrics.csv", "e3/metrics.csv"),
            ("e1/predictions.csv", "e3/predictions.csv"),
            ("a1/curve.csv", "a2/curve.csv"),
            ("a1/flags.csv", "a2/flags.csv"),
        ];
        pairs
            .iter()
            .map(|(a, b)| Ok((format!("{a}={b}"), same_bytes(&root.join(a), &root.join(b))?)))
            .collect()
    };
    match steps() {
        Ok(checks) => {
            let bad: Vec<&String> = checks.iter().filter(|(_, same)| !same).map(|(n, _)| n).collect();
            verdict(
                bad.is_empty(),
                if bad.is_empty() {
                    format!("train, eval and ablate reruns byte-identical ({} file pairs)", checks.len())
                } else {
                    format!("differing files: {bad:?}")
                },
            )
        }
        Err(e) => Verdict::Fail(e),
    }
}

// 8, 9 ----------------------------------------------------------------------

fn spr1_paths() -> Option<(PathBuf, PathBuf)> {
    let dir = std::env::var_os("SPRL_SPR1_DIR")?;
    let emb = std::env::var_os("SPRL_EMBEDDINGS")?;
    Some((PathBuf::from(dir), PathBuf::from(emb)))
}

fn spr1_run(dir: &Path, embeddings: Option<&Path>, mode: &str, hidden: usize) -> (f64, Option<f64>) {
    let data = match embeddings {
        Some(e) => format!("[data]\nembeddings = {:?}\n", e.display().to_string()),
        None => String::new(),
    };
    let text = format!(
        "regime = \"single\"\nseed = 1\nepochs = 10\n\n[model]\nhidden_dim = {hidden}\n\n{data}\n\
         [target]\nname = \"spr1\"\nkind = \"spr\"\nmode = \"{mode}\"\ncatalog = \"spr1\"\n\
         train = {:?}\ndev = {:?}\ntest = {:?}\n",
        dir.join("train.jsonl").display().to_string(),
        dir.join("dev.jsonl").display().to_string(),
        dir.join("test.jsonl").display().to_string(),
    );
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let prepared = PreparedExperiment::new(&cfg).unwrap();
    let result = prepared.run().unwrap();
    let test = prepared.target.test.as_ref().expect("test split");
    let scores = result.outcome.model.spr_scores("spr1", &test.instances, &prepared.table).unwrap();
    let report = spr_report(&test.catalog, test.mode, &test.instances, &scores, "test", None).unwrap();
    (report.micro_f1 * 100.0, result.outcome.best_dev)
}

fn spr1_binary() -> Verdict {
    let Some((dir, emb)) = spr1_paths() else {
        return Verdict::Skipped("SPRL_SPR1_DIR / SPRL_EMBEDDINGS not set".into());
    };
    let (full, _) = spr1_run(&dir, Some(&emb), "binary", 600);
    let (rand, _) = spr1_run(&dir, None, "binary", 600);
    let (half, _) = spr1_run(&dir, Some(&emb), "binary", 300);
    verdict(
        full >= 79.0 && rand >= 74.0 && (full - half).abs() <= 5.0,
        format!("spr1 d=600 micro-F1 {full:.1}, spr1-rand {rand:.1}, spr1 d=300 {half:.1}"),
    )
}

fn spr1_scalar() -> Verdict {
    let Some((dir, emb)) = spr1_paths() else {
        return Verdict::Skipped("SPRL_SPR1_DIR / SPRL_EMBEDDINGS not set".into());
    };
    let (_, dev) = spr1_run(&dir, Some(&emb), "scalar", 600);
    let dev = dev.unwrap_or(0.0);
    verdict(dev >= 0.69, format!("spr1 scalar dev macro Pearson {dev:.3}"))
}

// 10 ------------------------------------------------------------------------

const ABLATION_PROPERTY: &str = "volition";
const ABLATION_SEEDS: [u64; 3] = [11, 12, 13];

fn ablation_shape() -> Verdict {
    let (train_r, dev_r, test_r) = synthetic_splits(SYNTHETIC_N, SYNTHETIC_SEED);
    let (train_d, dev_d, test_d) = (synthetic_dataset(&train_r), synthetic_dataset(&dev_r), synthetic_dataset(&test_r));
    let table = synthetic_table(32, SYNTHETIC_SEED);
    let cfg = ModelConfig {
        embedding_dim: 32,
        hidden_dim: 32,
        shared_dim: 32,
        ..ModelConfig::default()
    };
    let mut spec = AblationSpec::standard(ABLATION_PROPERTY, ABLATION_SEEDS.to_vec(), cfg);
    spec.modes = vec![AblationMode::TargetOnly];
    let curve = ablation_run(&spec, &train_d, &dev_d, &test_d, &table).unwrap();
    spec.fractions = vec![0.05];
    spec.modes = vec![AblationMode::CoTrain];
    let co = ablation_run(&spec, &train_d, &dev_d, &test_d, &table).unwrap();

    let means: Vec<f64> = STANDARD_FRACTIONS
        .iter()
        .map(|f| {
            let v: Vec<f64> = curve.iter().filter(|c| c.fraction == *f).map(|c| c.test_f1).collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    let rho = spearman(&STANDARD_FRACTIONS, &means).unwrap().value();
    let mut wins = 0;
    let mut pairs = Vec::new();
    for s in ABLATION_SEEDS {
        let t = curve.iter().find(|c| c.seed == s && c.fraction == 0.05).unwrap().test_f1;
        let c = co.iter().find(|c| c.seed == s).unwrap().test_f1;
        if c > t {
            wins += 1;
        }
        pairs.push(format!("{c:.3} vs {t:.3}"));
    }
    let curve_text: Vec<String> = STANDARD_FRACTIONS
        .iter()
        .zip(&means)
        .map(|(f, m)| format!("{f}: {m:.3}"))
        .collect();
    verdict(
        rho > 0.8 && wins >= 2,
        format!(
            "{ABLATION_PROPERTY}, target-only mean test F1 [{}], Spearman {rho:.3}; co-train vs target-only at 5%: {} ({wins}/3 wins)",
            curve_text.join(", "),
            pairs.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 10] = [
        (1, "gradient integrity", gradient_integrity),
        (2, "oracle equivalence", oracle_equivalence),
        (3, "mapping correctness", mapping_correctness),
        (4, "overfit capacity", overfit_capacity),
        (5, "synthetic learnability", synthetic_learnability),
        (6, "contingency arithmetic", contingency_arithmetic),
        (7, "determinism", determinism),
        (8, "spr1 binary reproduction", spr1_binary),
        (9, "spr1 scalar reproduction", spr1_scalar),
        (10, "ablation shape", ablation_shape),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == &n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match v {
            Verdict::Pass(d) => println!("criterion {n:>2} {name}: PASS [{secs:.1}s] {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL [{secs:.1}s] {d}");
            }
            Verdict::Skipped(d) => println!("criterion {n:>2} {name}: SKIPPED {d}"),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
