mod common;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use sprl::numeric::{softmax, Adam, AdamConfig, Graph, Param, ParamGrads, Tensor, Var};

/// `−log softmax(W₃ tanh(W₂ tanh(W₁ x)))[gold]` built on the graph.
fn three_layer_loss(ws: &[Tensor; 3], x: &[f64], gold: usize) -> (f64, Vec<Vec<f64>>) {
    let mut g = Graph::new();
    let vars: Vec<_> = ws.iter().map(|w| g.input(w.clone())).collect();
    let mut h = g.constant(Tensor::vector(x.to_vec()));
    for (k, w) in vars.iter().enumerate() {
        h = g.matvec(*w, h).unwrap();
        if k < 2 {
            h = g.tanh(h);
        }
    }
    let lp = g.log_softmax(h).unwrap();
    let picked = g.pick(lp, gold).unwrap();
    let loss = g.scale(picked, -1.0);
    let value = g.value(loss).item();
    let grads = g.backward(loss).unwrap();
    (value, vars.iter().map(|v| grads.wrt(*v)).collect())
}

fn three_layer_value(ws: &[Tensor; 3], x: &[f64], gold: usize) -> f64 {
    let dims: Vec<usize> = ws.iter().map(|w| w.shape()[0]).collect();
    let mut h = x.to_vec();
    for (k, w) in ws.iter().enumerate() {
        h = mv(w.data(), dims[k], &h);
        if k < 2 {
            h.iter_mut().for_each(|v| *v = v.tanh());
        }
    }
    -softmax_o(&h)[gold].ln()
}

#[test]
fn three_layer_composition_matches_central_differences() {
    let step = 1e-5;
    for trial in 0..100 {
        let mut r = rng(trial);
        let dims: Vec<usize> = (0..4).map(|_| r.random_range(1..=5)).collect();
        let mut ws: [Tensor; 3] = std::array::from_fn(|k| {
            Tensor::matrix(dims[k + 1], dims[k], uniform_vec(&mut r, dims[k + 1] * dims[k], 1.0)).unwrap()
        });
        let x = uniform_vec(&mut r, dims[0], 1.0);
        let gold = r.random_range(0..dims[3]);
        let (value, analytic) = three_layer_loss(&ws, &x, gold);
        assert!((value - three_layer_value(&ws, &x, gold)).abs() < 1e-12);
        for k in 0..3 {
            for i in 0..ws[k].len() {
                let orig = ws[k].data()[i];
                ws[k].data_mut()[i] = orig + step;
                let up = three_layer_value(&ws, &x, gold);
                ws[k].data_mut()[i] = orig - step;
                let down = three_layer_value(&ws, &x, gold);
                ws[k].data_mut()[i] = orig;
                let numeric = (up - down) / (2.0 * step);
                let a = analytic[k][i];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6 * value.abs().max(1.0));
                assert!(rel <= 1e-4, "trial {trial} layer {k} entry {i}: {a} vs {numeric}");
            }
        }
    }
}

fn scalar_adam_o(cfg: &AdamConfig, theta: f64, grads: &[f64]) -> Vec<f64> {
    let (mut m, mut v, mut theta) = (0.0, 0.0, theta);
    let mut out = Vec::new();
    for (t, g) in grads.iter().enumerate() {
        let t = (t + 1) as i32;
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        let m_hat = m / (1.0 - cfg.beta1.powi(t));
        let v_hat = v / (1.0 - cfg.beta2.powi(t));
        theta -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        out.push(theta);
    }
    out
}

fn grads_for(name: &str, g: f64) -> ParamGrads {
    ParamGrads([(name.to_string(), vec![g])].into_iter().collect())
}

#[test]
fn adam_matches_scalar_oracle_over_repeated_gradients() {
    let cfg = AdamConfig::default();
    for (theta, g) in [(0.5, 0.3), (-1.0, -2.5), (2.0, 1e-4)] {
        let mut p = Param::new("w", Tensor::vector(vec![theta]));
        let mut adam = Adam::new(cfg);
        let want = scalar_adam_o(&cfg, theta, &[g, g, g]);
        for (k, expected) in want.iter().enumerate() {
            adam.step(&mut [&mut p], &grads_for("w", g)).unwrap();
            assert!((p.value().data()[0] - expected).abs() < 1e-12, "step {}", k + 1);
        }
        let second = want[1] - want[0];
        assert!(second.abs() <= cfg.learning_rate * (1.0 + 1e-9));
        assert!(second * g < 0.0);
    }
}

#[test]
fn first_adam_step_has_closed_form_magnitude() {
    let cfg = AdamConfig::default();
    for g in [1.0, -0.01, 3e-3] {
        let mut p = Param::new("w", Tensor::vector(vec![0.0]));
        Adam::new(cfg).step(&mut [&mut p], &grads_for("w", g)).unwrap();
        let delta = p.value().data()[0];
        let expected = -g.signum() * cfg.learning_rate * g.abs() / (g.abs() + cfg.epsilon);
        assert!((delta - expected).abs() < 1e-15);
    }
}

#[test]
fn seeded_computation_is_bit_identical() {
    let run = |seed| {
        let mut r = rng(seed);
        let ws: [Tensor; 3] = std::array::from_fn(|_| Tensor::matrix(3, 3, uniform_vec(&mut r, 9, 1.0)).unwrap());
        let x = uniform_vec(&mut r, 3, 1.0);
        three_layer_loss(&ws, &x, 1)
    };
    let (a, ga) = run(42);
    let (b, gb) = run(42);
    assert_eq!(a.to_bits(), b.to_bits());
    assert_eq!(ga, gb);
}

proptest! {
    #[test]
    fn softmax_sums_to_one_and_ignores_shifts(
        v in prop::collection::vec(-30.0f64..30.0, 1..12),
        shift in -100.0f64..100.0,
    ) {
        let p = softmax(&v).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
        let q = softmax(&shifted).unwrap();
        prop_assert!(max_abs_diff(&p, &q) <= 1e-12);
    }

    #[test]
    fn backward_is_linear_over_summed_losses(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let w = Tensor::matrix(n, n, uniform_vec(&mut r, n * n, 1.0)).unwrap();
        let x = Tensor::vector(uniform_vec(&mut r, n, 1.0));
        let first = |g: &mut Graph, wv: Var| {
            let xv = g.constant(x.clone());
            let h = g.matvec(wv, xv).unwrap();
            let t = g.tanh(h);
            g.sum(t)
        };
        let second = |g: &mut Graph, wv: Var| {
            let xv = g.constant(x.clone());
            let h = g.matvec(wv, xv).unwrap();
            let s = g.softmax(h).unwrap();
            let sq = g.square(s);
            g.sum(sq)
        };
        let grad = |both: bool, which: usize| {
            let mut g = Graph::new();
            let wv = g.input(w.clone());
            let loss = match (both, which) {
                (true, _) => {
                    let a = first(&mut g, wv);
                    let b = second(&mut g, wv);
                    g.add(a, b).unwrap()
                }
                (false, 0) => first(&mut g, wv),
                _ => second(&mut g, wv),
            };
            g.backward(loss).unwrap().wrt(wv)
        };
        let total = grad(true, 0);
        let parts: Vec<f64> = grad(false, 0).iter().zip(grad(false, 1)).map(|(a, b)| a + b).collect();
        prop_assert!(max_abs_diff(&total, &parts) <= 1e-12);
    }
}
