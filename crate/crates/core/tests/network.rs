// SPDX-License-Identifier: Apache-2.0

use deepfilt::neural::{loss, Mlp, MlpArch};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference gradient of the loss at `(input, target)`.
fn numeric_gradient(net: &Mlp, input: &[f64], target: &[f64], h: f64) -> Vec<f64> {
    let base = net.params_flat();
    let mut probe = net.clone();
    let mut g = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_params_flat(&p).unwrap();
        let up = loss(&probe.forward(input).unwrap().0, target).unwrap();
        p[i] = base[i] - h;
        probe.set_params_flat(&p).unwrap();
        let down = loss(&probe.forward(input).unwrap().0, target).unwrap();
        g.push((up - down) / (2.0 * h));
    }
    g
}

fn analytic_gradient(net: &Mlp, input: &[f64], target: &[f64]) -> Vec<f64> {
    let (out, acts) = net.forward(input).unwrap();
    let err: Vec<f64> = out.iter().zip(target).map(|(o, t)| o - t).collect();
    net.backward(&acts, &err).unwrap().to_flat()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a − b‖ / (‖a‖ + ‖b‖)`.
fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / (norm(a) + norm(b))
}

#[test]
fn gradient_check_over_random_architectures() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..20 {
        let layers = 1 + case % 6;
        let units = rng.random_range(1..=8);
        let input_dim = rng.random_range(1..=12);
        let output_dim = rng.random_range(1..=2);
        let arch = MlpArch::new(input_dim, layers, units, output_dim).unwrap();
        let net = Mlp::init(arch, rng.random()).unwrap();
        let input: Vec<f64> = (0..input_dim)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let target: Vec<f64> = (0..output_dim)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let a = analytic_gradient(&net, &input, &target);
        let n = numeric_gradient(&net, &input, &target, 1e-5);
        let r = rel_diff(&a, &n);
        assert!(
            r <= 1e-6,
            "case {case} ({layers}x{units}): relative gradient error {r:e}"
        );
    }
}

#[test]
fn gradient_check_over_full_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for layers in 1..=6 {
        for units in 1..=8 {
            let arch = MlpArch::new(4, layers, units, 1).unwrap();
            let net = Mlp::init(arch, rng.random()).unwrap();
            let input: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let target = [rng.random_range(-2.0..2.0)];
            let r = rel_diff(
                &analytic_gradient(&net, &input, &target),
                &numeric_gradient(&net, &input, &target, 1e-5),
            );
            assert!(r <= 1e-6, "{layers}x{units}: relative gradient error {r:e}");
        }
    }
}

#[test]
fn output_layer_gradient_has_closed_form() {
    // ∂L/∂W_out = (ξ − t) h_Lᵀ and ∂L/∂b_out = ξ − t
    let arch = MlpArch::new(6, 3, 4, 1).unwrap();
    let net = Mlp::init(arch, 9).unwrap();
    let input = [0.3, -1.2, 0.8, 2.0, -0.4, 0.0];
    let (out, acts) = net.forward(&input).unwrap();
    let err = out[0] - 1.5;
    let g = net.backward(&acts, &[err]).unwrap();
    let last = g.layers.last().unwrap();
    let hidden = &acts.layers[acts.layers.len() - 2];
    for (w, h) in last.weights.iter().zip(hidden) {
        assert!((w - err * h).abs() < 1e-15);
    }
    assert_eq!(last.biases[0], err);
}

#[test]
fn standard_network_gradient_check() {
    let net = Mlp::init(MlpArch::standard(50), 17).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let input: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..3.0)).collect();
    let target = [1.7];
    let r = rel_diff(
        &analytic_gradient(&net, &input, &target),
        &numeric_gradient(&net, &input, &target, 1e-5),
    );
    assert!(r <= 1e-6, "relative gradient error {r:e}");
}

proptest! {
    // f64 sigmoid rounds to exactly 1 above z ≈ 36.7, so inputs stay at
    // observation scale
    #[test]
    fn hidden_activations_lie_in_open_unit_interval(
        seed in any::<u64>(),
        input in prop::collection::vec(-5.0f64..5.0, 8),
    ) {
        let net = Mlp::init(MlpArch::new(8, 4, 5, 1).unwrap(), seed).unwrap();
        let (out, acts) = net.forward(&input).unwrap();
        prop_assert!(out[0].is_finite());
        for layer in &acts.layers[1..acts.layers.len() - 1] {
            for &a in layer {
                prop_assert!(a > 0.0 && a < 1.0, "activation {a}");
            }
        }
    }

    #[test]
    fn sgd_step_is_linear_in_the_gradient(
        seed in any::<u64>(),
        x1 in prop::collection::vec(-2.0f64..2.0, 5),
        x2 in prop::collection::vec(-2.0f64..2.0, 5),
        t1 in -2.0f64..2.0,
        t2 in -2.0f64..2.0,
        gamma in 0.01f64..0.99,
    ) {
        let net = Mlp::init(MlpArch::new(5, 2, 3, 1).unwrap(), seed).unwrap();
        let grad = |x: &[f64], t: f64| {
            let (out, acts) = net.forward(x).unwrap();
            net.backward(&acts, &[out[0] - t]).unwrap()
        };
        let (g1, g2) = (grad(&x1, t1), grad(&x2, t2));
        let mut once = net.clone();
        once.sgd_step(&g1.add(&g2), gamma).unwrap();
        let mut twice = net.clone();
        twice.sgd_step(&g1, gamma).unwrap();
        twice.sgd_step(&g2, gamma).unwrap();
        for (a, b) in once.params_flat().iter().zip(twice.params_flat()) {
            prop_assert!((a - b).abs() <= 1e-15, "{a} vs {b}");
        }
    }
}
