mod common;

use common::grad;
use ergoseg::tcn::{ArchConfig, DTcnConfig, EdTcnConfig, FilterDuration, FramewiseConfig, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;

#[test]
fn every_layer_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (name, err) in grad::layer_suite(&mut rng) {
        assert!(err < TOL, "{name}: {err:e}");
    }
}

fn toy(config: ArchConfig, seed: u64) -> (ModelParams, ergoseg::tcn::ops::Mat, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ModelParams::init(&config, 3, 3, 1.0, &mut rng).unwrap();
    grad::jitter(&mut p, &mut rng);
    let x = grad::random_mat(&mut rng, 13, 3);
    let labels: Vec<usize> = (0..13).map(|_| rng.random_range(0..3)).collect();
    (p, x, labels)
}

#[test]
fn ed_tcn_gradients() {
    let cfg = EdTcnConfig { encoder_filters: vec![3, 4], filter_duration: FilterDuration::Seconds(3.0), ..Default::default() };
    let (p, x, labels) = toy(ArchConfig::EdTcn(cfg), 1);
    assert_eq!(p.kernel_width(), 3);
    let err = grad::model_error(&p, &x, &labels);
    assert!(err < TOL, "{err:e}");
}

#[test]
fn d_tcn_gradients() {
    let cfg = DTcnConfig { stacks: 2, layers_per_stack: 2, filters_per_layer: vec![2, 3], residual_channels: 3, ..Default::default() };
    let (p, x, labels) = toy(ArchConfig::DTcn(cfg), 2);
    let err = grad::model_error(&p, &x, &labels);
    assert!(err < TOL, "{err:e}");
}

#[test]
fn framewise_gradients() {
    let (p, x, labels) = toy(ArchConfig::Framewise(FramewiseConfig::default()), 3);
    let err = grad::model_error(&p, &x, &labels);
    assert!(err < TOL, "{err:e}");
}
