use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use piconvae_bench::{leading_batch, windows};
use piconvae_core::model::{BatchObjective, LossWeights, PIConvAEConfig, PhysicsInformedObjective};
use piconvae_core::nn::{conv1d_forward, dense_forward, Mode};
use piconvae_core::Tensor;

fn layers(c: &mut Criterion) {
    let input = Tensor::new(vec![100, 6], (0..600).map(|k| (k as f64 * 0.01).sin()).collect()).unwrap();
    let weights = Tensor::new(vec![64, 5, 6], (0..64 * 30).map(|k| (k as f64 * 0.003).cos() * 0.1).collect()).unwrap();
    let bias = Tensor::zeros(vec![64]);
    c.bench_function("conv1d_forward_100x6_k5x64", |b| b.iter(|| conv1d_forward(&input, &weights, &bias).unwrap()));

    let x = Tensor::from_vec((0..3200).map(|k| (k as f64 * 0.001).sin()).collect());
    let w = Tensor::new(vec![120, 3200], (0..120 * 3200).map(|k| (k as f64 * 1e-4).cos() * 0.01).collect()).unwrap();
    let bias = Tensor::zeros(vec![120]);
    c.bench_function("dense_forward_3200_to_120", |b| b.iter(|| dense_forward(&x, &w, &bias).unwrap()));
}

fn training_step(c: &mut Criterion) {
    let cfg = PIConvAEConfig::default();
    let (_, ds) = windows(600, cfg.window, 1);
    let objective = PhysicsInformedObjective { weights: LossWeights { alpha_d: 1.0, alpha_phy: 1.0 } };
    let mut group = c.benchmark_group("forward_backward");
    group.sample_size(20);
    for batch in [1usize, 32] {
        let x = leading_batch(&ds, batch);
        let mut net = cfg.build_network().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        group.bench_with_input(BenchmarkId::from_parameter(batch), &batch, |b, &n| {
            b.iter(|| {
                let out = net.forward(&x, n, Mode::Training(&mut rng)).unwrap();
                let (_, grad) = objective.evaluate(&x, &out, ds.params()).unwrap();
                net.backward(&grad).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, layers, training_step);
criterion_main!(benches);
