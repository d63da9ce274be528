use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use piconvae_core::baselines::convae_baseline;
use piconvae_core::data::{
    fit_normalizer, generate_synthetic, make_windows, normalize, NormalizationParams, SyntheticConfig, WindowedDataset,
    CHANNELS,
};
use piconvae_core::model::{
    loss_data, loss_phy_p, loss_phy_q, loss_total, train, train_with_objective, write_loss_log, BatchObjective,
    LossBreakdown, LossWeights, PIConvAEConfig, PIConvAEModel, TrainOptions,
};
use piconvae_core::{Error, Result, Tensor};

fn small_config(epochs: usize, seed: u64) -> PIConvAEConfig {
    PIConvAEConfig {
        window: 20,
        latent_per_feature: 5,
        epochs,
        seed,
        ..PIConvAEConfig::default()
    }
}

fn dataset(len: usize, seed: u64) -> WindowedDataset {
    let series = generate_synthetic(&SyntheticConfig::new(len, seed, 0.001)).unwrap();
    let params = fit_normalizer(&series, 0..len).unwrap();
    make_windows(&normalize(&series, &params), 20, 1).unwrap()
}

fn params_of(model: &PIConvAEModel) -> Vec<Vec<f64>> {
    model.network().params().iter().map(|p| p.to_vec()).collect()
}

#[test]
fn default_config_matches_table_layout() {
    let cfg = PIConvAEConfig::default();
    assert_eq!(cfg.bottleneck(), 120);
    let net = cfg.build_network().unwrap();
    assert_eq!(net.input_shape(), &[100, 6]);
    assert_eq!(net.output_shape(), &[100, 6]);
    let expected = (64 * 5 * 6 + 64) + (32 * 3 * 64 + 32) + (3200 * 120 + 120) + (32 * 3 * 6 + 32) + (64 * 5 * 32 + 64) + (1280 * 600 + 600);
    assert_eq!(net.param_count(), expected);
}

#[test]
fn config_validation() {
    let bad = PIConvAEConfig { alpha_d: 0.0, alpha_phy: 0.0, ..PIConvAEConfig::default() };
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    let bad = PIConvAEConfig { alpha_phy: -1.0, ..PIConvAEConfig::default() };
    assert!(bad.validate().is_err());
    let bad = PIConvAEConfig { features: 5, ..PIConvAEConfig::default() };
    assert!(bad.validate().is_err());
    assert!(PIConvAEConfig { alpha_d: 0.0, ..PIConvAEConfig::default() }.validate().is_ok());
}

#[test]
fn data_loss_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (n, m) = (3, 20);
    let x: Vec<f64> = (0..n * m * CHANNELS).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n * m * CHANNELS).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut sum = 0.0;
    for w in 0..n {
        for t in 0..m {
            for c in 0..CHANNELS {
                let i = (w * m + t) * CHANNELS + c;
                sum += (y[i] - x[i]).powi(2);
            }
        }
    }
    let naive = sum / (n * m * CHANNELS) as f64;
    assert!((loss_data(&x, &y).unwrap() - naive).abs() < 1e-12);
    assert_eq!(loss_data(&vec![0.0; 60], &vec![1.0; 60]).unwrap(), 1.0);
}

#[test]
fn physics_losses_match_direct_formula() {
    let norm = NormalizationParams::new([0.95, 0.2, -0.2, -0.7, 0.1, 0.02], [1.05, 1.1, 0.4, -0.1, 1.0, 0.6]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows = 50;
    let xh: Vec<f64> = (0..rows * CHANNELS).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (mut sp, mut sq) = (0.0, 0.0);
    for r in xh.chunks_exact(CHANNELS) {
        let y: Vec<f64> = (0..CHANNELS).map(|c| norm.min[c] + (r[c] + 1.0) * (norm.max[c] - norm.min[c]) / 2.0).collect();
        let phi = y[2] - y[3];
        sp += (y[4] - y[0] * y[1] * phi.cos()).powi(2);
        sq += (y[5] - y[0] * y[1] * phi.sin()).powi(2);
    }
    assert!((loss_phy_p(&xh, &norm).unwrap() - sp / rows as f64).abs() < 1e-12);
    assert!((loss_phy_q(&xh, &norm).unwrap() - sq / rows as f64).abs() < 1e-12);
}

#[test]
fn kirchhoff_consistent_reconstruction_has_no_physics_loss() {
    let series = generate_synthetic(&SyntheticConfig::new(500, 3, 0.0)).unwrap();
    let params = fit_normalizer(&series, 0..500).unwrap();
    let x = normalize(&series, &params).values;
    let b = loss_total(&x, &x, LossWeights { alpha_d: 1.0, alpha_phy: 1.0 }, &params).unwrap();
    assert_eq!(b.data, 0.0);
    assert!(b.phy_p + b.phy_q < 1e-10);
}

#[test]
fn zero_epochs_returns_initial_weights() {
    let ds = dataset(300, 1);
    let cfg = small_config(0, 4);
    let model = train(&ds, &cfg).unwrap();
    assert!(model.history().is_empty());
    let fresh = PIConvAEModel::initial(&cfg, *ds.params()).unwrap();
    assert_eq!(params_of(&model), params_of(&fresh));
}

#[test]
fn training_is_deterministic_and_logs_consistent_losses() {
    let ds = dataset(300, 1);
    let cfg = small_config(3, 4);
    let a = train(&ds, &cfg).unwrap();
    let b = train(&ds, &cfg).unwrap();
    assert_eq!(params_of(&a), params_of(&b));
    assert_eq!(a.history(), b.history());
    assert_eq!(a.history().len(), 3);
    for r in a.history() {
        let l = r.loss;
        assert!((l.total - (cfg.alpha_d * l.data + cfg.alpha_phy * (l.phy_p + l.phy_q))).abs() < 1e-12);
    }
    let lrs: Vec<f64> = a.history().iter().map(|r| r.lr).collect();
    assert_eq!(lrs[0], 1e-3);
    assert!((lrs[2] - 1e-3 * 0.99 * 0.99).abs() < 1e-18);
    let other = train(&ds, &small_config(3, 5)).unwrap();
    assert_ne!(params_of(&a), params_of(&other));
}

#[test]
fn loss_decreases_over_training() {
    let ds = dataset(400, 2);
    let model = train(&ds, &small_config(15, 1)).unwrap();
    let h = model.history();
    assert!(h.last().unwrap().loss.total < h[0].loss.total);
}

struct DataOnly;

impl BatchObjective for DataOnly {
    fn evaluate(&self, x: &[f64], x_hat: &[f64], norm: &NormalizationParams) -> Result<(LossBreakdown, Vec<f64>)> {
        let n = x.len() as f64;
        let grad = x.iter().zip(x_hat).map(|(a, b)| 2.0 * (b - a) / n).collect();
        let breakdown = LossBreakdown::assemble(
            loss_data(x, x_hat)?,
            loss_phy_p(x_hat, norm)?,
            loss_phy_q(x_hat, norm)?,
            LossWeights { alpha_d: 1.0, alpha_phy: 0.0 },
        );
        Ok((breakdown, grad))
    }
}

#[test]
fn ablation_matches_data_only_objective() {
    let ds = dataset(300, 3);
    let cfg = small_config(2, 8);
    let baseline = convae_baseline(&ds, &cfg).unwrap();
    let reference = train_with_objective(&ds, &PIConvAEConfig { alpha_phy: 0.0, ..cfg.clone() }, &DataOnly, TrainOptions::default()).unwrap();
    assert_eq!(params_of(&baseline), params_of(&reference));
    for r in baseline.history() {
        assert_eq!(r.loss.total, r.loss.data);
        assert!(r.loss.phy_p > 0.0);
    }
    // same seed, same starting point as the physics-informed model
    let a = PIConvAEModel::initial(&cfg, *ds.params()).unwrap();
    let b = PIConvAEModel::initial(&PIConvAEConfig { alpha_phy: 0.0, ..cfg }, *ds.params()).unwrap();
    assert_eq!(params_of(&a), params_of(&b));
}

#[test]
fn reconstruction_contract() {
    let ds = dataset(300, 4);
    let model = train(&ds, &small_config(2, 2)).unwrap();
    let w = ds.window_tensor(10);
    let r1 = model.reconstruct(&w).unwrap();
    let r2 = model.reconstruct(&w).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(r1.shape(), &[20, 6]);
    assert!(r1.values().iter().all(|v| v.abs() < 1.0));
    let bad = Tensor::zeros(vec![19, 6]);
    assert!(matches!(model.reconstruct(&bad), Err(Error::Dimension(_))));
    let all = model.reconstruct_dataset(&ds).unwrap();
    assert_eq!(&all[10 * 120..11 * 120], r1.values());
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let ds = dataset(300, 5);
    let model = train_with_objective(
        &ds,
        &small_config(2, 3),
        &piconvae_core::model::PhysicsInformedObjective { weights: LossWeights { alpha_d: 1.0, alpha_phy: 1.0 } },
        TrainOptions { validation: Some(&ds), observer: None },
    )
    .unwrap();
    let mut buf = Vec::new();
    model.save(&mut buf).unwrap();
    let back = PIConvAEModel::load(buf.as_slice()).unwrap();
    let bits = |m: &PIConvAEModel| params_of(m).into_iter().flatten().map(f64::to_bits).collect::<Vec<_>>();
    assert_eq!(bits(&model), bits(&back));
    assert_eq!(model.history(), back.history());
    assert_eq!(model.normalization(), back.normalization());
    assert_eq!(model.reconstruct_dataset(&ds).unwrap(), back.reconstruct_dataset(&ds).unwrap());
    let mut broken: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    broken["format"] = "something-else".into();
    assert!(PIConvAEModel::load(serde_json::to_vec(&broken).unwrap().as_slice()).is_err());
}

#[test]
fn loss_log_has_one_row_per_epoch() {
    let ds = dataset(300, 6);
    let model = train(&ds, &small_config(2, 1)).unwrap();
    let mut buf = Vec::new();
    write_loss_log(model.history(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epoch,L_data,L_phy_P,L_phy_Q,L_total,lr");
    assert_eq!(lines.len(), 3);
}

#[test]
fn mismatched_window_size_rejected() {
    let ds = dataset(300, 1);
    let cfg = PIConvAEConfig { window: 30, ..small_config(1, 1) };
    assert!(matches!(train(&ds, &cfg), Err(Error::Config(_))));
}
