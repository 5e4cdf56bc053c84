use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reid_core::data::{generate_synthetic, SynthConfig};
use reid_core::memory::{ClusterMemory, UpdateStrategy};
use reid_core::trainer::{batch_loss_and_grad, embed_all, train_3c, Clustering, LinearEmbedder, TrainConfig};
use reid_core::Matrix;

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Central differences of the batch loss with respect to every weight.
fn check_weight_gradient(seed: u64, d_out: usize, d_in: usize, b: usize, k: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_matrix(&mut rng, d_out, d_in);
    let memory = ClusterMemory::from_proxies(random_matrix(&mut rng, k, d_out), 0.2, 0.5).unwrap();
    let xs: Vec<Vec<f64>> = (0..b).map(|_| (0..d_in).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let inputs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
    let labels: Vec<usize> = (0..b).map(|i| i % k).collect();
    let weights: Vec<f64> = (0..b).map(|_| rng.random_range(0.5..1.5)).collect();

    let emb = LinearEmbedder::from_weights(w.clone()).unwrap();
    let (_, grad, _) = batch_loss_and_grad(&emb, &memory, &inputs, &labels, &weights).unwrap();
    let loss_at = |w: Matrix| {
        let e = LinearEmbedder::from_weights(w).unwrap();
        batch_loss_and_grad(&e, &memory, &inputs, &labels, &weights).unwrap().0
    };
    let h = 1e-6;
    for r in 0..d_out {
        for c in 0..d_in {
            let mut plus = w.clone();
            plus.set(r, c, w.get(r, c) + h);
            let mut minus = w.clone();
            minus.set(r, c, w.get(r, c) - h);
            let fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
            let an = grad.get(r, c);
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
            assert!(rel <= 1e-4 || (fd - an).abs() < 1e-9, "seed {seed} ({r},{c}): {an} vs {fd}");
        }
    }
}

#[test]
fn weight_gradient_on_micro_instance() {
    for seed in 0..5 {
        check_weight_gradient(seed, 3, 3, 4, 2);
    }
}

#[test]
fn weight_gradient_on_wider_instance() {
    check_weight_gradient(11, 5, 7, 6, 3);
}

fn small_config() -> TrainConfig {
    TrainConfig {
        epochs: 4,
        warmup_epochs: 1,
        iters_per_epoch: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn zero_epochs_return_the_initial_embedder() {
    let ds = generate_synthetic(&SynthConfig::default()).unwrap();
    let cfg = TrainConfig {
        epochs: 0,
        warmup_epochs: 0,
        ..TrainConfig::default()
    };
    let report = train_3c(&ds, &cfg).unwrap();
    assert!(report.epochs.is_empty());
    assert_eq!(report.embedder, LinearEmbedder::orthogonal(cfg.d_out, 32, cfg.seed).unwrap());
}

#[test]
fn training_is_deterministic() {
    let ds = generate_synthetic(&SynthConfig { seed: 4, ..SynthConfig::default() }).unwrap();
    let cfg = TrainConfig { seed: 9, ..small_config() };
    let a = train_3c(&ds, &cfg).unwrap();
    let b = train_3c(&ds, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.epochs.len(), 4);
    assert_eq!(a.epochs[0].clustering, Clustering::Dbscan);
    assert_eq!(a.epochs[3].clustering, Clustering::Hdc);
}

#[test]
fn equal_entropies_make_weights_irrelevant() {
    let ds = generate_synthetic(&SynthConfig {
        cameras: 1,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut cfg = TrainConfig {
        cross_camera_filter: false,
        ..small_config()
    };
    let with = train_3c(&ds, &cfg).unwrap();
    cfg.use_cie = false;
    let without = train_3c(&ds, &cfg).unwrap();
    assert_eq!(with, without);
}

#[test]
fn mixed_camera_clusters_change_the_trajectory() {
    let ds = generate_synthetic(&SynthConfig {
        camera_bias: 0.0,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut cfg = small_config();
    let with = train_3c(&ds, &cfg).unwrap();
    assert!(with.epochs.iter().any(|e| e.mean_cie > 0.0));
    cfg.use_cie = false;
    let without = train_3c(&ds, &cfg).unwrap();
    assert_ne!(with.embedder, without.embedder);
}

#[test]
fn embeddings_stay_unit_norm() {
    let ds = generate_synthetic(&SynthConfig { seed: 1, ..SynthConfig::default() }).unwrap();
    for update in [UpdateStrategy::Vanilla, UpdateStrategy::Hard, UpdateStrategy::Tccl, UpdateStrategy::Chd] {
        let report = train_3c(&ds, &TrainConfig { update, ..small_config() }).unwrap();
        let f = embed_all(&report.embedder, &ds.features).unwrap();
        for i in 0..f.n() {
            let n: f64 = f.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
        for e in &report.epochs {
            assert!(e.loss.is_finite());
            let map = e.map.unwrap();
            assert!((0.0..=1.0).contains(&map));
        }
    }
}

#[test]
fn too_few_clusters_names_the_epoch() {
    let ds = generate_synthetic(&SynthConfig::default()).unwrap();
    let cfg = TrainConfig { p: 100, ..small_config() };
    match train_3c(&ds, &cfg) {
        Err(reid_core::Error::TooFewClusters { epoch, .. }) => assert_eq!(epoch, 1),
        other => panic!("{other:?}"),
    }
}
