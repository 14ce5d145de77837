//! Trainable heads and optimizer: the multi-source domain classifier, the
//! quality regressor, Adam, and gradient verification.

mod adam;
mod gradcheck;
mod mlp;
mod train;

pub use adam::{adam_step, AdamState, TrainConfig};
pub use gradcheck::{gradient_check, gradient_check_corrupted, GradCheckReport, LossBatch};
pub use mlp::{softmax, Mlp};
pub use train::{
    cross_entropy_loss, fit_classifier, fit_regressor, l1_loss, predict_quality,
    train_classifier, train_patch_features, train_regressor, Checkpoint, FeatureFn, Regressor,
    SoftmaxClassifier, TrainLog, CHECKPOINT_VERSION, DEFAULT_HIDDEN,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::DomainId;
    use crate::features::{FeatureVector, FEATURE_DIM};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_feature(rng: &mut ChaCha8Rng) -> FeatureVector {
        FeatureVector::new((0..FEATURE_DIM).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
    }

    /// Two well-separated Gaussian clusters in feature space.
    fn cluster_data(
        n_per: usize,
        distance: f64,
        seed: u64,
    ) -> (Vec<FeatureVector>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2usize {
            let center = if class == 0 { 0.0 } else { distance };
            for _ in 0..n_per {
                let v: Vec<f64> = (0..FEATURE_DIM)
                    .map(|d| {
                        let base = if d == 0 { center } else { 0.0 };
                        base + rng.gen_range(-1.0..1.0)
                    })
                    .collect();
                features.push(FeatureVector::new(v).unwrap());
                labels.push(class);
            }
        }
        (features, labels)
    }

    #[test]
    fn zero_classifier_is_uniform() {
        let model = SoftmaxClassifier::zeros(
            FEATURE_DIM,
            Some(DEFAULT_HIDDEN),
            (0..25).map(DomainId).collect(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = model.classify(&random_feature(&mut rng)).unwrap();
        for v in &p {
            assert!((v - 0.04).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_ce_is_ln_k() {
        let model = SoftmaxClassifier::zeros(
            FEATURE_DIM,
            None,
            (0..25).map(DomainId).collect(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = vec![(random_feature(&mut rng), 3usize)];
        let loss = cross_entropy_loss(&model, &batch).unwrap();
        assert!((loss - 25f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn ce_is_mean_over_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut model = SoftmaxClassifier::zeros(
            FEATURE_DIM,
            Some(8),
            (0..4).map(DomainId).collect(),
        );
        for p in &mut model.mlp.params {
            *p = rng.gen_range(-0.5..0.5);
        }
        let a = (random_feature(&mut rng), 0usize);
        let b = (random_feature(&mut rng), 2usize);
        let la = cross_entropy_loss(&model, &[a.clone()]).unwrap();
        let lb = cross_entropy_loss(&model, &[b.clone()]).unwrap();
        let lab = cross_entropy_loss(&model, &[a, b]).unwrap();
        assert!((lab - 0.5 * (la + lb)).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_rejected() {
        let model = SoftmaxClassifier::zeros(FEATURE_DIM, None, (0..3).map(DomainId).collect());
        assert!(cross_entropy_loss(&model, &[]).is_err());
    }

    #[test]
    fn l1_loss_examples() {
        let model = Regressor {
            mlp: Mlp::zeros(FEATURE_DIM, None, 1),
            norm_stats: crate::features::NormStats::identity(FEATURE_DIM),
            target_mean: 0.0,
            target_std: 1.0,
            config: TrainConfig::default(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // zero model predicts 0; targets -1 and +3 give errors 1 and 3
        let batch = vec![
            (random_feature(&mut rng), -1.0),
            (random_feature(&mut rng), 3.0),
        ];
        assert!((l1_loss(&model, &batch).unwrap() - 2.0).abs() < 1e-12);
        let exact = vec![(random_feature(&mut rng), 0.0)];
        assert!(l1_loss(&model, &exact).unwrap().abs() < 1e-12);
    }

    #[test]
    fn separable_clusters_reach_high_accuracy() {
        let (features, labels) = cluster_data(500, 10.0, 4);
        let (holdout_f, holdout_l) = cluster_data(100, 10.0, 5);
        let config = TrainConfig::default();
        let (model, log) = fit_classifier(
            &features,
            &labels,
            vec![DomainId(1), DomainId(2)],
            None,
            &config,
            None,
        )
        .unwrap();
        let correct = holdout_f
            .iter()
            .zip(&holdout_l)
            .filter(|(f, &l)| {
                let p = model.classify(f).unwrap();
                let pred = p
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap()
                    .0;
                pred == l
            })
            .count();
        let acc = correct as f64 / holdout_f.len() as f64;
        assert!(acc >= 0.95, "accuracy {acc}");
        assert!(!log.epoch_loss.is_empty());
    }

    #[test]
    fn shuffled_labels_give_chance_accuracy() {
        let (features, mut labels) = cluster_data(150, 10.0, 6);
        // destroy the signal
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for l in &mut labels {
            *l = rng.gen_range(0..2);
        }
        let (model, _) = fit_classifier(
            &features,
            &labels,
            vec![DomainId(1), DomainId(2)],
            None,
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        let (holdout_f, holdout_l) = cluster_data(100, 10.0, 8);
        let mut shuffled = holdout_l.clone();
        for l in &mut shuffled {
            *l = rng.gen_range(0..2);
        }
        let correct = holdout_f
            .iter()
            .zip(&shuffled)
            .filter(|(f, &l)| {
                let p = model.classify(f).unwrap();
                (p[1] > p[0]) as usize == l
            })
            .count();
        let acc = correct as f64 / holdout_f.len() as f64;
        assert!((acc - 0.5).abs() <= 0.1, "accuracy {acc}");
    }

    #[test]
    fn training_is_seed_deterministic() {
        let (features, labels) = cluster_data(60, 5.0, 9);
        let config = TrainConfig::default().with_seed(17);
        let run = || {
            fit_classifier(
                &features,
                &labels,
                vec![DomainId(1), DomainId(2)],
                Some(8),
                &config,
                None,
            )
            .unwrap()
        };
        let (a, log_a) = run();
        let (b, log_b) = run();
        assert_eq!(a.mlp.params, b.mlp.params);
        assert_eq!(log_a.epoch_loss, log_b.epoch_loss);
    }

    #[test]
    fn loss_decreases_early_in_training() {
        let (features, labels) = cluster_data(100, 6.0, 10);
        let (_, log) = fit_classifier(
            &features,
            &labels,
            vec![DomainId(1), DomainId(2)],
            Some(DEFAULT_HIDDEN),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        assert!(log.epoch_loss[0] >= log.epoch_loss[1]);
        assert!(log.epoch_loss[1] >= log.epoch_loss[2]);
    }

    #[test]
    fn regressor_fits_constant_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let features: Vec<FeatureVector> = (0..80).map(|_| random_feature(&mut rng)).collect();
        let targets = vec![7.0; 80];
        let (model, _) = fit_regressor(
            &features,
            &targets,
            Some(DEFAULT_HIDDEN),
            &TrainConfig {
                epochs: 60,
                learning_rate: 5e-2,
                weight_decay: 0.0,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        for f in features.iter().take(10) {
            let p = model.predict(f).unwrap();
            assert!((p - 7.0).abs() < 0.5, "prediction {p}");
        }
    }

    #[test]
    fn regressor_fits_linear_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let features: Vec<FeatureVector> = (0..200).map(|_| random_feature(&mut rng)).collect();
        let targets: Vec<f64> = features
            .iter()
            .map(|f| f.values().iter().take(4).sum::<f64>())
            .collect();
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        let std =
            (targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / targets.len() as f64).sqrt();
        let (model, log) = fit_regressor(
            &features,
            &targets,
            None,
            &TrainConfig {
                epochs: 200,
                learning_rate: 2e-2,
                weight_decay: 0.0,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        let final_loss = *log.epoch_loss.last().unwrap();
        assert!(final_loss < 0.05 * std, "loss {final_loss} vs std {std}");
        let f = &features[0];
        assert!((model.predict(f).unwrap() - targets[0]).abs() < 0.3);
    }

    fn random_mlp(input: usize, hidden: usize, output: usize, seed: u64) -> Mlp {
        let mut mlp = Mlp::init(input, Some(hidden), output, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead_beef);
        for p in &mut mlp.params {
            *p = rng.gen_range(-0.8..0.8);
        }
        mlp
    }

    #[test]
    fn gradient_check_passes_for_ce_and_l1() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mlp = random_mlp(8, 6, 4, 21);
        let xs: Vec<Vec<f64>> = (0..16)
            .map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..16).map(|_| rng.gen_range(0..4)).collect();
        let report = gradient_check(
            &mlp,
            &LossBatch::CrossEntropy {
                xs: xs.clone(),
                labels,
            },
            200,
            1,
        )
        .unwrap();
        assert!(report.relative_error < 1e-4, "{}", report.relative_error);

        let reg = random_mlp(8, 6, 1, 22);
        // keep residuals away from the L1 kink
        let targets: Vec<f64> = xs
            .iter()
            .map(|x| {
                let (l, _) = reg.forward(x).unwrap();
                l[0] + if l[0] > 0.0 { 1.0 } else { -1.0 }
            })
            .collect();
        let report = gradient_check(&reg, &LossBatch::L1 { xs, targets }, 200, 2).unwrap();
        assert!(report.relative_error < 1e-4, "{}", report.relative_error);
    }

    #[test]
    fn corrupted_gradient_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mlp = random_mlp(8, 6, 4, 23);
        let xs: Vec<Vec<f64>> = (0..16)
            .map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..16).map(|_| rng.gen_range(0..4)).collect();
        let report =
            gradient_check_corrupted(&mlp, &LossBatch::CrossEntropy { xs, labels }, 200, 3)
                .unwrap();
        assert!(report.relative_error > 1e-2, "{}", report.relative_error);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let (features, labels) = cluster_data(40, 5.0, 15);
        let (model, _) = fit_classifier(
            &features,
            &labels,
            vec![DomainId(3), DomainId(9)],
            Some(8),
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        let dir = std::env::temp_dir().join("dgqa_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("classifier.json");
        Checkpoint::from_classifier(&model).save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap().into_classifier().unwrap();
        assert_eq!(model.mlp.params, loaded.mlp.params);
        let f = &features[0];
        assert_eq!(model.classify(f).unwrap(), loaded.classify(f).unwrap());
        assert_eq!(loaded.domain_ids, vec![DomainId(3), DomainId(9)]);
    }
}
