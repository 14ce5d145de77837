//! Source-domain selection: per-image domain probabilities, relative
//! similarity, threshold selection, the greedy supervised variant, and the
//! probe-classifier distance proxy.

use serde::{Deserialize, Serialize};

use crate::distortion::DomainId;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, PatchMode, PatchPolicy};
use crate::models::{fit_classifier, SoftmaxClassifier, TrainConfig};
use crate::raster::RasterImage;

const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Per-domain relative similarity of a target set: column means of the
/// per-image probability matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub domain_ids: Vec<DomainId>,
    pub sim: Vec<f64>,
    pub n_target: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    /// Unsupervised distortion-guided selection by thresholded similarity.
    Dgds,
    /// Supervised greedy selection by target-holdout rank correlation.
    Gds,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: Vec<DomainId>,
    /// Present for the similarity-based method; the greedy method carries
    /// its own per-round table instead.
    pub report: Option<SimilarityReport>,
    pub method: SelectionMethod,
}

/// Per-image domain probabilities: row `j` is the mean over that image's
/// test patches of the classifier output. Each row sums to 1.
pub fn domain_probabilities(
    classifier: &SoftmaxClassifier,
    target_images: &[RasterImage],
    policy: &PatchPolicy,
) -> Result<Vec<Vec<f64>>> {
    if target_images.is_empty() {
        return Err(Error::validation("empty target set"));
    }
    let k = classifier.k();
    let mut rows = Vec::with_capacity(target_images.len());
    for (j, image) in target_images.iter().enumerate() {
        let image_policy = policy.with_seed(
            policy
                .seed
                .wrapping_add((j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        );
        let patches = crate::features::sample_patches(image, &image_policy, PatchMode::Test)?;
        let mut row = vec![0.0; k];
        for patch in &patches {
            let p = classifier.classify(&crate::features::extract_features(patch)?)?;
            for (r, v) in row.iter_mut().zip(p) {
                *r += v;
            }
        }
        for r in &mut row {
            *r /= patches.len() as f64;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Column means of a probability matrix. The default threshold `1/k` is
/// recorded in the report; `select_similar_domains` may override it.
pub fn relative_similarity(
    domain_ids: &[DomainId],
    probs: &[Vec<f64>],
) -> Result<SimilarityReport> {
    if probs.is_empty() {
        return Err(Error::validation("empty probability matrix"));
    }
    let k = domain_ids.len();
    for (j, row) in probs.iter().enumerate() {
        if row.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "row {j} has length {} != {k}",
                row.len()
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::validation(format!(
                "row {j} sums to {sum}, not a probability vector"
            )));
        }
    }
    let n = probs.len();
    let mut sim = vec![0.0; k];
    for row in probs {
        for (s, v) in sim.iter_mut().zip(row) {
            *s += v;
        }
    }
    for s in &mut sim {
        *s /= n as f64;
    }
    Ok(SimilarityReport {
        domain_ids: domain_ids.to_vec(),
        sim,
        n_target: n,
        tau: 1.0 / k as f64,
    })
}

/// Threshold selection: domains with similarity strictly above `tau`. In
/// the exact-uniform degenerate case the argmax domain (smallest index on
/// ties) is selected so the result is never empty.
pub fn select_similar_domains(
    report: &SimilarityReport,
    tau: Option<f64>,
) -> Result<SelectionResult> {
    let tau = tau.unwrap_or(report.tau);
    if !(0.0..1.0).contains(&tau) || tau <= 0.0 {
        return Err(Error::validation(format!("tau {tau} outside (0,1)")));
    }
    let mut selected: Vec<DomainId> = report
        .domain_ids
        .iter()
        .zip(&report.sim)
        .filter(|(_, &s)| s > tau)
        .map(|(&id, _)| id)
        .collect();
    if selected.is_empty() {
        let mut argmax = 0usize;
        for (i, &s) in report.sim.iter().enumerate() {
            if s > report.sim[argmax] {
                argmax = i;
            }
        }
        selected.push(report.domain_ids[argmax]);
    }
    Ok(SelectionResult {
        selected,
        report: Some(SimilarityReport {
            tau,
            ..report.clone()
        }),
        method: SelectionMethod::Dgds,
    })
}

/// One greedy round: the domain added and the target-holdout SRCC after
/// adding it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdsRound {
    pub added: DomainId,
    pub srcc: f64,
}

const GDS_MIN_IMPROVEMENT: f64 = 1e-4;

/// Greedy domain selection: starts from the single best domain by the
/// evaluation closure (SRCC of a regressor trained on the subset, scored on
/// a labeled target holdout) and adds domains while the score improves by
/// more than 1e-4. Supervised diagnostic, not part of the unsupervised
/// pipeline.
pub fn greedy_domain_selection(
    domain_ids: &[DomainId],
    eval_subset: &dyn Fn(&[DomainId]) -> Result<f64>,
    max_rounds: usize,
) -> Result<(SelectionResult, Vec<GdsRound>)> {
    if domain_ids.is_empty() {
        return Err(Error::validation("need at least one domain"));
    }
    let mut remaining: Vec<DomainId> = domain_ids.to_vec();
    let mut selected: Vec<DomainId> = Vec::new();
    let mut rounds: Vec<GdsRound> = Vec::new();
    let mut best_score = f64::NEG_INFINITY;

    for _ in 0..max_rounds.max(1) {
        let mut round_best: Option<(usize, f64)> = None;
        for (i, &candidate) in remaining.iter().enumerate() {
            let mut subset = selected.clone();
            subset.push(candidate);
            let score = eval_subset(&subset)?;
            let better = match round_best {
                Some((_, s)) => score > s,
                None => true,
            };
            if better {
                round_best = Some((i, score));
            }
        }
        match round_best {
            Some((i, score)) if selected.is_empty() || score > best_score + GDS_MIN_IMPROVEMENT => {
                let added = remaining.remove(i);
                selected.push(added);
                best_score = score;
                rounds.push(GdsRound {
                    added,
                    srcc: score,
                });
            }
            _ => break,
        }
        if remaining.is_empty() {
            break;
        }
    }
    Ok((
        SelectionResult {
            selected,
            report: None,
            method: SelectionMethod::Gds,
        },
        rounds,
    ))
}

const PROXY_EPOCHS: usize = 10;
/// The probe has only a few hundred gradient steps, so it trains at a
/// higher rate than the main models.
const PROXY_LEARNING_RATE: f64 = 3e-2;

/// Probe-classifier estimate of the distance between two feature
/// distributions: train a binary source-vs-target head on half the data and
/// return `2 (2 acc - 1)` on the held-out half, clamped to `[0, 2]`.
pub fn proxy_domain_distance(
    source: &[FeatureVector],
    target: &[FeatureVector],
    config: &TrainConfig,
) -> Result<f64> {
    if source.len() < 20 || target.len() < 20 {
        return Err(Error::validation(
            "need at least 20 samples per side for the distance probe",
        ));
    }
    let split = |v: &[FeatureVector]| {
        let half = v.len() / 2;
        (v[..half].to_vec(), v[half..].to_vec())
    };
    let (src_train, src_test) = split(source);
    let (tgt_train, tgt_test) = split(target);

    let mut features = src_train;
    let mut labels = vec![0usize; features.len()];
    features.extend(tgt_train);
    labels.resize(features.len(), 1);

    let probe_config = TrainConfig {
        epochs: PROXY_EPOCHS,
        learning_rate: PROXY_LEARNING_RATE,
        ..*config
    };
    let (probe, _) = fit_classifier(
        &features,
        &labels,
        vec![DomainId(0), DomainId(1)],
        Some(crate::models::DEFAULT_HIDDEN),
        &probe_config,
        None,
    )?;

    let mut correct = 0usize;
    let mut total = 0usize;
    for (fs, label) in [(&src_test, 0usize), (&tgt_test, 1usize)] {
        for f in fs {
            let p = probe.classify(f)?;
            if (p[1] > p[0]) as usize == label {
                correct += 1;
            }
            total += 1;
        }
    }
    let acc = correct as f64 / total as f64;
    Ok((2.0 * (2.0 * acc - 1.0)).clamp(0.0, 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FEATURE_DIM;
    use crate::models::DEFAULT_HIDDEN;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ids(n: u8) -> Vec<DomainId> {
        (1..=n).map(DomainId).collect()
    }

    #[test]
    fn single_row_similarity_is_that_row() {
        let report = relative_similarity(&ids(3), &[vec![0.2, 0.5, 0.3]]).unwrap();
        assert_eq!(report.sim, vec![0.2, 0.5, 0.3]);
        assert_eq!(report.n_target, 1);
    }

    #[test]
    fn column_means_match_hand_computation() {
        let report =
            relative_similarity(&ids(3), &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(report.sim, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn uniform_rows_give_one_over_k() {
        let rows = vec![vec![0.04; 25]; 7];
        let report = relative_similarity(&(1..=25).map(DomainId).collect::<Vec<_>>(), &rows).unwrap();
        for s in &report.sim {
            assert!((s - 0.04).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_rows_rejected() {
        assert!(relative_similarity(&ids(2), &[vec![0.9, 0.2]]).is_err());
        assert!(relative_similarity(&ids(2), &[]).is_err());
    }

    #[test]
    fn threshold_selection_direct_case() {
        let report = SimilarityReport {
            domain_ids: ids(4),
            sim: vec![0.5, 0.3, 0.1, 0.1],
            n_target: 10,
            tau: 0.25,
        };
        let result = select_similar_domains(&report, Some(0.25)).unwrap();
        assert_eq!(result.selected, vec![DomainId(1), DomainId(2)]);
        assert_eq!(result.method, SelectionMethod::Dgds);
    }

    #[test]
    fn exact_uniform_falls_back_to_first_argmax() {
        let report = SimilarityReport {
            domain_ids: ids(4),
            sim: vec![0.25; 4],
            n_target: 1,
            tau: 0.25,
        };
        let result = select_similar_domains(&report, None).unwrap();
        assert_eq!(result.selected, vec![DomainId(1)]);
    }

    #[test]
    fn invalid_tau_rejected() {
        let report = SimilarityReport {
            domain_ids: ids(2),
            sim: vec![0.6, 0.4],
            n_target: 1,
            tau: 0.5,
        };
        assert!(select_similar_domains(&report, Some(0.0)).is_err());
        assert!(select_similar_domains(&report, Some(1.0)).is_err());
    }

    #[test]
    fn zero_classifier_rows_are_uniform() {
        let classifier = SoftmaxClassifier::zeros(FEATURE_DIM, Some(DEFAULT_HIDDEN), ids(15));
        let images = vec![crate::raster::synthetic_reference(64, 64, 0)];
        let probs =
            domain_probabilities(&classifier, &images, &PatchPolicy::default()).unwrap();
        for v in &probs[0] {
            assert!((v - 1.0 / 15.0).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_single_domain_is_trivial() {
        let (result, rounds) =
            greedy_domain_selection(&[DomainId(7)], &|_| Ok(0.8), 10).unwrap();
        assert_eq!(result.selected, vec![DomainId(7)]);
        assert_eq!(rounds.len(), 1);
        assert_eq!(result.method, SelectionMethod::Gds);
    }

    #[test]
    fn greedy_stops_when_additions_hurt() {
        // domain 1 alone scores 0.9; any union with others scores lower
        let eval = |subset: &[DomainId]| -> Result<f64> {
            if subset == [DomainId(1)] {
                Ok(0.9)
            } else if subset.len() == 1 {
                Ok(0.3)
            } else {
                Ok(0.5)
            }
        };
        let (result, rounds) = greedy_domain_selection(&ids(3), &eval, 10).unwrap();
        assert_eq!(result.selected, vec![DomainId(1)]);
        assert_eq!(rounds.len(), 1);
        assert!((rounds[0].srcc - 0.9).abs() < 1e-12);
    }

    #[test]
    fn greedy_never_ends_below_its_start() {
        let eval = |subset: &[DomainId]| -> Result<f64> {
            Ok(0.2 + 0.1 * subset.len() as f64)
        };
        let (result, rounds) = greedy_domain_selection(&ids(5), &eval, 10).unwrap();
        assert_eq!(result.selected.len(), 5);
        assert!(rounds.last().unwrap().srcc >= rounds[0].srcc);
    }

    fn gaussian_features(n: usize, center: f64, seed: u64) -> Vec<FeatureVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                FeatureVector::new(
                    (0..FEATURE_DIM)
                        .map(|d| {
                            let base = if d < 2 { center } else { 0.0 };
                            base + rng.gen_range(-1.0..1.0)
                        })
                        .collect(),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn identical_distributions_have_near_zero_distance() {
        let source = gaussian_features(150, 0.0, 1);
        let target = gaussian_features(150, 0.0, 2);
        let d = proxy_domain_distance(&source, &target, &TrainConfig::default()).unwrap();
        assert!(d <= 0.2 + 1e-9, "distance {d}");
    }

    #[test]
    fn separable_clusters_have_maximal_distance() {
        let source = gaussian_features(150, 0.0, 3);
        let target = gaussian_features(150, 20.0, 4);
        let d = proxy_domain_distance(&source, &target, &TrainConfig::default()).unwrap();
        assert!((d - 2.0).abs() < 1e-9, "distance {d}");
    }

    #[test]
    fn too_few_samples_rejected() {
        let source = gaussian_features(10, 0.0, 5);
        let target = gaussian_features(100, 0.0, 6);
        assert!(proxy_domain_distance(&source, &target, &TrainConfig::default()).is_err());
    }
}
