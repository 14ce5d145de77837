//! The supervised greedy-selection diagnostic and its cross-check against
//! the unsupervised selection.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::manifest::{write_json, FeatureCache, RunLock};
use super::pipeline::{
    check_artifacts, domain_train_features, load_sources, load_target, load_target_labels,
    probability_rows, repeat_policy, selection_report_file, target_features,
    SelectionReportFile,
};
use super::write_run_record;
use crate::distortion::{family_name, DomainId};
use crate::error::{Error, Result};
use crate::eval::srcc;
use crate::models::{fit_classifier, fit_regressor};
use crate::selection::{
    greedy_domain_selection, relative_similarity, select_similar_domains,
};

/// Jaccard overlap of two domain sets.
pub fn jaccard(a: &[DomainId], b: &[DomainId]) -> f64 {
    let sa: std::collections::BTreeSet<DomainId> = a.iter().copied().collect();
    let sb: std::collections::BTreeSet<DomainId> = b.iter().copied().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdsRoundEntry {
    pub added: DomainId,
    pub family_name: String,
    pub srcc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdsReportFile {
    pub selected: Vec<DomainId>,
    pub rounds: Vec<GdsRoundEntry>,
    pub dgds: SelectionReportFile,
    /// |GDS ∩ DGDS| / |GDS ∪ DGDS|.
    pub jaccard: f64,
    pub n_target: usize,
}

/// Greedy supervised selection scored on the labeled target, plus the
/// unsupervised selection for overlap statistics.
pub fn cmd_gds(config: &ExperimentConfig) -> Result<GdsReportFile> {
    config.validate().map_err(|e| e.in_stage("gds"))?;
    check_artifacts(config)?;
    let _lock = RunLock::acquire(&config.out_dir)?;
    run_gds(config).map_err(|e| e.in_stage("gds"))
}

fn run_gds(config: &ExperimentConfig) -> Result<GdsReportFile> {
    let sources = load_sources(config)?;
    let target = load_target(config)?;
    let labels = load_target_labels(config, &target)?.ok_or_else(|| {
        Error::validation("greedy selection needs a labeled target (target/labels.json)")
    })?;

    // one feature pass, cached for every greedy round
    let policy = repeat_policy(config, config.seed);
    let per_domain = domain_train_features(&sources, None, &policy)?;
    let target_feats = target_features(&target.images, &policy)?;

    let mut cache = FeatureCache::new();
    for (domain, (feats, _)) in sources.iter().zip(&per_domain) {
        for (i, f) in feats.iter().enumerate() {
            cache.push(format!("domain_{}/{i}", domain.domain.0), f);
        }
    }
    for (j, feats) in target_feats.iter().enumerate() {
        for (p, f) in feats.iter().enumerate() {
            cache.push(format!("target/{j}#p{p}"), f);
        }
    }
    cache.save(&config.out_dir.join("features_cache.json"))?;

    let train = config.train.with_seed(config.seed);
    let eval_subset = |subset: &[DomainId]| -> Result<f64> {
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for id in subset {
            let i = config
                .domains
                .iter()
                .position(|d| d == id)
                .ok_or_else(|| Error::validation(format!("unknown subset domain {id}")))?;
            features.extend(per_domain[i].0.iter().cloned());
            targets.extend(per_domain[i].1.iter().cloned());
        }
        let (regressor, _) = fit_regressor(&features, &targets, config.hidden, &train, None)?;
        let preds = super::pipeline::predict_images(&regressor, &target_feats)?;
        srcc(&preds, &labels)
    };
    let (gds_result, rounds) =
        greedy_domain_selection(&config.domains, &eval_subset, config.k())?;

    // unsupervised counterpart on the same cached features
    let mut features = Vec::new();
    let mut class_labels = Vec::new();
    for (class, (feats, _)) in per_domain.iter().enumerate() {
        features.extend(feats.iter().cloned());
        class_labels.extend(std::iter::repeat(class).take(feats.len()));
    }
    let (classifier, _) = fit_classifier(
        &features,
        &class_labels,
        config.domains.clone(),
        config.hidden,
        &train,
        None,
    )?;
    let probs = probability_rows(&classifier, &target_feats)?;
    let sim = relative_similarity(&config.domains, &probs)?;
    let dgds = select_similar_domains(&sim, Some(config.effective_tau()))?;
    let dgds_report = selection_report_file(
        dgds.report.as_ref().expect("dgds carries a report"),
        &dgds.selected,
    );

    let report = GdsReportFile {
        jaccard: jaccard(&gds_result.selected, &dgds.selected),
        selected: gds_result.selected,
        rounds: rounds
            .into_iter()
            .map(|r| GdsRoundEntry {
                added: r.added,
                family_name: family_name(r.added),
                srcc: r.srcc,
            })
            .collect(),
        dgds: dgds_report,
        n_target: target.images.len(),
    };
    write_json(&config.out_dir.join("gds_report.json"), &report)?;
    write_run_record(&config.out_dir, "gds", config, &[config.seed])?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaccard_bounds_and_cases() {
        let a = [DomainId(1), DomainId(2)];
        let b = [DomainId(2), DomainId(3)];
        assert!((jaccard(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &[]), 0.0);
        assert_eq!(jaccard(&[], &[]), 0.0);
    }
}
