//! The end-to-end run (`pipeline`) and the single-stage subcommands
//! (`train-domain`, `select`, `train-iqa`).
//!
//! The unsupervised selection path reads only `target/index.json` and the
//! target images; quality labels live in `target/labels.json`, which is
//! opened solely by the evaluation stage (and tolerated when absent).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::manifest::{
    read_json, write_json, DatasetManifest, RunLock, TargetIndex, TargetLabels,
};
use super::write_run_record;
use crate::distortion::{family_name, DomainDataset, DomainId};
use crate::error::{Error, Result};
use crate::eval::{median, plcc, split_by_reference, srcc, MetricPair, SplitPlan};
use crate::features::{extract_features, sample_patches, FeatureVector, PatchMode, PatchPolicy};
use crate::models::{
    fit_classifier, fit_regressor, train_patch_features, Checkpoint, Regressor,
    SoftmaxClassifier,
};
use crate::raster::RasterImage;
use crate::selection::{relative_similarity, select_similar_domains, SimilarityReport};

const REPEAT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// The machine-readable analogue of a similar-domain table row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub domain_id: DomainId,
    pub family_name: String,
    pub sim: f64,
    pub selected: bool,
}

/// `selection_report.json`: entries sorted by similarity descending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReportFile {
    pub tau: f64,
    pub n_target: usize,
    pub entries: Vec<SelectionEntry>,
}

impl SelectionReportFile {
    pub fn selected_ids(&self) -> Vec<DomainId> {
        self.entries
            .iter()
            .filter(|e| e.selected)
            .map(|e| e.domain_id)
            .collect()
    }
}

pub fn selection_report_file(
    report: &SimilarityReport,
    selected: &[DomainId],
) -> SelectionReportFile {
    let mut entries: Vec<SelectionEntry> = report
        .domain_ids
        .iter()
        .zip(&report.sim)
        .map(|(&id, &sim)| SelectionEntry {
            domain_id: id,
            family_name: family_name(id),
            sim,
            selected: selected.contains(&id),
        })
        .collect();
    entries.sort_by(|a, b| b.sim.total_cmp(&a.sim).then(a.domain_id.cmp(&b.domain_id)));
    SelectionReportFile {
        tau: report.tau,
        n_target: report.n_target,
        entries,
    }
}

/// One metrics table row; `plcc_mode` is textual so failed metrics can be
/// recorded as `undefined` instead of aborting the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub srcc: f64,
    pub plcc: f64,
    pub n: usize,
    pub plcc_mode: String,
}

fn metric_row(pred: &[f64], label: &[f64]) -> MetricRow {
    let n = pred.len();
    let s = srcc(pred, label);
    let p = plcc(pred, label, false);
    match (s, p) {
        (Ok(s), Ok(p)) => MetricRow {
            srcc: s,
            plcc: p.value,
            n,
            plcc_mode: match p.mode {
                crate::eval::PlccMode::Logistic => "logistic".to_string(),
                crate::eval::PlccMode::Raw => "raw".to_string(),
                crate::eval::PlccMode::RawFallback => "raw_fallback".to_string(),
            },
        },
        _ => MetricRow {
            srcc: f64::NAN,
            plcc: f64::NAN,
            n,
            plcc_mode: "undefined".to_string(),
        },
    }
}

// ---------------------------------------------------------------------------
// corpus loading

pub struct TargetSet {
    pub images: Vec<RasterImage>,
    pub paths: Vec<String>,
}

fn domain_manifest_path(config: &ExperimentConfig, domain: DomainId) -> PathBuf {
    config
        .out_dir
        .join("sources")
        .join(format!("domain_{}", domain.0))
        .join("manifest.json")
}

fn target_index_path(config: &ExperimentConfig) -> PathBuf {
    config.out_dir.join("target").join("index.json")
}

fn target_labels_path(config: &ExperimentConfig) -> PathBuf {
    config.out_dir.join("target").join("labels.json")
}

/// Every artifact the pipeline needs, checked up front so a partial synth
/// fails with the full list of absent files.
pub fn check_artifacts(config: &ExperimentConfig) -> Result<()> {
    let mut missing: Vec<PathBuf> = config
        .domains
        .iter()
        .map(|&d| domain_manifest_path(config, d))
        .filter(|p| !p.is_file())
        .collect();
    let index = target_index_path(config);
    if !index.is_file() {
        missing.push(index);
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingArtifacts(missing))
    }
}

pub fn load_sources(config: &ExperimentConfig) -> Result<Vec<DomainDataset>> {
    config
        .domains
        .iter()
        .map(|&d| DatasetManifest::load_dataset(&domain_manifest_path(config, d)))
        .collect()
}

pub fn load_target(config: &ExperimentConfig) -> Result<TargetSet> {
    let index: TargetIndex = read_json(&target_index_path(config))?;
    let base = config.out_dir.join("target");
    let images = index.load_images(&base)?;
    Ok(TargetSet {
        images,
        paths: index.images.into_iter().map(|e| e.image_path).collect(),
    })
}

/// Labels for the evaluation stage; `None` when the label file is absent
/// (the unsupervised run still completes).
pub fn load_target_labels(
    config: &ExperimentConfig,
    target: &TargetSet,
) -> Result<Option<Vec<f64>>> {
    let path = target_labels_path(config);
    if !path.is_file() {
        return Ok(None);
    }
    let file: TargetLabels = read_json(&path)?;
    let labels = target
        .paths
        .iter()
        .map(|p| {
            file.labels
                .get(p)
                .copied()
                .ok_or_else(|| Error::validation(format!("no label for target image {p}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Some(labels))
}

// ---------------------------------------------------------------------------
// feature plumbing shared by pipeline, single-stage commands, and gds

pub(crate) fn repeat_policy(config: &ExperimentConfig, seed: u64) -> PatchPolicy {
    config
        .patch
        .with_seed(config.patch.seed ^ seed.wrapping_mul(REPEAT_SALT))
}

/// Train-patch features and pseudo-MOS targets per domain, restricted to
/// the plan's training side when a plan is given. Sample keys are global
/// indices, so they are stable across different plans.
pub(crate) fn domain_train_features(
    domains: &[DomainDataset],
    plan: Option<&SplitPlan>,
    policy: &PatchPolicy,
) -> Result<Vec<(Vec<FeatureVector>, Vec<f64>)>> {
    let feature_fn = train_patch_features(policy);
    let mut out = Vec::with_capacity(domains.len());
    let mut key = 0u64;
    for domain in domains {
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for sample in &domain.samples {
            if plan.map(|p| p.is_train(&sample.reference_id)).unwrap_or(true) {
                for f in feature_fn(&sample.image, key)? {
                    features.push(f);
                    targets.push(sample.quality);
                }
            }
            key += 1;
        }
        if features.is_empty() {
            return Err(Error::validation(format!(
                "domain {} has no training samples under this split",
                domain.domain
            )));
        }
        out.push((features, targets));
    }
    Ok(out)
}

/// Test-patch features per target image, seeded per image index.
pub(crate) fn target_features(
    images: &[RasterImage],
    policy: &PatchPolicy,
) -> Result<Vec<Vec<FeatureVector>>> {
    images
        .iter()
        .enumerate()
        .map(|(j, image)| {
            let p = policy.with_seed(
                policy
                    .seed
                    .wrapping_add((j as u64).wrapping_mul(REPEAT_SALT)),
            );
            sample_patches(image, &p, PatchMode::Test)?
                .iter()
                .map(extract_features)
                .collect()
        })
        .collect()
}

/// Per-image domain probabilities over cached patch features.
pub(crate) fn probability_rows(
    classifier: &SoftmaxClassifier,
    target_feats: &[Vec<FeatureVector>],
) -> Result<Vec<Vec<f64>>> {
    target_feats
        .iter()
        .map(|feats| {
            let mut row = vec![0.0; classifier.k()];
            for f in feats {
                for (r, v) in row.iter_mut().zip(classifier.classify(f)?) {
                    *r += v;
                }
            }
            for r in &mut row {
                *r /= feats.len() as f64;
            }
            Ok(row)
        })
        .collect()
}

/// Image-level quality predictions: mean over cached patch features.
pub(crate) fn predict_images(
    regressor: &Regressor,
    target_feats: &[Vec<FeatureVector>],
) -> Result<Vec<f64>> {
    target_feats
        .iter()
        .map(|feats| {
            let mut total = 0.0;
            for f in feats {
                total += regressor.predict(f)?;
            }
            Ok(total / feats.len() as f64)
        })
        .collect()
}

fn gather_subset(
    per_domain: &[(Vec<FeatureVector>, Vec<f64>)],
    indices: &[usize],
) -> (Vec<FeatureVector>, Vec<f64>) {
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for &i in indices {
        features.extend(per_domain[i].0.iter().cloned());
        targets.extend(per_domain[i].1.iter().cloned());
    }
    (features, targets)
}

// ---------------------------------------------------------------------------
// pipeline

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineRunSummary {
    pub run: usize,
    pub seed: u64,
    pub selected: Vec<DomainId>,
    pub train_size_selected: usize,
    pub train_size_all: usize,
    pub dgqa: Option<MetricRow>,
    pub baseline: Option<MetricRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub config_hash: String,
    pub seed: u64,
    pub n_repeats: usize,
    pub k: usize,
    pub tau: f64,
    pub n_target: usize,
    pub labels_present: bool,
    pub runs: Vec<PipelineRunSummary>,
    pub dgqa_median: Option<MetricPair>,
    pub baseline_median: Option<MetricPair>,
    /// Median over runs of selected training size / full training size.
    pub median_data_fraction: f64,
}

struct RepeatOutcome {
    report: SelectionReportFile,
    selected: Vec<DomainId>,
    train_size_selected: usize,
    train_size_all: usize,
    dgqa: Option<MetricRow>,
    baseline: Option<MetricRow>,
    classifier: SoftmaxClassifier,
    regressor_dgqa: Regressor,
    regressor_baseline: Regressor,
}

fn run_repeat(
    config: &ExperimentConfig,
    sources: &[DomainDataset],
    target: &TargetSet,
    labels: Option<&[f64]>,
    seed_r: u64,
) -> Result<RepeatOutcome> {
    let reference_ids = sources
        .iter()
        .flat_map(|d| d.samples.iter().map(|s| s.reference_id.clone()));
    let plan = split_by_reference(reference_ids, config.split_ratio, seed_r)
        .map_err(|e| e.in_stage("split"))?;

    let policy = repeat_policy(config, seed_r);
    let per_domain = domain_train_features(sources, Some(&plan), &policy)
        .map_err(|e| e.in_stage("features"))?;

    let mut features = Vec::new();
    let mut class_labels = Vec::new();
    for (class, (feats, _)) in per_domain.iter().enumerate() {
        features.extend(feats.iter().cloned());
        class_labels.extend(std::iter::repeat(class).take(feats.len()));
    }
    let train = config.train.with_seed(seed_r);
    let (classifier, _) = fit_classifier(
        &features,
        &class_labels,
        config.domains.clone(),
        config.hidden,
        &train,
        None,
    )
    .map_err(|e| e.in_stage("train-domain"))?;

    let target_feats =
        target_features(&target.images, &policy).map_err(|e| e.in_stage("select"))?;
    let probs =
        probability_rows(&classifier, &target_feats).map_err(|e| e.in_stage("select"))?;
    let sim = relative_similarity(&config.domains, &probs).map_err(|e| e.in_stage("select"))?;
    let selection = select_similar_domains(&sim, Some(config.effective_tau()))
        .map_err(|e| e.in_stage("select"))?;
    let report = selection_report_file(
        selection.report.as_ref().expect("dgds carries a report"),
        &selection.selected,
    );

    let selected_idx: Vec<usize> = config
        .domains
        .iter()
        .enumerate()
        .filter(|(_, id)| selection.selected.contains(id))
        .map(|(i, _)| i)
        .collect();
    let all_idx: Vec<usize> = (0..config.domains.len()).collect();
    let (f_sel, q_sel) = gather_subset(&per_domain, &selected_idx);
    let (f_all, q_all) = gather_subset(&per_domain, &all_idx);
    let (regressor_dgqa, _) = fit_regressor(&f_sel, &q_sel, config.hidden, &train, None)
        .map_err(|e| e.in_stage("train-iqa"))?;
    let (regressor_baseline, _) = fit_regressor(&f_all, &q_all, config.hidden, &train, None)
        .map_err(|e| e.in_stage("train-iqa"))?;

    let (dgqa, baseline) = match labels {
        Some(labels) => {
            let pred_dgqa = predict_images(&regressor_dgqa, &target_feats)
                .map_err(|e| e.in_stage("evaluate"))?;
            let pred_base = predict_images(&regressor_baseline, &target_feats)
                .map_err(|e| e.in_stage("evaluate"))?;
            (
                Some(metric_row(&pred_dgqa, labels)),
                Some(metric_row(&pred_base, labels)),
            )
        }
        None => (None, None),
    };

    Ok(RepeatOutcome {
        report,
        selected: selection.selected,
        train_size_selected: f_sel.len(),
        train_size_all: f_all.len(),
        dgqa,
        baseline,
        classifier,
        regressor_dgqa,
        regressor_baseline,
    })
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

fn metrics_csv(runs: &[PipelineRunSummary]) -> String {
    let mut out = String::from("run,seed,setting,n,srcc,plcc,plcc_mode\n");
    for r in runs {
        for (setting, row) in [("dgqa", &r.dgqa), ("baseline", &r.baseline)] {
            if let Some(row) = row {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.run,
                    r.seed,
                    setting,
                    row.n,
                    fmt_f64(row.srcc),
                    fmt_f64(row.plcc),
                    row.plcc_mode
                ));
            }
        }
    }
    out
}

fn median_of(rows: Vec<&MetricRow>) -> Option<MetricPair> {
    let ok: Vec<&&MetricRow> = rows
        .iter()
        .filter(|r| r.srcc.is_finite() && r.plcc.is_finite())
        .collect();
    if ok.is_empty() {
        return None;
    }
    let mut srccs: Vec<f64> = ok.iter().map(|r| r.srcc).collect();
    let mut plccs: Vec<f64> = ok.iter().map(|r| r.plcc).collect();
    Some(MetricPair {
        srcc: median(&mut srccs),
        plcc: median(&mut plccs),
        n: ok[0].n,
    })
}

/// The full DGQA run: classifier, similarity, selection, paired regressor
/// training, evaluation, and all artifacts.
pub fn cmd_pipeline(config: &ExperimentConfig) -> Result<PipelineSummary> {
    config.validate().map_err(|e| e.in_stage("pipeline"))?;
    check_artifacts(config)?;
    let _lock = RunLock::acquire(&config.out_dir)?;
    run_pipeline(config)
}

fn run_pipeline(config: &ExperimentConfig) -> Result<PipelineSummary> {
    let sources = load_sources(config).map_err(|e| e.in_stage("load"))?;
    let target = load_target(config).map_err(|e| e.in_stage("load"))?;
    let labels = load_target_labels(config, &target).map_err(|e| e.in_stage("evaluate"))?;

    let mut runs = Vec::with_capacity(config.n_repeats);
    let mut seeds = Vec::with_capacity(config.n_repeats);
    let mut first_report: Option<SelectionReportFile> = None;
    for r in 0..config.n_repeats {
        let seed_r = config.seed + r as u64;
        seeds.push(seed_r);
        let outcome = run_repeat(config, &sources, &target, labels.as_deref(), seed_r)?;

        let run_dir = config.out_dir.join("runs").join(format!("run_{r}"));
        std::fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
        write_json(&run_dir.join("selection_report.json"), &outcome.report)?;
        Checkpoint::from_classifier(&outcome.classifier)
            .save(&run_dir.join("classifier.json"))?;
        Checkpoint::from_regressor(&outcome.regressor_dgqa)
            .save(&run_dir.join("regressor_dgqa.json"))?;
        Checkpoint::from_regressor(&outcome.regressor_baseline)
            .save(&run_dir.join("regressor_baseline.json"))?;
        if first_report.is_none() {
            first_report = Some(outcome.report.clone());
        }
        runs.push(PipelineRunSummary {
            run: r,
            seed: seed_r,
            selected: outcome.selected,
            train_size_selected: outcome.train_size_selected,
            train_size_all: outcome.train_size_all,
            dgqa: outcome.dgqa,
            baseline: outcome.baseline,
        });
    }

    write_json(
        &config.out_dir.join("selection_report.json"),
        &first_report.expect("n_repeats >= 1"),
    )?;
    std::fs::write(config.out_dir.join("metrics.csv"), metrics_csv(&runs))
        .map_err(|e| Error::io(config.out_dir.join("metrics.csv"), e))?;

    let mut fractions: Vec<f64> = runs
        .iter()
        .map(|r| r.train_size_selected as f64 / r.train_size_all as f64)
        .collect();
    let summary = PipelineSummary {
        config_hash: config.hash(),
        seed: config.seed,
        n_repeats: config.n_repeats,
        k: config.k(),
        tau: config.effective_tau(),
        n_target: target.images.len(),
        labels_present: labels.is_some(),
        dgqa_median: median_of(runs.iter().filter_map(|r| r.dgqa.as_ref()).collect()),
        baseline_median: median_of(runs.iter().filter_map(|r| r.baseline.as_ref()).collect()),
        median_data_fraction: median(&mut fractions),
        runs,
    };
    write_json(&config.out_dir.join("summary.json"), &summary)?;
    write_run_record(&config.out_dir, "pipeline", config, &seeds)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// single-stage subcommands

/// Train the domain classifier alone; returns the checkpoint path.
pub fn cmd_train_domain(config: &ExperimentConfig) -> Result<PathBuf> {
    config.validate().map_err(|e| e.in_stage("train-domain"))?;
    check_artifacts(config)?;
    let _lock = RunLock::acquire(&config.out_dir)?;
    let sources = load_sources(config).map_err(|e| e.in_stage("load"))?;
    let reference_ids = sources
        .iter()
        .flat_map(|d| d.samples.iter().map(|s| s.reference_id.clone()));
    let plan = split_by_reference(reference_ids, config.split_ratio, config.seed)
        .map_err(|e| e.in_stage("split"))?;
    let policy = repeat_policy(config, config.seed);
    let train_feats = domain_train_features(&sources, Some(&plan), &policy)
        .map_err(|e| e.in_stage("features"))?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (class, (feats, _)) in train_feats.iter().enumerate() {
        features.extend(feats.iter().cloned());
        labels.extend(std::iter::repeat(class).take(feats.len()));
    }
    let (classifier, log) = fit_classifier(
        &features,
        &labels,
        config.domains.clone(),
        config.hidden,
        &config.train.with_seed(config.seed),
        None,
    )
    .map_err(|e| e.in_stage("train-domain"))?;

    let path = config.out_dir.join("classifier.json");
    Checkpoint::from_classifier(&classifier).save(&path)?;
    write_json(&config.out_dir.join("train_log.json"), &log)?;
    write_run_record(&config.out_dir, "train-domain", config, &[config.seed])?;
    Ok(path)
}

/// Similarity scoring and thresholding with a trained classifier.
pub fn cmd_select(
    config: &ExperimentConfig,
    model: Option<&Path>,
) -> Result<SelectionReportFile> {
    config.validate().map_err(|e| e.in_stage("select"))?;
    let model_path = model
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.out_dir.join("classifier.json"));
    if !model_path.is_file() {
        return Err(Error::MissingArtifacts(vec![model_path]));
    }
    let classifier = Checkpoint::load(&model_path)?
        .into_classifier()
        .map_err(|e| e.in_stage("select"))?;
    let target = load_target(config).map_err(|e| e.in_stage("load"))?;
    let policy = repeat_policy(config, config.seed);
    let target_feats =
        target_features(&target.images, &policy).map_err(|e| e.in_stage("select"))?;
    let probs =
        probability_rows(&classifier, &target_feats).map_err(|e| e.in_stage("select"))?;
    let sim = relative_similarity(&classifier.domain_ids, &probs)
        .map_err(|e| e.in_stage("select"))?;
    let selection = select_similar_domains(&sim, Some(config.effective_tau()))
        .map_err(|e| e.in_stage("select"))?;
    let report = selection_report_file(
        selection.report.as_ref().expect("dgds carries a report"),
        &selection.selected,
    );
    write_json(&config.out_dir.join("selection_report.json"), &report)?;
    write_run_record(&config.out_dir, "select", config, &[config.seed])?;
    Ok(report)
}

/// Train the quality regressor on an explicit or previously selected domain
/// subset (default: every configured domain).
pub fn cmd_train_iqa(
    config: &ExperimentConfig,
    domains_override: Option<Vec<DomainId>>,
) -> Result<PathBuf> {
    config.validate().map_err(|e| e.in_stage("train-iqa"))?;
    let domains = match domains_override {
        Some(d) => d,
        None => {
            let report_path = config.out_dir.join("selection_report.json");
            if report_path.is_file() {
                let report: SelectionReportFile = read_json(&report_path)?;
                report.selected_ids()
            } else {
                config.domains.clone()
            }
        }
    };
    if domains.is_empty() {
        return Err(Error::validation("empty training domain subset").in_stage("train-iqa"));
    }
    for d in &domains {
        if !config.domains.contains(d) {
            return Err(
                Error::validation(format!("domain {d} is not part of this run"))
                    .in_stage("train-iqa"),
            );
        }
    }
    let subset_config = ExperimentConfig {
        domains: domains.clone(),
        ..config.clone()
    };
    check_artifacts(&subset_config)?;
    let sources = load_sources(&subset_config).map_err(|e| e.in_stage("load"))?;
    let policy = repeat_policy(config, config.seed);
    let per_domain = domain_train_features(&sources, None, &policy)
        .map_err(|e| e.in_stage("features"))?;
    let all: Vec<usize> = (0..sources.len()).collect();
    let (features, targets) = gather_subset(&per_domain, &all);
    let (regressor, log) = fit_regressor(
        &features,
        &targets,
        config.hidden,
        &config.train.with_seed(config.seed),
        None,
    )
    .map_err(|e| e.in_stage("train-iqa"))?;
    let path = config.out_dir.join("regressor.json");
    Checkpoint::from_regressor(&regressor).save(&path)?;
    write_json(&config.out_dir.join("train_log.json"), &log)?;
    write_run_record(&config.out_dir, "train-iqa", config, &[config.seed])?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::SimilarityReport;

    #[test]
    fn selection_report_sorted_descending() {
        let report = SimilarityReport {
            domain_ids: vec![DomainId(1), DomainId(11), DomainId(22)],
            sim: vec![0.2, 0.5, 0.3],
            n_target: 9,
            tau: 1.0 / 3.0,
        };
        let file = selection_report_file(&report, &[DomainId(11)]);
        let sims: Vec<f64> = file.entries.iter().map(|e| e.sim).collect();
        assert_eq!(sims, vec![0.5, 0.3, 0.2]);
        assert_eq!(file.entries[0].domain_id, DomainId(11));
        assert!(file.entries[0].selected);
        assert!(!file.entries[1].selected);
        assert_eq!(file.entries[1].family_name, "pixelate");
    }

    #[test]
    fn metric_row_handles_constant_predictions() {
        let row = metric_row(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]);
        assert!(row.srcc.is_nan());
        assert_eq!(row.plcc_mode, "undefined");
    }

    #[test]
    fn metrics_csv_has_fixed_header_and_rows() {
        let runs = vec![PipelineRunSummary {
            run: 0,
            seed: 5,
            selected: vec![DomainId(1)],
            train_size_selected: 10,
            train_size_all: 30,
            dgqa: Some(MetricRow {
                srcc: 0.5,
                plcc: 0.25,
                n: 8,
                plcc_mode: "logistic".into(),
            }),
            baseline: Some(MetricRow {
                srcc: 0.5,
                plcc: 0.25,
                n: 8,
                plcc_mode: "raw_fallback".into(),
            }),
        }];
        let csv = metrics_csv(&runs);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "run,seed,setting,n,srcc,plcc,plcc_mode");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "0,5,dgqa,8,0.5,0.25,logistic");
    }
}
