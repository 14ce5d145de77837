//! Dataset synthesis: source-domain datasets on disk, the mixture target
//! set, and the procedural reference generator.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, MixtureMode, TargetMixtureRecipe, TargetSpec};
use super::manifest::{
    write_json, DatasetManifest, ManifestSample, ProvenanceEntry, RunLock, TargetImageEntry,
    TargetIndex, TargetLabels,
};
use super::write_run_record;
use crate::distortion::{
    apply_distortion, generate_domain, DistortionSpec, DomainDataset, DomainId,
};
use crate::error::{Error, Result};
use crate::raster::{pseudo_label, synthetic_reference, RasterImage};

const REF_SPLIT_SALT: u64 = 0x5e1e_c7ed_5a17;
const TARGET_SALT: u64 = 0x7a96_e7a1;

/// Load all PNG references in a directory, sorted by file name; the file
/// stem becomes the reference id.
pub fn load_references(dir: &Path) -> Result<Vec<(String, RasterImage)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "png").unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::validation(format!(
            "no PNG references in {}",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| {
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            RasterImage::load_png(p).map(|img| (id, img))
        })
        .collect()
}

/// Content-disjoint source/target reference split: shuffle with the seed,
/// first `ratio` share to the sources, at least one reference on each side.
pub fn split_references(
    mut refs: Vec<(String, RasterImage)>,
    ratio: f64,
    seed: u64,
) -> Result<(Vec<(String, RasterImage)>, Vec<(String, RasterImage)>)> {
    if refs.len() < 2 {
        return Err(Error::validation(
            "need at least 2 references to hold out a target side",
        ));
    }
    refs.sort_by(|a, b| a.0.cmp(&b.0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ REF_SPLIT_SALT);
    // Fisher-Yates over indices keeps image moves cheap
    for i in (1..refs.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        refs.swap(i, j);
    }
    let n_source = ((ratio * refs.len() as f64).round() as usize).clamp(1, refs.len() - 1);
    let target = refs.split_off(n_source);
    Ok((refs, target))
}

/// Write one domain dataset: `<dir>/<ref>_l<level>.png` plus
/// `<dir>/manifest.json`.
pub fn write_domain(dataset: &DomainDataset, levels: &[u8], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut samples = Vec::with_capacity(dataset.samples.len());
    for (i, sample) in dataset.samples.iter().enumerate() {
        let level = levels[i % levels.len()];
        let file = format!("{}_l{level}.png", sample.reference_id);
        sample.image.save_png(&dir.join(&file))?;
        samples.push(ManifestSample {
            image_path: file,
            reference_id: sample.reference_id.clone(),
            quality: sample.quality,
        });
    }
    DatasetManifest {
        name: dataset.name.clone(),
        domain_id: dataset.domain,
        samples,
    }
    .save(&dir.join("manifest.json"))
}

/// Component index per target image. Stratified mode assigns exact
/// largest-remainder proportional counts in component order; otherwise each
/// image draws a component by weight.
pub fn component_assignment(
    recipe: &TargetMixtureRecipe,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let weights = recipe.normalized_weights();
    if recipe.stratified {
        let mut counts: Vec<usize> = weights
            .iter()
            .map(|w| (w * count as f64).floor() as usize)
            .collect();
        let mut remainder = count - counts.iter().sum::<usize>();
        // largest fractional parts get the leftover slots, ties by order
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = weights[a] * count as f64 - (weights[a] * count as f64).floor();
            let fb = weights[b] * count as f64 - (weights[b] * count as f64).floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &c in order.iter().cycle().take(weights.len().max(remainder)) {
            if remainder == 0 {
                break;
            }
            counts[c] += 1;
            remainder -= 1;
        }
        let mut assignment = Vec::with_capacity(count);
        for (c, &n) in counts.iter().enumerate() {
            assignment.extend(std::iter::repeat(c).take(n));
        }
        assignment
    } else {
        (0..count)
            .map(|_| {
                let draw: f64 = rng.gen_range(0.0..1.0);
                let mut acc = 0.0;
                for (c, &w) in weights.iter().enumerate() {
                    acc += w;
                    if draw < acc {
                        return c;
                    }
                }
                weights.len() - 1
            })
            .collect()
    }
}

pub struct TargetArtifacts {
    pub index: TargetIndex,
    pub labels: TargetLabels,
    pub provenance: Vec<ProvenanceEntry>,
}

/// Synthesize the mixture target in memory.
pub fn synthesize_target(
    recipe: &TargetMixtureRecipe,
    count: usize,
    target_refs: &[(String, RasterImage)],
    seed: u64,
) -> Result<(Vec<RasterImage>, TargetArtifacts)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ TARGET_SALT);
    let assignment = component_assignment(recipe, count, &mut rng);
    let mut images = Vec::with_capacity(count);
    let mut index = Vec::with_capacity(count);
    let mut labels = BTreeMap::new();
    let mut provenance = Vec::with_capacity(count);

    for j in 0..count {
        let (reference_id, reference) = &target_refs[j % target_refs.len()];
        let picked: Vec<usize> = match recipe.mode {
            MixtureMode::SingleDraw => vec![assignment[j]],
            MixtureMode::Stacked => (0..recipe.components.len()).collect(),
        };
        let mut image = reference.clone();
        let mut components = Vec::with_capacity(picked.len());
        for c in picked {
            let component = &recipe.components[c];
            let level = component.levels[rng.gen_range(0..component.levels.len())];
            let spec = DistortionSpec::new(component.family, level, seed ^ (j as u64));
            image = apply_distortion(&image, &spec)?;
            components.push((component.family, level));
        }
        let quality = pseudo_label(reference, &image)?;
        let image_path = format!("images/t{j:04}.png");
        index.push(TargetImageEntry {
            image_path: image_path.clone(),
            reference_id: reference_id.clone(),
        });
        labels.insert(image_path.clone(), quality);
        provenance.push(ProvenanceEntry {
            image_path,
            reference_id: reference_id.clone(),
            components,
        });
        images.push(image);
    }
    Ok((
        images,
        TargetArtifacts {
            index: TargetIndex { images: index },
            labels: TargetLabels { labels },
            provenance,
        },
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SynthSummary {
    pub config_hash: String,
    pub seed: u64,
    pub domains: Vec<SynthDomainSummary>,
    pub target_count: usize,
    pub target_labeled: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SynthDomainSummary {
    pub domain_id: DomainId,
    pub family: String,
    pub n_samples: usize,
    pub labels_inverted: bool,
}

/// Full synthesis: one dataset per configured domain plus the target set.
pub fn cmd_synth(config: &ExperimentConfig) -> Result<SynthSummary> {
    config.validate().map_err(|e| e.in_stage("synth"))?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let _lock = RunLock::acquire(&config.out_dir)?;
    run_synth(config).map_err(|e| e.in_stage("synth"))
}

fn run_synth(config: &ExperimentConfig) -> Result<SynthSummary> {
    let refs = load_references(&config.refs_dir)?;
    let (source_refs, target_refs) = match &config.target {
        TargetSpec::Mixture { .. } => {
            split_references(refs, config.source_ref_ratio, config.seed)?
        }
        TargetSpec::Directory { .. } => (refs, Vec::new()),
    };

    let mut domain_summaries = Vec::with_capacity(config.domains.len());
    for &domain in &config.domains {
        let mut dataset = generate_domain(&source_refs, domain, &config.levels, config.seed)?;
        let inverted = config.invert_label_domains.contains(&domain);
        if inverted {
            for sample in &mut dataset.samples {
                sample.quality = 100.0 - sample.quality;
            }
        }
        let dir = config.out_dir.join("sources").join(format!("domain_{}", domain.0));
        write_domain(&dataset, &config.levels, &dir)?;
        domain_summaries.push(SynthDomainSummary {
            domain_id: domain,
            family: dataset.name.clone(),
            n_samples: dataset.len(),
            labels_inverted: inverted,
        });
    }

    let target_dir = config.out_dir.join("target");
    std::fs::create_dir_all(target_dir.join("images"))
        .map_err(|e| Error::io(&target_dir, e))?;
    let (target_count, target_labeled) = match &config.target {
        TargetSpec::Mixture { recipe, count } => {
            let (images, artifacts) =
                synthesize_target(recipe, *count, &target_refs, config.seed)?;
            for (image, entry) in images.iter().zip(&artifacts.index.images) {
                image.save_png(&target_dir.join(&entry.image_path))?;
            }
            write_json(&target_dir.join("index.json"), &artifacts.index)?;
            write_json(&target_dir.join("labels.json"), &artifacts.labels)?;
            write_json(&target_dir.join("provenance.json"), &artifacts.provenance)?;
            (*count, true)
        }
        TargetSpec::Directory { dir } => {
            // absolute image paths; no labels, no provenance
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| Error::io(dir, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().map(|e| e == "png").unwrap_or(false))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(Error::validation(format!(
                    "no PNG images in target directory {}",
                    dir.display()
                )));
            }
            let index = TargetIndex {
                images: paths
                    .iter()
                    .map(|p| TargetImageEntry {
                        image_path: p.to_string_lossy().into_owned(),
                        reference_id: p
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_default(),
                    })
                    .collect(),
            };
            let n = index.images.len();
            write_json(&target_dir.join("index.json"), &index)?;
            (n, false)
        }
    };

    let summary = SynthSummary {
        config_hash: config.hash(),
        seed: config.seed,
        domains: domain_summaries,
        target_count,
        target_labeled,
    };
    write_json(&config.out_dir.join("synth.json"), &summary)?;
    write_run_record(&config.out_dir, "synth", config, &[config.seed])?;
    Ok(summary)
}

/// Single-family synthesis form: one manifest + images straight into `out`.
pub fn cmd_synth_single(
    refs_dir: &Path,
    family: DomainId,
    levels: &[u8],
    seed: u64,
    out: &Path,
) -> Result<()> {
    let refs = load_references(refs_dir).map_err(|e| e.in_stage("synth"))?;
    let dataset =
        generate_domain(&refs, family, levels, seed).map_err(|e| e.in_stage("synth"))?;
    write_domain(&dataset, levels, out).map_err(|e| e.in_stage("synth"))
}

/// Procedural reference corpus generator.
pub fn cmd_gen_refs(out: &Path, count: usize, size: usize, seed: u64) -> Result<()> {
    if count == 0 {
        return Err(Error::validation("count must be >= 1"));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for i in 0..count {
        let image = synthetic_reference(size, size, seed.wrapping_add(i as u64));
        image.save_png(&out.join(format!("ref{i:03}.png")))?;
    }
    Ok(())
}
