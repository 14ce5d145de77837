//! On-disk artifact formats: dataset manifests, the unlabeled target index,
//! the separate target label file, provenance records, and the feature
//! cache.
//!
//! `image_path` fields are always relative to the file that contains them,
//! so a run directory can be moved as a whole.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distortion::{DatasetSample, DomainDataset, DomainId};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_DIM};
use crate::raster::RasterImage;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestSample {
    pub image_path: String,
    pub reference_id: String,
    /// Pseudo-MOS on 0..100, higher is better.
    pub quality: f64,
}

/// One JSON document per source-domain dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub domain_id: DomainId,
    pub samples: Vec<ManifestSample>,
}

impl DatasetManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Load the manifest and its images into an in-memory dataset.
    pub fn load_dataset(path: &Path) -> Result<DomainDataset> {
        let manifest = Self::load(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut samples = Vec::with_capacity(manifest.samples.len());
        for s in &manifest.samples {
            let image = RasterImage::load_png(&base.join(&s.image_path))?;
            samples.push(DatasetSample {
                image,
                quality: s.quality,
                reference_id: s.reference_id.clone(),
            });
        }
        Ok(DomainDataset {
            domain: manifest.domain_id,
            name: manifest.name,
            samples,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetImageEntry {
    pub image_path: String,
    pub reference_id: String,
}

/// The unlabeled target set: image paths only. This is the only target file
/// the unsupervised pipeline path reads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetIndex {
    pub images: Vec<TargetImageEntry>,
}

impl TargetIndex {
    pub fn load_images(&self, base: &Path) -> Result<Vec<RasterImage>> {
        self.images
            .iter()
            .map(|e| RasterImage::load_png(&base.join(&e.image_path)))
            .collect()
    }
}

/// Target quality labels, stored apart from the index so the unsupervised
/// path never opens them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetLabels {
    /// image_path -> pseudo-MOS.
    pub labels: BTreeMap<String, f64>,
}

/// Which recipe component(s) produced one target image.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub image_path: String,
    pub reference_id: String,
    pub components: Vec<(DomainId, u8)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureCacheEntry {
    pub sample_id: String,
    pub values: Vec<f64>,
}

pub const FEATURE_CACHE_VERSION: u32 = 1;

/// Textual feature table: `(sample_id, 36 reals)` per entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureCache {
    pub version: u32,
    pub entries: Vec<FeatureCacheEntry>,
}

impl FeatureCache {
    pub fn new() -> Self {
        FeatureCache {
            version: FEATURE_CACHE_VERSION,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, sample_id: String, features: &FeatureVector) {
        self.entries.push(FeatureCacheEntry {
            sample_id,
            values: features.values().to_vec(),
        });
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cache: FeatureCache = read_json(path)?;
        if cache.version != FEATURE_CACHE_VERSION {
            return Err(Error::validation(format!(
                "unsupported feature cache version {}",
                cache.version
            )));
        }
        if cache.entries.iter().any(|e| e.values.len() != FEATURE_DIM) {
            return Err(Error::validation("feature cache entry of wrong dimension"));
        }
        Ok(cache)
    }
}

impl Default for FeatureCache {
    fn default() -> Self {
        Self::new()
    }
}

/// Exclusive run-directory lock; removed on drop. Guards against two
/// concurrent writers in one run directory.
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(".dgqa.lock");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(RunLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::validation(
                format!("run directory is locked by another run: {}", path.display()),
            )),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
