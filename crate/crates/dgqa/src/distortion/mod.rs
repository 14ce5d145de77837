//! Synthetic distortion engine: a registry of severity-controlled operators
//! and the generation of per-family source-domain datasets with
//! pseudo-quality labels.

pub mod ops;
pub mod params;

use std::fmt;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{pseudo_label, RasterImage};

/// Index of a distortion family in the operator registry. One source domain
/// corresponds to one family.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct DomainId(pub u8);

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A distortion family plus severity level and RNG seed. Applying the same
/// spec to the same image is bit-deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub family: DomainId,
    pub level: u8,
    pub seed: u64,
}

impl DistortionSpec {
    pub fn new(family: DomainId, level: u8, seed: u64) -> Self {
        DistortionSpec {
            family,
            level,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilyDescriptor {
    pub id: DomainId,
    pub name: &'static str,
    /// Whether the operator draws from the spec's RNG.
    pub stochastic: bool,
}

/// The default registry. Indices follow the KADID numbering convention for
/// the families implemented here; unlisted indices are extension points.
pub fn registry_default() -> Vec<FamilyDescriptor> {
    const F: fn(u8, &'static str, bool) -> FamilyDescriptor = |id, name, stochastic| {
        FamilyDescriptor {
            id: DomainId(id),
            name,
            stochastic,
        }
    };
    vec![
        F(1, "gaussian_blur", false),
        F(2, "lens_blur", false),
        F(3, "motion_blur", false),
        F(9, "jpeg2000_approx", false),
        F(10, "jpeg_approx", false),
        F(11, "white_noise", true),
        F(13, "impulse_noise", true),
        F(14, "multiplicative_noise", true),
        F(16, "brighten", false),
        F(17, "darken", false),
        F(18, "mean_shift", false),
        F(19, "jitter", true),
        F(22, "pixelate", false),
        F(24, "high_sharpen", false),
        F(25, "contrast_change", false),
    ]
}

pub fn lookup_family(id: DomainId) -> Result<FamilyDescriptor> {
    registry_default()
        .into_iter()
        .find(|f| f.id == id)
        .ok_or(Error::UnknownFamily(id.0))
}

pub fn family_name(id: DomainId) -> String {
    lookup_family(id)
        .map(|f| f.name.to_string())
        .unwrap_or_else(|_| format!("unknown_{}", id.0))
}

/// Apply one registered distortion at the given severity. Same-size output;
/// pure function of `(image, spec)`.
pub fn apply_distortion(image: &RasterImage, spec: &DistortionSpec) -> Result<RasterImage> {
    let family = lookup_family(spec.family)?;
    if !(1..=5).contains(&spec.level) {
        return Err(Error::LevelOutOfRange(spec.level));
    }
    let level = (spec.level - 1) as usize;
    // decorrelate streams across (family, level) for a shared base seed
    let stream = spec
        .seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(((spec.family.0 as u64) << 8) | spec.level as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let out = match family.name {
        "gaussian_blur" => ops::gaussian_blur(image, level),
        "lens_blur" => ops::lens_blur(image, level),
        "motion_blur" => ops::motion_blur(image, level),
        "jpeg2000_approx" => ops::jpeg2000_approx(image, level),
        "jpeg_approx" => ops::jpeg_approx(image, level),
        "white_noise" => ops::white_noise(image, level, &mut rng),
        "impulse_noise" => ops::impulse_noise(image, level, &mut rng),
        "multiplicative_noise" => ops::multiplicative_noise(image, level, &mut rng),
        "brighten" => ops::brighten(image, level),
        "darken" => ops::darken(image, level),
        "mean_shift" => ops::mean_shift(image, level),
        "jitter" => ops::jitter(image, level, &mut rng),
        "pixelate" => ops::pixelate(image, level),
        "high_sharpen" => ops::high_sharpen(image, level),
        "contrast_change" => ops::contrast_change(image, level),
        _ => unreachable!("registry names are exhaustive"),
    };
    debug_assert_eq!(out.width(), image.width());
    debug_assert_eq!(out.height(), image.height());
    Ok(out)
}

/// One labeled sample of a source domain.
#[derive(Debug, Clone)]
pub struct DatasetSample {
    pub image: RasterImage,
    /// Pseudo-MOS on 0..100, higher is better.
    pub quality: f64,
    pub reference_id: String,
}

/// All samples of one distortion family, the unit of selection and training.
#[derive(Debug, Clone)]
pub struct DomainDataset {
    pub domain: DomainId,
    pub name: String,
    pub samples: Vec<DatasetSample>,
}

impl DomainDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Synthesize one source domain: one sample per (reference, level), labeled
/// with the pseudo-MOS of the distorted image against its reference.
/// Per-sample seeds derive from the base seed and the sample index.
pub fn generate_domain(
    references: &[(String, RasterImage)],
    family: DomainId,
    levels: &[u8],
    seed: u64,
) -> Result<DomainDataset> {
    if references.is_empty() {
        return Err(Error::validation("empty reference list"));
    }
    if levels.is_empty() {
        return Err(Error::validation("empty level set"));
    }
    let descriptor = lookup_family(family)?;
    let mut samples = Vec::with_capacity(references.len() * levels.len());
    for (ref_idx, (reference_id, reference)) in references.iter().enumerate() {
        for (lvl_idx, &level) in levels.iter().enumerate() {
            let sample_index = (ref_idx * levels.len() + lvl_idx) as u64;
            let spec = DistortionSpec::new(family, level, seed ^ sample_index);
            let distorted = apply_distortion(reference, &spec)?;
            let quality = pseudo_label(reference, &distorted)?;
            samples.push(DatasetSample {
                image: distorted,
                quality,
                reference_id: reference_id.clone(),
            });
        }
    }
    Ok(DomainDataset {
        domain: family,
        name: descriptor.name.to_string(),
        samples,
    })
}
