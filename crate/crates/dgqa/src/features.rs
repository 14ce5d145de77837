//! Quality-aware image features: mean-subtracted contrast-normalized (MSCN)
//! coefficients, asymmetric generalized Gaussian (AGGD) fits, and the
//! 36-dimensional per-image feature vector used by both trainable heads.

use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::kernel::{convolve_separable, gaussian_kernel};
use crate::raster::RasterImage;

/// Dimension of every feature vector: 18 statistics at 2 scales.
pub const FEATURE_DIM: usize = 36;

const MSCN_WINDOW_SIGMA: f32 = 7.0 / 6.0;
const MSCN_C: f32 = 1.0 / 255.0;

/// Fixed-length, all-finite feature vector for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch(format!(
                "feature vector length {} != {FEATURE_DIM}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite feature component"));
        }
        Ok(FeatureVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Patch sampling configuration: training uses one random crop per image,
/// testing averages over several.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PatchPolicy {
    pub patch_size: usize,
    pub train_patches_per_image: usize,
    pub test_patches_per_image: usize,
    pub seed: u64,
}

impl Default for PatchPolicy {
    fn default() -> Self {
        PatchPolicy {
            patch_size: 64,
            train_patches_per_image: 1,
            test_patches_per_image: 5,
            seed: 0,
        }
    }
}

impl PatchPolicy {
    pub fn with_seed(self, seed: u64) -> Self {
        PatchPolicy { seed, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchMode {
    Train,
    Test,
}

/// MSCN coefficient field of the luminance plane: `(I - mu) / (sigma + C)`
/// with a 7x7 Gaussian window.
pub fn mscn(image: &RasterImage) -> Result<Vec<f64>> {
    mscn_plane(&image.luminance(), image.width(), image.height())
}

fn mscn_plane(gray: &[f32], w: usize, h: usize) -> Result<Vec<f64>> {
    if w < 7 || h < 7 {
        return Err(Error::validation("image smaller than MSCN window"));
    }
    // 7x7 window: radius 3 regardless of the 3-sigma default
    let mut taps = gaussian_kernel(MSCN_WINDOW_SIGMA);
    if taps.len() > 7 {
        let trim = (taps.len() - 7) / 2;
        taps = taps[trim..taps.len() - trim].to_vec();
        let s: f32 = taps.iter().sum();
        for t in &mut taps {
            *t /= s;
        }
    }
    let mu = convolve_separable(gray, w, h, &taps);
    let sq: Vec<f32> = gray.iter().map(|v| v * v).collect();
    let musq = convolve_separable(&sq, w, h, &taps);
    Ok(gray
        .iter()
        .zip(mu.iter().zip(&musq))
        .map(|(&v, (&m, &m2))| {
            let var = (m2 - m * m).max(0.0);
            ((v - m) / (var.sqrt() + MSCN_C)) as f64
        })
        .collect())
}

/// AGGD parameters from a moment-matching fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggdFit {
    pub alpha: f64,
    pub sigma_left: f64,
    pub sigma_right: f64,
}

impl AggdFit {
    /// Mean-offset term of the fitted density.
    pub fn eta(&self) -> f64 {
        (self.sigma_right - self.sigma_left) * gamma(2.0 / self.alpha) / gamma(1.0 / self.alpha)
    }

    pub fn mean_sigma(&self) -> f64 {
        0.5 * (self.sigma_left + self.sigma_right)
    }
}

fn aggd_ratio_grid() -> &'static (Vec<f64>, Vec<f64>) {
    static GRID: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GRID.get_or_init(|| {
        let alphas: Vec<f64> = (0..=9800).map(|i| 0.2 + i as f64 * 0.001).collect();
        let ratios = alphas
            .iter()
            .map(|&a| gamma(2.0 / a).powi(2) / (gamma(1.0 / a) * gamma(3.0 / a)))
            .collect();
        (alphas, ratios)
    })
}

/// Fit an asymmetric generalized Gaussian by the standard moment-ratio
/// lookup. Degenerate (all-zero) input falls back to `(1, 0, 0)`.
pub fn aggd_fit(samples: &[f64]) -> Result<AggdFit> {
    if samples.len() < 16 {
        return Err(Error::validation("aggd_fit needs at least 16 samples"));
    }
    let n = samples.len() as f64;
    let mean_abs = samples.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mean_sq = samples.iter().map(|v| v * v).sum::<f64>() / n;
    if mean_sq <= 1e-24 {
        return Ok(AggdFit {
            alpha: 1.0,
            sigma_left: 0.0,
            sigma_right: 0.0,
        });
    }

    let (mut nl, mut nr) = (0usize, 0usize);
    let (mut sl, mut sr) = (0f64, 0f64);
    for &v in samples {
        if v < 0.0 {
            sl += v * v;
            nl += 1;
        } else if v > 0.0 {
            sr += v * v;
            nr += 1;
        }
    }
    let sigma_left = if nl > 0 { (sl / nl as f64).sqrt() } else { 0.0 };
    let sigma_right = if nr > 0 { (sr / nr as f64).sqrt() } else { 0.0 };
    let gamma_hat = if sigma_right > 1e-12 {
        sigma_left / sigma_right
    } else {
        1.0
    };
    let r_hat = mean_abs * mean_abs / mean_sq;
    let r_big = r_hat * (gamma_hat.powi(3) + 1.0) * (gamma_hat + 1.0)
        / (gamma_hat * gamma_hat + 1.0).powi(2);

    let (alphas, ratios) = aggd_ratio_grid();
    let mut best = 0usize;
    let mut best_err = f64::INFINITY;
    for (i, &rho) in ratios.iter().enumerate() {
        let err = (rho - r_big) * (rho - r_big);
        if err < best_err {
            best_err = err;
            best = i;
        }
    }
    Ok(AggdFit {
        alpha: alphas[best],
        sigma_left,
        sigma_right,
    })
}

fn products(field: &[f64], w: usize, h: usize) -> [Vec<f64>; 4] {
    let mut horizontal = Vec::with_capacity((w - 1) * h);
    let mut vertical = Vec::with_capacity(w * (h - 1));
    let mut diag_main = Vec::with_capacity((w - 1) * (h - 1));
    let mut diag_anti = Vec::with_capacity((w - 1) * (h - 1));
    for y in 0..h {
        for x in 0..w {
            let v = field[y * w + x];
            if x + 1 < w {
                horizontal.push(v * field[y * w + x + 1]);
            }
            if y + 1 < h {
                vertical.push(v * field[(y + 1) * w + x]);
            }
            if x + 1 < w && y + 1 < h {
                diag_main.push(v * field[(y + 1) * w + x + 1]);
            }
            if x >= 1 && y + 1 < h {
                diag_anti.push(v * field[(y + 1) * w + x - 1]);
            }
        }
    }
    [horizontal, vertical, diag_main, diag_anti]
}

fn scale_features(image: &RasterImage, out: &mut Vec<f64>) -> Result<()> {
    let field = mscn(image)?;
    let sym = aggd_fit(&field)?;
    out.push(sym.alpha);
    out.push(sym.mean_sigma());
    for prod in products(&field, image.width(), image.height()) {
        let fit = aggd_fit(&prod)?;
        out.push(fit.alpha);
        out.push(fit.eta());
        out.push(fit.sigma_left);
        out.push(fit.sigma_right);
    }
    Ok(())
}

/// 36-dimensional NSS feature vector: 18 statistics at full resolution and
/// 18 at 2x downsampling.
pub fn extract_features(image: &RasterImage) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(FEATURE_DIM);
    scale_features(image, &mut values)?;
    scale_features(&image.downsample2(), &mut values)?;
    FeatureVector::new(values)
}

/// Random patch crops, fully inside the image; training mode additionally
/// flips each patch horizontally with probability 1/2.
pub fn sample_patches(
    image: &RasterImage,
    policy: &PatchPolicy,
    mode: PatchMode,
) -> Result<Vec<RasterImage>> {
    let size = policy.patch_size;
    if size > image.width() || size > image.height() {
        return Err(Error::validation(format!(
            "patch size {size} exceeds image {}x{}",
            image.width(),
            image.height()
        )));
    }
    let count = match mode {
        PatchMode::Train => policy.train_patches_per_image,
        PatchMode::Test => policy.test_patches_per_image,
    };
    if count == 0 {
        return Err(Error::validation("patch count must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let max_x = image.width() - size;
    let max_y = image.height() - size;
    let mut patches = Vec::with_capacity(count);
    for _ in 0..count {
        let x0 = rng.gen_range(0..=max_x);
        let y0 = rng.gen_range(0..=max_y);
        let mut patch = image.crop(x0, y0, size, size)?;
        if mode == PatchMode::Train && rng.gen_bool(0.5) {
            patch = patch.flip_horizontal();
        }
        patches.push(patch);
    }
    Ok(patches)
}

/// Per-dimension standardization statistics, fitted on a training pool and
/// frozen into the model checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(dim: usize) -> Self {
        NormStats {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn fit(features: &[FeatureVector]) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::validation("cannot fit NormStats on empty pool"));
        }
        let dim = features[0].values().len();
        let n = features.len() as f64;
        let mut mean = vec![0.0; dim];
        for f in features {
            for (m, v) in mean.iter_mut().zip(f.values()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for f in features {
            for ((s, v), m) in var.iter_mut().zip(f.values()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt().max(1e-8)).collect();
        Ok(NormStats { mean, std })
    }

    pub fn apply(&self, f: &FeatureVector) -> Vec<f64> {
        f.values()
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}
