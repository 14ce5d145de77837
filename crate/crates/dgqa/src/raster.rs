//! Three-channel floating rasters in `[0,1]` and the reference metrics
//! (PSNR, pseudo-MOS) computed on them.

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// PSNR returned for a zero-MSE pair; also the upper cap of the dB scale.
pub const PSNR_CAP_DB: f64 = 100.0;

pub const MIN_DIMENSION: usize = 64;

/// An RGB raster with per-channel intensities in `[0,1]`, row-major,
/// channel-interleaved. The unit of all image processing in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(Error::validation(format!(
                "image must be at least {MIN_DIMENSION}x{MIN_DIMENSION}, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} samples, got {}",
                width * height * 3,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite pixel intensity"));
        }
        let mut img = RasterImage {
            width,
            height,
            data,
        };
        img.clamp_in_place();
        Ok(img)
    }

    pub fn constant(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height * 3])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * 3 + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * 3 + c] = v;
    }

    pub(crate) fn clamp_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Raw buffer access for operators; callers must re-clamp afterwards.
    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Rec. 601 luminance plane.
    pub fn luminance(&self) -> Vec<f32> {
        self.data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }

    /// Axis-aligned crop. The window must lie fully inside the image.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<RasterImage> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::validation("crop window outside image"));
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for y in y0..y0 + h {
            let row = &self.data[(y * self.width + x0) * 3..(y * self.width + x0 + w) * 3];
            data.extend_from_slice(row);
        }
        Ok(RasterImage {
            width: w,
            height: h,
            data,
        })
    }

    pub fn flip_horizontal(&self) -> RasterImage {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                for c in 0..3 {
                    out.set(x, y, c, self.get(self.width - 1 - x, y, c));
                }
            }
        }
        out
    }

    /// 2x downsampling by 2x2 block mean; odd trailing row/column dropped.
    pub fn downsample2(&self) -> RasterImage {
        let w = self.width / 2;
        let h = self.height / 2;
        let mut data = vec![0f32; w * h * 3];
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let s = self.get(2 * x, 2 * y, c)
                        + self.get(2 * x + 1, 2 * y, c)
                        + self.get(2 * x, 2 * y + 1, c)
                        + self.get(2 * x + 1, 2 * y + 1, c);
                    data[(y * w + x) * 3 + c] = s * 0.25;
                }
            }
        }
        RasterImage {
            width: w,
            height: h,
            data,
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        let buf =
            image::RgbImage::from_raw(self.width as u32, self.height as u32, bytes).expect("size");
        buf.save(path).map_err(|e| Error::Codec {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load_png(path: &Path) -> Result<RasterImage> {
        let img = image::open(path)
            .map_err(|e| Error::Codec {
                path: path.to_path_buf(),
                source: e,
            })?
            .into_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = img.into_raw().iter().map(|&b| b as f32 / 255.0).collect();
        RasterImage::new(w, h, data)
    }
}

fn check_same_size(a: &RasterImage, b: &RasterImage) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Mean squared error over all pixels and channels.
pub fn mse(reference: &RasterImage, distorted: &RasterImage) -> Result<f64> {
    check_same_size(reference, distorted)?;
    let n = reference.data.len() as f64;
    let sum: f64 = reference
        .data
        .iter()
        .zip(&distorted.data)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / n)
}

/// Peak signal-to-noise ratio in dB on `[0,1]` intensities. A zero-MSE pair
/// returns the cap of 100 dB.
///
/// ```
/// use dgqa::raster::{psnr, RasterImage};
/// let a = RasterImage::constant(64, 64, 0.5).unwrap();
/// let b = RasterImage::constant(64, 64, 0.6).unwrap();
/// let db = psnr(&a, &b).unwrap();
/// assert!((db - 20.0).abs() < 1e-3);
/// ```
pub fn psnr(reference: &RasterImage, distorted: &RasterImage) -> Result<f64> {
    let e = mse(reference, distorted)?;
    if e <= 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / e).log10()).min(PSNR_CAP_DB))
}

/// Reference-computed quality surrogate on a 0..100 scale:
/// `100 * clamp((PSNR - 15) / 35, 0, 1)`. Stands in for human opinion
/// scores; monotone in PSNR by construction.
pub fn pseudo_label(reference: &RasterImage, distorted: &RasterImage) -> Result<f64> {
    let db = psnr(reference, distorted)?;
    Ok(100.0 * ((db - 15.0) / 35.0).clamp(0.0, 1.0))
}

/// Procedural pristine reference: multi-scale smoothed noise plus a smooth
/// color gradient, normalized away from the clamp boundaries. Gives the
/// pipeline a deterministic stand-in for natural photographic content.
pub fn synthetic_reference(width: usize, height: usize, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let mut planes = vec![vec![0f32; n]; 3];

    // octaves of value noise, upsampled bilinearly
    for (octave, amp) in [(4usize, 0.5f32), (8, 0.3), (16, 0.15), (32, 0.08)] {
        let gw = octave + 1;
        let gh = octave + 1;
        let mut grids = vec![vec![0f32; gw * gh]; 3];
        let shared: Vec<f32> = (0..gw * gh).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for grid in &mut grids {
            for (g, s) in grid.iter_mut().zip(&shared) {
                // mostly shared luminance structure, a little chroma
                *g = s + 0.3 * rng.gen_range(-1.0f32..1.0);
            }
        }
        for y in 0..height {
            let fy = y as f32 / height as f32 * octave as f32;
            let y0 = fy.floor() as usize;
            let ty = fy - y0 as f32;
            for x in 0..width {
                let fx = x as f32 / width as f32 * octave as f32;
                let x0 = fx.floor() as usize;
                let tx = fx - x0 as f32;
                for c in 0..3 {
                    let g = &grids[c];
                    let v00 = g[y0 * gw + x0];
                    let v01 = g[y0 * gw + x0 + 1];
                    let v10 = g[(y0 + 1) * gw + x0];
                    let v11 = g[(y0 + 1) * gw + x0 + 1];
                    let v = v00 * (1.0 - tx) * (1.0 - ty)
                        + v01 * tx * (1.0 - ty)
                        + v10 * (1.0 - tx) * ty
                        + v11 * tx * ty;
                    planes[c][y * width + x] += amp * v;
                }
            }
        }
    }

    // fine-grain texture so local contrast never degenerates
    for plane in &mut planes {
        for v in plane.iter_mut() {
            *v += 0.04 * rng.gen_range(-1.0f32..1.0);
        }
    }

    let mut data = vec![0f32; n * 3];
    for c in 0..3 {
        let lo = planes[c].iter().cloned().fold(f32::INFINITY, f32::min);
        let hi = planes[c].iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let span = (hi - lo).max(1e-6);
        for i in 0..n {
            data[i * 3 + c] = 0.08 + 0.84 * (planes[c][i] - lo) / span;
        }
    }
    RasterImage {
        width,
        height,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_identical_is_capped() {
        let img = synthetic_reference(64, 64, 1);
        assert_eq!(psnr(&img, &img).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn psnr_unit_difference_is_zero_db() {
        let a = RasterImage::constant(64, 64, 0.0).unwrap();
        let b = RasterImage::constant(64, 64, 1.0).unwrap();
        assert!((psnr(&a, &b).unwrap() - 0.0).abs() < 1e-9);
    }

    #[test]
    fn psnr_uniform_tenth_is_twenty_db() {
        let a = RasterImage::constant(64, 64, 0.4).unwrap();
        let b = RasterImage::constant(64, 64, 0.5).unwrap();
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-3);
    }

    #[test]
    fn pseudo_label_identical_is_100() {
        let img = synthetic_reference(64, 64, 2);
        assert_eq!(pseudo_label(&img, &img).unwrap(), 100.0);
    }

    #[test]
    fn pseudo_label_at_15db_is_zero() {
        // uniform difference d gives PSNR = -20 log10(d); 15 dB at d = 10^(-0.75)
        let d = 10f32.powf(-0.75);
        let a = RasterImage::constant(64, 64, 0.1).unwrap();
        let b = RasterImage::constant(64, 64, 0.1 + d).unwrap();
        let label = pseudo_label(&a, &b).unwrap();
        assert!(label.abs() < 0.05, "label {label}");
    }

    #[test]
    fn pseudo_label_single_channel_offset() {
        // one channel offset by 0.1 everywhere: MSE = 0.01/3, PSNR ~ 24.77 dB
        let a = RasterImage::constant(64, 64, 0.5).unwrap();
        let mut b = a.clone();
        for y in 0..64 {
            for x in 0..64 {
                b.set(x, y, 0, 0.6);
            }
        }
        let expected_psnr = 10.0 * (3.0 / 0.01f64).log10();
        let got = psnr(&a, &b).unwrap();
        assert!((got - expected_psnr).abs() < 0.05, "psnr {got}");
        let label = pseudo_label(&a, &b).unwrap();
        let expected = 100.0 * (expected_psnr - 15.0) / 35.0;
        assert!((label - expected).abs() < 0.2, "label {label}");
    }

    #[test]
    fn pseudo_label_monotone_in_psnr() {
        let reference = RasterImage::constant(64, 64, 0.5).unwrap();
        let mut last = f64::INFINITY;
        for d in [0.01f32, 0.05, 0.1, 0.2, 0.3, 0.5] {
            let b = RasterImage::constant(64, 64, 0.5 + d).unwrap();
            let label = pseudo_label(&reference, &b).unwrap();
            assert!(label <= last);
            last = label;
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = RasterImage::constant(64, 64, 0.5).unwrap();
        let b = RasterImage::constant(64, 65, 0.5).unwrap();
        assert!(matches!(psnr(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn png_round_trip_preserves_quantized_values() {
        let dir = std::env::temp_dir().join("dgqa_raster_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.png");
        let img = synthetic_reference(64, 64, 3);
        img.save_png(&path).unwrap();
        let back = RasterImage::load_png(&path).unwrap();
        // quantization error at most half a step
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
        // a second save/load is exact
        let path2 = dir.join("rt2.png");
        back.save_png(&path2).unwrap();
        let back2 = RasterImage::load_png(&path2).unwrap();
        assert_eq!(back.data(), back2.data());
    }

    #[test]
    fn synthetic_reference_is_deterministic() {
        let a = synthetic_reference(96, 64, 7);
        let b = synthetic_reference(96, 64, 7);
        assert_eq!(a, b);
        let c = synthetic_reference(96, 64, 8);
        assert_ne!(a, c);
    }
}
