//! The distortion operators. Each takes a pristine raster and a level index
//! (0..5) and returns a same-size distorted raster; stochastic operators
//! additionally draw from a caller-seeded RNG.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::params::*;
use crate::kernel::{
    convolve_separable, convolve_taps, disk_taps, gaussian_kernel, motion_taps, reflect_index,
};
use crate::raster::RasterImage;

fn planes(img: &RasterImage) -> [Vec<f32>; 3] {
    let n = img.pixel_count();
    let mut out = [vec![0f32; n], vec![0f32; n], vec![0f32; n]];
    for (i, px) in img.data().chunks_exact(3).enumerate() {
        out[0][i] = px[0];
        out[1][i] = px[1];
        out[2][i] = px[2];
    }
    out
}

fn from_planes(w: usize, h: usize, p: [Vec<f32>; 3]) -> RasterImage {
    let mut data = vec![0f32; w * h * 3];
    for i in 0..w * h {
        data[i * 3] = p[0][i];
        data[i * 3 + 1] = p[1][i];
        data[i * 3 + 2] = p[2][i];
    }
    RasterImage::new(w, h, data).expect("same-size construction")
}

fn map_pixels(img: &RasterImage, f: impl Fn(f32) -> f32) -> RasterImage {
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = f(*v);
    }
    out.clamp_in_place();
    out
}

pub fn gaussian_blur(img: &RasterImage, level: usize) -> RasterImage {
    let taps = gaussian_kernel(GAUSSIAN_BLUR_SIGMA[level]);
    let (w, h) = (img.width(), img.height());
    let p = planes(img).map(|pl| convolve_separable(&pl, w, h, &taps));
    from_planes(w, h, p)
}

pub fn lens_blur(img: &RasterImage, level: usize) -> RasterImage {
    let taps = disk_taps(LENS_BLUR_RADIUS[level]);
    let (w, h) = (img.width(), img.height());
    let p = planes(img).map(|pl| convolve_taps(&pl, w, h, &taps));
    from_planes(w, h, p)
}

pub fn motion_blur(img: &RasterImage, level: usize) -> RasterImage {
    let taps = motion_taps(MOTION_BLUR_LENGTH[level]);
    let (w, h) = (img.width(), img.height());
    let p = planes(img).map(|pl| convolve_taps(&pl, w, h, &taps));
    from_planes(w, h, p)
}

/// Multi-scale smooth-plus-quantize stand-in for wavelet compression: the
/// low-pass band passes through while the detail band is coarsely
/// quantized, producing the characteristic smearing and banding.
pub fn jpeg2000_approx(img: &RasterImage, level: usize) -> RasterImage {
    let taps = gaussian_kernel(JPEG2000_SIGMA[level]);
    let q = JPEG2000_QUANT[level];
    let (w, h) = (img.width(), img.height());
    let p = planes(img).map(|pl| {
        let base = convolve_separable(&pl, w, h, &taps);
        pl.iter()
            .zip(&base)
            .map(|(&v, &b)| {
                let detail = v - b;
                b + (detail / q).round() * q
            })
            .collect()
    });
    from_planes(w, h, p)
}

fn dct_matrix() -> [[f32; 8]; 8] {
    let mut m = [[0f32; 8]; 8];
    for (u, row) in m.iter_mut().enumerate() {
        let c = if u == 0 {
            (1.0f32 / 8.0).sqrt()
        } else {
            (2.0f32 / 8.0).sqrt()
        };
        for (n, v) in row.iter_mut().enumerate() {
            *v = c * (std::f32::consts::PI * (2.0 * n as f32 + 1.0) * u as f32 / 16.0).cos();
        }
    }
    m
}

/// 8x8 block DCT with uniform quantization weighted by spatial frequency.
pub fn jpeg_approx(img: &RasterImage, level: usize) -> RasterImage {
    let scale = JPEG_QUANT_SCALE[level];
    let dct = dct_matrix();
    let (w, h) = (img.width(), img.height());
    let p = planes(img).map(|pl| {
        let mut out = vec![0f32; w * h];
        let mut block = [[0f32; 8]; 8];
        let mut coef = [[0f32; 8]; 8];
        for by in 0..h.div_ceil(8) {
            for bx in 0..w.div_ceil(8) {
                for (j, row) in block.iter_mut().enumerate() {
                    for (i, v) in row.iter_mut().enumerate() {
                        let sx = reflect_index((bx * 8 + i) as isize, w);
                        let sy = reflect_index((by * 8 + j) as isize, h);
                        *v = pl[sy * w + sx];
                    }
                }
                // forward 2-D DCT
                for (u, crow) in coef.iter_mut().enumerate() {
                    for (v, cv) in crow.iter_mut().enumerate() {
                        let mut acc = 0f32;
                        for (j, brow) in block.iter().enumerate() {
                            for (i, &b) in brow.iter().enumerate() {
                                acc += dct[u][j] * dct[v][i] * b;
                            }
                        }
                        *cv = acc;
                    }
                }
                // quantize, heavier at high frequency
                for (u, crow) in coef.iter_mut().enumerate() {
                    for (v, cv) in crow.iter_mut().enumerate() {
                        let step = scale * (1.0 + u as f32 + v as f32) / 128.0;
                        *cv = (*cv / step).round() * step;
                    }
                }
                // inverse
                for j in 0..8 {
                    let y = by * 8 + j;
                    if y >= h {
                        continue;
                    }
                    for i in 0..8 {
                        let x = bx * 8 + i;
                        if x >= w {
                            continue;
                        }
                        let mut acc = 0f32;
                        for (u, crow) in coef.iter().enumerate() {
                            for (v, &cv) in crow.iter().enumerate() {
                                acc += dct[u][j] * dct[v][i] * cv;
                            }
                        }
                        out[y * w + x] = acc;
                    }
                }
            }
        }
        out
    });
    from_planes(w, h, p)
}

pub fn white_noise(img: &RasterImage, level: usize, rng: &mut ChaCha8Rng) -> RasterImage {
    let normal = Normal::new(0.0f32, WHITE_NOISE_SIGMA[level]).expect("sigma > 0");
    let mut out = img.clone();
    for v in out.data_mut() {
        *v += normal.sample(rng);
    }
    out.clamp_in_place();
    out
}

/// Replaces exactly `floor(p * pixel_count)` pixels with random salt/pepper
/// values in all three channels.
pub fn impulse_noise(img: &RasterImage, level: usize, rng: &mut ChaCha8Rng) -> RasterImage {
    let n = img.pixel_count();
    let count = (IMPULSE_FRACTION[level] * n as f64).floor() as usize;
    let mut out = img.clone();
    let picks = sample(rng, n, count);
    let mut extremes = Vec::with_capacity(count * 3);
    for _ in 0..count * 3 {
        extremes.push(if rng.gen_bool(0.5) { 1.0f32 } else { 0.0 });
    }
    let data = out.data_mut();
    for (k, idx) in picks.iter().enumerate() {
        for c in 0..3 {
            data[idx * 3 + c] = extremes[k * 3 + c];
        }
    }
    out
}

pub fn multiplicative_noise(img: &RasterImage, level: usize, rng: &mut ChaCha8Rng) -> RasterImage {
    let normal = Normal::new(0.0f32, MULT_NOISE_SIGMA[level]).expect("sigma > 0");
    let mut out = img.clone();
    for v in out.data_mut() {
        *v *= 1.0 + normal.sample(rng);
    }
    out.clamp_in_place();
    out
}

pub fn brighten(img: &RasterImage, level: usize) -> RasterImage {
    let gamma = 1.0 / (1.0 + GAMMA_STRENGTH[level]);
    map_pixels(img, |v| v.max(0.0).powf(gamma))
}

pub fn darken(img: &RasterImage, level: usize) -> RasterImage {
    let gamma = 1.0 + GAMMA_STRENGTH[level];
    map_pixels(img, |v| v.max(0.0).powf(gamma))
}

pub fn mean_shift(img: &RasterImage, level: usize) -> RasterImage {
    let offset = MEAN_SHIFT_OFFSET[level];
    map_pixels(img, |v| v + offset)
}

/// Each output pixel takes the value of a uniformly displaced source pixel.
pub fn jitter(img: &RasterImage, level: usize, rng: &mut ChaCha8Rng) -> RasterImage {
    let r = JITTER_RADIUS[level];
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let dx = rng.gen_range(-r..=r) as isize;
            let dy = rng.gen_range(-r..=r) as isize;
            let sx = reflect_index(x as isize + dx, w);
            let sy = reflect_index(y as isize + dy, h);
            for c in 0..3 {
                out.set(x, y, c, img.get(sx, sy, c));
            }
        }
    }
    out
}

pub fn pixelate(img: &RasterImage, level: usize) -> RasterImage {
    let b = PIXELATE_BLOCK[level];
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for by in 0..h.div_ceil(b) {
        for bx in 0..w.div_ceil(b) {
            let x1 = (bx * b + b).min(w);
            let y1 = (by * b + b).min(h);
            let count = ((x1 - bx * b) * (y1 - by * b)) as f32;
            for c in 0..3 {
                let mut acc = 0f32;
                for y in by * b..y1 {
                    for x in bx * b..x1 {
                        acc += img.get(x, y, c);
                    }
                }
                let mean = acc / count;
                for y in by * b..y1 {
                    for x in bx * b..x1 {
                        out.set(x, y, c, mean);
                    }
                }
            }
        }
    }
    out
}

/// Unsharp masking pushed past the point of visible overshoot.
pub fn high_sharpen(img: &RasterImage, level: usize) -> RasterImage {
    let amount = SHARPEN_AMOUNT[level];
    let taps = gaussian_kernel(1.5);
    let (w, h) = (img.width(), img.height());
    let p = planes(img).map(|pl| {
        let base = convolve_separable(&pl, w, h, &taps);
        pl.iter()
            .zip(&base)
            .map(|(&v, &b)| v + amount * (v - b))
            .collect()
    });
    from_planes(w, h, p)
}

pub fn contrast_change(img: &RasterImage, level: usize) -> RasterImage {
    let c = CONTRAST_SCALE[level];
    map_pixels(img, |v| 0.5 + c * (v - 0.5))
}
