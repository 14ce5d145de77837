//! Per-level severity parameters for every registered distortion family.
//!
//! These five-entry tables are part of the external contract: changing an
//! entry changes every synthesized dataset. Levels 1..=5 index the tables
//! left to right, mildest first.

/// #1 Gaussian blur: kernel standard deviation.
pub const GAUSSIAN_BLUR_SIGMA: [f32; 5] = [0.8, 1.6, 2.4, 3.6, 5.0];

/// #2 Lens blur: disk kernel radius in pixels.
pub const LENS_BLUR_RADIUS: [usize; 5] = [1, 2, 3, 5, 7];

/// #3 Motion blur: diagonal line kernel length in pixels.
pub const MOTION_BLUR_LENGTH: [usize; 5] = [3, 5, 7, 11, 15];

/// #9 JPEG2000 approximation: pyramid smoothing sigma and detail
/// quantization step.
pub const JPEG2000_SIGMA: [f32; 5] = [1.2, 1.8, 2.6, 3.6, 5.0];
pub const JPEG2000_QUANT: [f32; 5] = [0.04, 0.08, 0.12, 0.18, 0.26];

/// #10 JPEG approximation: DCT quantizer scale.
pub const JPEG_QUANT_SCALE: [f32; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];

/// #11 White noise: additive Gaussian sigma on [0,1] intensities.
pub const WHITE_NOISE_SIGMA: [f32; 5] = [0.02, 0.05, 0.09, 0.14, 0.22];

/// #13 Impulse noise: fraction of pixels replaced.
pub const IMPULSE_FRACTION: [f64; 5] = [0.01, 0.03, 0.07, 0.12, 0.20];

/// #14 Multiplicative noise: relative Gaussian sigma.
pub const MULT_NOISE_SIGMA: [f32; 5] = [0.05, 0.10, 0.18, 0.28, 0.42];

/// #16 Brighten / #17 darken: gamma-curve strength g; brighten maps
/// x -> x^(1/(1+g)), darken maps x -> x^(1+g).
pub const GAMMA_STRENGTH: [f32; 5] = [0.3, 0.6, 1.0, 1.5, 2.2];

/// #18 Mean shift: additive intensity offset.
pub const MEAN_SHIFT_OFFSET: [f32; 5] = [0.08, 0.15, 0.22, 0.30, 0.38];

/// #19 Jitter: maximum random pixel displacement in pixels.
pub const JITTER_RADIUS: [i32; 5] = [1, 2, 3, 4, 5];

/// #22 Pixelate: block edge length in pixels.
pub const PIXELATE_BLOCK: [usize; 5] = [2, 3, 4, 6, 8];

/// #24 High sharpen: unsharp-mask amount.
pub const SHARPEN_AMOUNT: [f32; 5] = [0.7, 1.5, 2.5, 4.0, 6.0];

/// #25 Contrast change: contrast scale around mid-gray (smaller = flatter).
pub const CONTRAST_SCALE: [f32; 5] = [0.82, 0.66, 0.52, 0.40, 0.28];
