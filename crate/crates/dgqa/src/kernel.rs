//! Small convolution helpers on single planes. All borders use reflect
//! (symmetric) padding.

/// Mirror an out-of-range index back into `0..n` (symmetric padding:
/// `-1 -> 0`, `-2 -> 1`, `n -> n-1`).
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Normalized 1-D Gaussian taps with radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f32> = (-radius..=radius)
        .map(|i| (-(i as f32).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f32 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable convolution of a `w x h` plane with the same 1-D kernel along
/// both axes.
pub fn convolve_separable(plane: &[f32], w: usize, h: usize, taps: &[f32]) -> Vec<f32> {
    let radius = (taps.len() / 2) as isize;
    let mut tmp = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0f32;
            for (k, &t) in taps.iter().enumerate() {
                let sx = reflect_index(x as isize + k as isize - radius, w);
                acc += t * plane[y * w + sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0f32;
            for (k, &t) in taps.iter().enumerate() {
                let sy = reflect_index(y as isize + k as isize - radius, h);
                acc += t * tmp[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Dense 2-D convolution with an arbitrary kernel given as
/// `(dx, dy, weight)` taps.
pub fn convolve_taps(plane: &[f32], w: usize, h: usize, taps: &[(isize, isize, f32)]) -> Vec<f32> {
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0f32;
            for &(dx, dy, t) in taps {
                let sx = reflect_index(x as isize + dx, w);
                let sy = reflect_index(y as isize + dy, h);
                acc += t * plane[sy * w + sx];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Uniform disk kernel of the given radius as taps.
pub fn disk_taps(radius: usize) -> Vec<(isize, isize, f32)> {
    let r = radius as isize;
    let r2 = (radius as f32 + 0.5).powi(2);
    let mut taps = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if (dx * dx + dy * dy) as f32 <= r2 {
                taps.push((dx, dy, 1.0));
            }
        }
    }
    let n = taps.len() as f32;
    for t in &mut taps {
        t.2 = 1.0 / n;
    }
    taps
}

/// Diagonal motion line of the given length (odd) as taps.
pub fn motion_taps(length: usize) -> Vec<(isize, isize, f32)> {
    let half = (length / 2) as isize;
    let weight = 1.0 / length as f32;
    (-half..=half).map(|i| (i, i, weight)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_is_symmetric_padding() {
        assert_eq!(reflect_index(-1, 5), 0);
        assert_eq!(reflect_index(-2, 5), 1);
        assert_eq!(reflect_index(5, 5), 4);
        assert_eq!(reflect_index(6, 5), 3);
        assert_eq!(reflect_index(2, 5), 2);
    }

    #[test]
    fn gaussian_kernel_normalized() {
        for sigma in [0.5f32, 1.0, 2.4, 5.0] {
            let k = gaussian_kernel(sigma);
            let sum: f32 = k.iter().sum();
            assert!((sum - 1.0).abs() < 1e-5);
            assert_eq!(k.len() % 2, 1);
        }
    }

    #[test]
    fn blur_preserves_constant_plane() {
        let plane = vec![0.37f32; 16 * 16];
        let out = convolve_separable(&plane, 16, 16, &gaussian_kernel(2.0));
        for v in out {
            assert!((v - 0.37).abs() < 1e-5);
        }
    }

    #[test]
    fn disk_taps_sum_to_one() {
        for r in 1..8 {
            let taps = disk_taps(r);
            let sum: f32 = taps.iter().map(|t| t.2).sum();
            assert!((sum - 1.0).abs() < 1e-5);
        }
    }
}
