use rand::{Rng, RngExt};
use rand_distr::{Distribution, Normal};

use super::{GrayImage, ImageError};

/// 2D correlation (the kernel is not flipped) with replicate borders.
/// `kernel` is a row-major `k`x`k` slice with odd `k`.
pub fn convolve2d(img: &GrayImage, kernel: &[f32]) -> Result<GrayImage, ImageError> {
    let k = (kernel.len() as f64).sqrt().round() as usize;
    if k * k != kernel.len() || k % 2 == 0 {
        return Err(ImageError::BadKernel(kernel.len()));
    }
    let r = (k / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let mut out = GrayImage::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f32;
            for ky in 0..k {
                for kx in 0..k {
                    let sx = x as isize + kx as isize - r;
                    let sy = y as isize + ky as isize - r;
                    acc += kernel[ky * k + kx] * img.get_clamped(sx, sy);
                }
            }
            out.set(x, y, acc);
        }
    }
    Ok(out)
}

/// Separable horizontal then vertical filtering with a symmetric 1D kernel.
fn separable(img: &GrayImage, taps: &[f32], horizontal: bool, vertical: bool) -> GrayImage {
    let r = (taps.len() / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let mut cur = img.clone();
    if horizontal {
        let src = cur.clone();
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0f32;
                for (i, t) in taps.iter().enumerate() {
                    acc += t * src.get_clamped(x as isize + i as isize - r, y as isize);
                }
                cur.set(x, y, acc);
            }
        }
    }
    if vertical {
        let src = cur.clone();
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0f32;
                for (i, t) in taps.iter().enumerate() {
                    acc += t * src.get_clamped(x as isize, y as isize + i as isize - r);
                }
                cur.set(x, y, acc);
            }
        }
    }
    cur
}

/// Horizontal box blur of width `k`. Odd widths use `k` equal taps; even
/// widths use `k + 1` taps with half-weight ends so the kernel stays
/// centered. `k <= 1` returns the input unchanged.
pub fn apply_motion_blur(img: &GrayImage, k: usize) -> GrayImage {
    if k <= 1 {
        return img.clone();
    }
    let taps = if k % 2 == 1 {
        vec![1.0 / k as f32; k]
    } else {
        let mut t = vec![1.0 / k as f32; k + 1];
        t[0] *= 0.5;
        t[k] *= 0.5;
        t
    };
    separable(img, &taps, true, false)
}

/// Normalized Gaussian taps truncated at 3 sigma.
pub fn gaussian_kernel_1d(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(0.0) as usize;
    let taps: Vec<f64> =
        (0..=2 * radius).map(|i| (-((i as f64 - radius as f64).powi(2)) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| (t / sum) as f32).collect()
}

pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    separable(img, &gaussian_kernel_1d(sigma), true, true)
}

/// Per-pixel multiply, clamped to `[0, 255]`.
pub fn apply_brightness(img: &GrayImage, factor: f64) -> GrayImage {
    let f = factor as f32;
    img.map(|v| (v * f).clamp(0.0, 255.0))
}

pub fn add_gaussian_noise<R: Rng + ?Sized>(img: &GrayImage, sigma: f64, rng: &mut R) -> GrayImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut out = img.clone();
    for v in out.pixels_mut() {
        *v = (*v + normal.sample(rng) as f32).clamp(0.0, 255.0);
    }
    out
}

/// Salt-and-pepper noise: each pixel becomes 0 or 255 with probability
/// `density / 2` each.
pub fn add_speckle<R: Rng + ?Sized>(img: &GrayImage, density: f64, rng: &mut R) -> GrayImage {
    let density = density.clamp(0.0, 1.0);
    if density == 0.0 {
        return img.clone();
    }
    let mut out = img.clone();
    for v in out.pixels_mut() {
        let u: f64 = rng.random();
        if u < density * 0.5 {
            *v = 0.0;
        } else if u < density {
            *v = 255.0;
        }
    }
    out
}

/// Multiplicative elliptical gain field with Gaussian falloff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowParams {
    pub center: (f64, f64),
    /// Standard deviations along the ellipse axes, in pixels.
    pub axes: (f64, f64),
    pub angle: f64,
    /// Peak gain at the center: < 1 casts a shadow, > 1 a spotlight.
    pub gain: f64,
}

impl ShadowParams {
    pub fn identity() -> Self {
        Self { center: (0.0, 0.0), axes: (1.0, 1.0), angle: 0.0, gain: 1.0 }
    }

    /// Shadow with gain in [0.2, 0.8] or spotlight with gain in [1.2, 2.0],
    /// equally likely, centered anywhere in the frame.
    pub fn sample<R: Rng + ?Sized>(width: usize, height: usize, rng: &mut R) -> Self {
        let (w, h) = (width as f64, height as f64);
        let gain = if rng.random_bool(0.5) { rng.random_range(0.2..=0.8) } else { rng.random_range(1.2..=2.0) };
        let scale = w.min(h);
        Self {
            center: (rng.random_range(0.0..w), rng.random_range(0.0..h)),
            axes: (rng.random_range(0.15 * scale..0.6 * scale), rng.random_range(0.15 * scale..0.6 * scale)),
            angle: rng.random_range(0.0..std::f64::consts::PI),
            gain,
        }
    }

    pub fn gain_at(&self, x: f64, y: f64) -> f64 {
        let (c, s) = (self.angle.cos(), self.angle.sin());
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        let a = (c * dx + s * dy) / self.axes.0;
        let b = (-s * dx + c * dy) / self.axes.1;
        1.0 + (self.gain - 1.0) * (-0.5 * (a * a + b * b)).exp()
    }
}

pub fn apply_shadow_spotlight(img: &GrayImage, params: &ShadowParams) -> GrayImage {
    if params.gain == 1.0 {
        return img.clone();
    }
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        (img.get(x, y) as f64 * params.gain_at(x as f64, y as f64)).clamp(0.0, 255.0) as f32
    })
}
