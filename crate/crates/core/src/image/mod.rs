//! Grayscale raster container and the pixel-level operations built on it.
//!
//! Pixels are stored as `f32` in `[0, 255]`; quantization to 8 bits only
//! happens in [`write_pgm`].

mod augment;
mod filter;
mod pgm;
mod warp;

pub use augment::{augment, sample_homography, AugmentConfig, Augmented, Effect, Range};
pub use filter::{
    add_gaussian_noise, add_speckle, apply_brightness, apply_motion_blur, apply_shadow_spotlight,
    convolve2d, gaussian_blur, gaussian_kernel_1d, ShadowParams,
};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
pub use warp::{warp_homography, Homography};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions must be >= 1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("pixel buffer has {found} values, expected {expected}")]
    BufferSize { found: usize, expected: usize },
    #[error("unsupported PGM variant {0:?}, only binary P5 is accepted")]
    UnsupportedPgm(String),
    #[error("bad magic: not a PGM file")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    BadHeader(String),
    #[error("unsupported PGM maxval {0}, only 255 is accepted")]
    UnsupportedMaxval(u32),
    #[error("truncated PGM payload: got {found} bytes, expected {expected}")]
    Truncated { found: usize, expected: usize },
    #[error("kernel must be square with odd side, got {0} values")]
    BadKernel(usize),
    #[error("singular homography (|det| = {0:e})")]
    SingularHomography(f64),
    #[error("homography estimation needs at least 4 non-degenerate correspondences, got {0}")]
    DegenerateCorrespondences(usize),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Row-major grayscale image with float pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage { width, height });
        }
        if pixels.len() != width * height {
            return Err(ImageError::BufferSize { found: pixels.len(), expected: width * height });
        }
        Ok(Self { width, height, pixels })
    }

    /// Panics on zero dimensions.
    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be >= 1");
        Self { width, height, pixels: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut img = Self::filled(width, height, 0.0);
        for y in 0..height {
            for x in 0..width {
                img.pixels[y * width + x] = f(x, y);
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f32] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.pixels[y * self.width + x] = v;
    }

    /// Replicate-border access.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[yc * self.width + xc]
    }

    /// Bilinear sample; pixels outside the raster read as `outside`.
    pub fn bilinear(&self, x: f64, y: f64, outside: f32) -> f32 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = (x - x0) as f32;
        let fy = (y - y0) as f32;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let px = |xx: isize, yy: isize| -> f32 {
            if xx < 0 || yy < 0 || xx >= self.width as isize || yy >= self.height as isize {
                outside
            } else {
                self.pixels[yy as usize * self.width + xx as usize]
            }
        };
        if fx == 0.0 && fy == 0.0 {
            return px(xi, yi);
        }
        let top = px(xi, yi) * (1.0 - fx) + px(xi + 1, yi) * fx;
        let bottom = px(xi, yi + 1) * (1.0 - fx) + px(xi + 1, yi + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Bilinear sample with replicate border.
    pub fn bilinear_clamped(&self, x: f64, y: f64) -> f32 {
        let xc = x.clamp(0.0, (self.width - 1) as f64);
        let yc = y.clamp(0.0, (self.height - 1) as f64);
        self.bilinear(xc, yc, 0.0)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self { width: self.width, height: self.height, pixels: self.pixels.iter().map(|&v| f(v)).collect() }
    }

    pub fn clamp_to_u8_range(&mut self) {
        for v in &mut self.pixels {
            *v = v.clamp(0.0, 255.0);
        }
    }

    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&v| v as f64).sum::<f64>() / self.pixels.len() as f64
    }

    /// Copy a `w`x`h` window whose top-left is at (`x0`, `y0`), replicating
    /// border pixels where the window leaves the image.
    pub fn crop_replicate(&self, x0: isize, y0: isize, w: usize, h: usize) -> Self {
        Self::from_fn(w, h, |x, y| self.get_clamped(x0 + x as isize, y0 + y as isize))
    }
}
