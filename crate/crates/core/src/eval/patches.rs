use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, RngExt};

use crate::image::{add_gaussian_noise, gaussian_blur, write_pgm, GrayImage, Range};
pub use crate::deepdetect::normalized_patch;
use crate::net::{REFINE_BINS, REFINE_PATCH};

use super::EvalError;

/// Side of the central region that holds the corner.
pub const CENTRAL: usize = 8;
/// Subpixel bins per pixel along each axis.
pub const UPSAMPLE: usize = 8;
const GRID: usize = CENTRAL * UPSAMPLE;

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSample {
    pub image: GrayImage,
    /// True corner in patch pixel coordinates, inside `[8, 16)` on both axes.
    pub corner: (f64, f64),
    /// `64 * row + col` of the subpixel bin holding the corner.
    pub label: usize,
}

/// Appearance randomization of synthetic corner patches.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchStyle {
    /// Smallest angle between the two edges through the corner, degrees.
    pub min_edge_angle_deg: f64,
    pub dark: Range,
    pub light: Range,
    pub noise_probability: f64,
    pub noise_sigma: Range,
    pub blur_probability: f64,
    pub blur_sigma: Range,
    /// Supersampling factor per axis for antialiasing.
    pub supersample: usize,
}

impl Default for PatchStyle {
    fn default() -> Self {
        Self {
            min_edge_angle_deg: 35.0,
            dark: Range::new(0.0, 90.0),
            light: Range::new(140.0, 255.0),
            noise_probability: 0.5,
            noise_sigma: Range::new(1.0, 8.0),
            blur_probability: 0.5,
            blur_sigma: Range::new(0.5, 1.5),
            supersample: 8,
        }
    }
}

impl PatchStyle {
    /// Noise- and blur-free patches.
    pub fn clean() -> Self {
        Self { noise_probability: 0.0, blur_probability: 0.0, ..Self::default() }
    }
}

/// Subpixel bin of a patch coordinate inside the central region.
pub fn patch_label(x: f64, y: f64) -> usize {
    let bin = |v: f64| (((v - CENTRAL as f64) * UPSAMPLE as f64).floor().max(0.0) as usize).min(GRID - 1);
    GRID * bin(y) + bin(x)
}

/// Centre of a subpixel bin in patch coordinates.
pub fn label_center(label: usize) -> (f64, f64) {
    let (row, col) = (label / GRID, label % GRID);
    let at = |i: usize| CENTRAL as f64 + (i as f64 + 0.5) / UPSAMPLE as f64;
    (at(col), at(row))
}

/// Two-tone X-junction with edges along `angle_a` and `angle_b` (radians),
/// area-sampled on a `supersample`² grid per pixel. Pixel centres sit at
/// integer coordinates.
pub fn render_saddle(
    size: usize,
    corner: (f64, f64),
    angle_a: f64,
    angle_b: f64,
    dark: f32,
    light: f32,
    supersample: usize,
) -> GrayImage {
    let ss = supersample.max(1);
    let (na, nb) = ((-angle_a.sin(), angle_a.cos()), (-angle_b.sin(), angle_b.cos()));
    let offsets: Vec<f64> = (0..ss).map(|k| (k as f64 + 0.5) / ss as f64 - 0.5).collect();
    GrayImage::from_fn(size, size, |x, y| {
        let mut light_hits = 0usize;
        for &oy in &offsets {
            for &ox in &offsets {
                let (dx, dy) = (x as f64 + ox - corner.0, y as f64 + oy - corner.1);
                let sa = na.0 * dx + na.1 * dy;
                let sb = nb.0 * dx + nb.1 * dy;
                if sa * sb > 0.0 {
                    light_hits += 1;
                }
            }
        }
        let f = light_hits as f32 / (ss * ss) as f32;
        dark + (light - dark) * f
    })
}

pub fn gen_refine_patch<R: Rng + ?Sized>(style: &PatchStyle, rng: &mut R) -> PatchSample {
    let lo = CENTRAL as f64;
    let corner = (rng.random_range(lo..lo + CENTRAL as f64), rng.random_range(lo..lo + CENTRAL as f64));
    let angle_a = rng.random_range(0.0..PI);
    let min_gap = style.min_edge_angle_deg.to_radians().clamp(0.0, PI / 2.0);
    let angle_b = angle_a + rng.random_range(min_gap..PI - min_gap);
    let (mut dark, mut light) = (style.dark.sample(rng) as f32, style.light.sample(rng) as f32);
    if rng.random_bool(0.5) {
        std::mem::swap(&mut dark, &mut light);
    }
    let mut image = render_saddle(REFINE_PATCH, corner, angle_a, angle_b, dark, light, style.supersample);
    if rng.random_bool(style.blur_probability.clamp(0.0, 1.0)) {
        image = gaussian_blur(&image, style.blur_sigma.sample(rng));
    }
    if rng.random_bool(style.noise_probability.clamp(0.0, 1.0)) {
        image = add_gaussian_noise(&image, style.noise_sigma.sample(rng), rng);
    }
    PatchSample { image, corner, label: patch_label(corner.0, corner.1) }
}

pub fn gen_refine_patches<R: Rng + ?Sized>(n: usize, style: &PatchStyle, rng: &mut R) -> Vec<PatchSample> {
    (0..n).map(|_| gen_refine_patch(style, rng)).collect()
}

/// Mean Euclidean distance, in subpixel units, between each corner and the
/// centre of the pixel it rounds to.
pub fn rounding_baseline(samples: &[PatchSample]) -> f64 {
    let err = |s: &PatchSample| {
        let (x, y) = s.corner;
        ((x - x.round()).hypot(y - y.round())) * UPSAMPLE as f64
    };
    samples.iter().map(err).sum::<f64>() / samples.len().max(1) as f64
}

/// Writes `patch_00000.pgm`, ... and `labels.csv` (`filename,x,y,bin`).
pub fn write_patch_dataset(samples: &[PatchSample], dir: impl AsRef<Path>) -> Result<(), EvalError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| EvalError::io(dir, e))?;
    let mut csv = String::from("filename,x,y,bin\n");
    for (i, s) in samples.iter().enumerate() {
        let name = format!("patch_{i:05}.pgm");
        write_pgm(&s.image, dir.join(&name))?;
        csv.push_str(&format!("{name},{},{},{}\n", super::fmt6(s.corner.0), super::fmt6(s.corner.1), s.label));
    }
    let path = dir.join("labels.csv");
    std::fs::write(&path, csv).map_err(|e| EvalError::io(&path, e))
}

const _: () = assert!(GRID * GRID == REFINE_BINS);
