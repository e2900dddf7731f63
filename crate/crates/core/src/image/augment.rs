use nalgebra::Matrix3;
use rand::seq::SliceRandom;
use rand::{Rng, RngExt};

use super::{
    add_gaussian_noise, add_speckle, apply_brightness, apply_motion_blur, apply_shadow_spotlight, gaussian_blur,
    warp_homography, GrayImage, Homography, ShadowParams,
};
use crate::IdPoint;

/// Closed interval used for effect magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.hi <= self.lo {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Effect {
    GaussianNoise,
    MotionBlur,
    GaussianBlur,
    Speckle,
    Brightness,
    ShadowSpotlight,
    Homography,
}

impl Effect {
    pub const ALL: [Effect; 7] = [
        Effect::GaussianNoise,
        Effect::MotionBlur,
        Effect::GaussianBlur,
        Effect::Speckle,
        Effect::Brightness,
        Effect::ShadowSpotlight,
        Effect::Homography,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Effect::GaussianNoise => "gaussian_noise",
            Effect::MotionBlur => "motion_blur",
            Effect::GaussianBlur => "gaussian_blur",
            Effect::Speckle => "speckle",
            Effect::Brightness => "brightness",
            Effect::ShadowSpotlight => "shadow_spotlight",
            Effect::Homography => "homography",
        }
    }
}

/// Per-effect application probabilities and magnitude ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub gaussian_noise: f64,
    pub motion_blur: f64,
    pub gaussian_blur: f64,
    pub speckle: f64,
    pub brightness: f64,
    pub shadow_spotlight: f64,
    pub homography: f64,
    pub noise_sigma: Range,
    pub motion_kernel: Range,
    pub blur_sigma: Range,
    pub speckle_density: Range,
    pub brightness_factor: Range,
    /// Maximum displacement of each image corner, as a fraction of the
    /// image dimension.
    pub homography_jitter: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self::positives()
    }
}

impl AugmentConfig {
    /// Probabilities used for frames that show the target board.
    pub fn positives() -> Self {
        Self {
            gaussian_noise: 0.5,
            motion_blur: 0.5,
            gaussian_blur: 0.25,
            speckle: 0.5,
            brightness: 0.5,
            shadow_spotlight: 0.5,
            homography: 1.0,
            noise_sigma: Range::new(2.0, 12.0),
            motion_kernel: Range::new(3.0, 10.0),
            blur_sigma: Range::new(0.5, 2.0),
            speckle_density: Range::new(0.001, 0.02),
            brightness_factor: Range::new(0.05, 1.5),
            homography_jitter: 0.2,
            seed: 0,
        }
    }

    /// Same as [`positives`](Self::positives) without the geometric warp.
    pub fn negatives() -> Self {
        Self { homography: 0.0, ..Self::positives() }
    }

    /// Every probability zero.
    pub fn none() -> Self {
        Self {
            gaussian_noise: 0.0,
            motion_blur: 0.0,
            gaussian_blur: 0.0,
            speckle: 0.0,
            brightness: 0.0,
            shadow_spotlight: 0.0,
            homography: 0.0,
            ..Self::positives()
        }
    }

    pub fn probability(&self, effect: Effect) -> f64 {
        match effect {
            Effect::GaussianNoise => self.gaussian_noise,
            Effect::MotionBlur => self.motion_blur,
            Effect::GaussianBlur => self.gaussian_blur,
            Effect::Speckle => self.speckle,
            Effect::Brightness => self.brightness,
            Effect::ShadowSpotlight => self.shadow_spotlight,
            Effect::Homography => self.homography,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for e in Effect::ALL {
            let p = self.probability(e);
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("probability of {} must be in [0, 1], got {p}", e.name()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Augmented {
    pub image: GrayImage,
    /// Corners that remain inside the frame, in input order.
    pub corners: Vec<IdPoint>,
    /// Effects in the order they were applied.
    pub applied: Vec<Effect>,
    /// The sampled warp when the homography effect ran.
    pub homography: Option<Homography>,
}

/// Random perspective warp that moves each image corner by up to
/// `jitter` of the image size. Samples with a near-singular matrix, or that
/// push every given corner (or the image center when none are given) out of
/// the frame, are redrawn; after 100 failures the identity is returned.
pub fn sample_homography<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    jitter: f64,
    corners: &[IdPoint],
    rng: &mut R,
) -> Homography {
    let (w, h) = (width as f64, height as f64);
    let src = [(0.0, 0.0), (w - 1.0, 0.0), (w - 1.0, h - 1.0), (0.0, h - 1.0)];
    for _ in 0..100 {
        let dst: Vec<(f64, f64)> = src
            .iter()
            .map(|&(x, y)| {
                (x + rng.random_range(-jitter..=jitter) * w, y + rng.random_range(-jitter..=jitter) * h)
            })
            .collect();
        let Ok(hm) = Homography::from_correspondences(&src, &dst) else { continue };
        if hm.determinant().abs() < 1e-6 {
            continue;
        }
        let probe: Vec<(f64, f64)> = if corners.is_empty() {
            vec![(0.5 * (w - 1.0), 0.5 * (h - 1.0))]
        } else {
            corners.iter().map(|c| (c.x, c.y)).collect()
        };
        let any_inside =
            probe.iter().any(|&(x, y)| hm.apply(x, y).is_some_and(|(u, v)| inside(u, v, width, height)));
        if any_inside {
            return hm;
        }
    }
    Homography::new(Matrix3::identity()).expect("identity")
}

fn inside(x: f64, y: f64, width: usize, height: usize) -> bool {
    x >= -0.5 && y >= -0.5 && x < width as f64 - 0.5 && y < height as f64 - 0.5
}

/// Apply each effect independently with its configured probability, in a
/// freshly shuffled order. Corner coordinates follow the geometric warp and
/// those leaving the frame are dropped.
pub fn augment<R: Rng + ?Sized>(
    img: &GrayImage,
    corners: &[IdPoint],
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Augmented {
    let mut applied: Vec<Effect> = Effect::ALL.into_iter().filter(|&e| rng.random_bool(cfg.probability(e))).collect();
    applied.shuffle(rng);

    let (w, h) = (img.width(), img.height());
    let mut image = img.clone();
    let mut pts: Vec<IdPoint> = corners.to_vec();
    let mut homography = None;
    for &effect in &applied {
        image = match effect {
            Effect::GaussianNoise => add_gaussian_noise(&image, cfg.noise_sigma.sample(rng), rng),
            Effect::MotionBlur => apply_motion_blur(&image, cfg.motion_kernel.sample(rng).round() as usize),
            Effect::GaussianBlur => gaussian_blur(&image, cfg.blur_sigma.sample(rng)),
            Effect::Speckle => add_speckle(&image, cfg.speckle_density.sample(rng), rng),
            Effect::Brightness => apply_brightness(&image, cfg.brightness_factor.sample(rng)),
            Effect::ShadowSpotlight => apply_shadow_spotlight(&image, &ShadowParams::sample(w, h, rng)),
            Effect::Homography => {
                let hm = sample_homography(w, h, cfg.homography_jitter, &pts, rng);
                pts = pts
                    .iter()
                    .filter_map(|p| hm.apply(p.x, p.y).map(|(x, y)| IdPoint { x, y, ..*p }))
                    .collect();
                homography = Some(hm);
                warp_homography(&image, &hm, w, h).expect("sampled homography is invertible")
            }
        };
    }
    pts.retain(|p| inside(p.x, p.y, w, h));
    Augmented { image, corners: pts, applied, homography }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_image() -> (GrayImage, Vec<IdPoint>) {
        let img = GrayImage::from_fn(48, 40, |x, y| if (x / 8 + y / 8) % 2 == 0 { 30.0 } else { 220.0 });
        let corners = (0..4).map(|i| IdPoint::new(i, 8.0 + 8.0 * i as f64 - 0.5, 15.5)).collect();
        (img, corners)
    }

    #[test]
    fn zero_probabilities_identity() {
        let (img, corners) = test_image();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = augment(&img, &corners, &AugmentConfig::none(), &mut rng);
        assert_eq!(out.image, img);
        assert_eq!(out.corners, corners);
        assert!(out.applied.is_empty());
    }

    #[test]
    fn homography_only_maps_corners_exactly() {
        let (img, corners) = test_image();
        let cfg = AugmentConfig { homography: 1.0, ..AugmentConfig::none() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let out = augment(&img, &corners, &cfg, &mut rng);
        let hm = out.homography.expect("homography applied");
        let expect: Vec<IdPoint> = corners
            .iter()
            .filter_map(|c| hm.apply(c.x, c.y).map(|(x, y)| IdPoint { x, y, ..*c }))
            .filter(|c| inside(c.x, c.y, img.width(), img.height()))
            .collect();
        assert_eq!(out.corners, expect);
        assert_eq!(out.applied, vec![Effect::Homography]);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let (img, corners) = test_image();
        let cfg = AugmentConfig::positives();
        let a = augment(&img, &corners, &cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let b = augment(&img, &corners, &cfg, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.image, b.image);
        assert_eq!(a.corners, b.corners);
        assert_eq!(a.applied, b.applied);
    }

    #[test]
    fn order_is_shuffled() {
        let (img, corners) = test_image();
        let cfg = AugmentConfig {
            gaussian_noise: 1.0,
            motion_blur: 1.0,
            brightness: 1.0,
            homography: 0.0,
            ..AugmentConfig::none()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let orders: std::collections::HashSet<Vec<Effect>> =
            (0..40).map(|_| augment(&img, &corners, &cfg, &mut rng).applied).collect();
        assert!(orders.len() > 1);
    }

    #[test]
    fn table_probabilities_validate() {
        assert!(AugmentConfig::positives().validate().is_ok());
        assert!(AugmentConfig { speckle: 1.5, ..AugmentConfig::none() }.validate().is_err());
        assert_eq!(AugmentConfig::negatives().homography, 0.0);
    }
}
