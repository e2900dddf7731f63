use rand::Rng;

use crate::deepdetect::{normalized_patch, predict_bin, RefineConfig};
use crate::net::{build_refinenet, CellTargets, GridSmoothing, LrSchedule, NetError, NetworkDef, TrainConfig, TrainLog, TrainSample};

use super::{gen_refine_patches, PatchSample, PatchStyle, UPSAMPLE};

/// Desk-scale RefineNet training recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineTrainConfig {
    pub width_multiplier: f64,
    pub train_patches: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f32,
    pub schedule: LrSchedule,
    /// Spread of the Gaussian target over neighbouring subpixel bins; `None`
    /// trains on one-hot bins.
    pub label_sigma: Option<f64>,
    pub style: PatchStyle,
}

impl Default for RefineTrainConfig {
    fn default() -> Self {
        Self {
            width_multiplier: 0.25,
            train_patches: 10_000,
            steps: 2_000,
            batch_size: 32,
            lr: 0.2,
            schedule: LrSchedule::Linear,
            label_sigma: Some(2.0),
            style: PatchStyle::default(),
        }
    }
}

pub fn patch_train_samples(patches: &[PatchSample], label_sigma: Option<f64>) -> Vec<TrainSample> {
    let grid = (crate::net::REFINE_BINS as f64).sqrt() as usize;
    patches
        .iter()
        .map(|p| {
            let mut t = CellTargets::filled(1, 1, Some(p.label));
            if let Some(sigma) = label_sigma {
                t = t.with_smoothing(GridSmoothing { side: grid, sigma });
            }
            TrainSample { input: normalized_patch(&p.image), targets: vec![t] }
        })
        .collect()
}

/// He-uniform encoder, zero-initialized classifier, SGD on freshly
/// generated patches.
pub fn train_refinenet<R: Rng + ?Sized>(cfg: &RefineTrainConfig, rng: &mut R) -> Result<(NetworkDef<f32>, TrainLog), NetError> {
    let patches = gen_refine_patches(cfg.train_patches, &cfg.style, rng);
    let samples = patch_train_samples(&patches, cfg.label_sigma);
    let mut net = build_refinenet(cfg.width_multiplier)?;
    net.init_he_uniform(rng);
    net.zero_output_layers();
    let tc = TrainConfig { schedule: cfg.schedule, ..TrainConfig::new(cfg.lr, cfg.steps, cfg.batch_size) };
    let log = crate::net::train(&mut net, &samples, &tc, rng)?;
    Ok((net, log))
}

/// Mean Euclidean distance, in subpixel units, between the RefineNet
/// estimate and the true corner. Patches with non-finite logits count at
/// the rounding estimate.
pub fn refine_error(net: &NetworkDef<f32>, patches: &[PatchSample]) -> Result<f64, crate::deepdetect::DeepError> {
    let cfg = RefineConfig::default();
    let mut sum = 0.0;
    for p in patches {
        let (x, y) = match predict_bin(net, &p.image)? {
            Some(bin) => cfg.bin_offset(bin),
            None => (p.corner.0.round(), p.corner.1.round()),
        };
        sum += (x - p.corner.0).hypot(y - p.corner.1) * UPSAMPLE as f64;
    }
    Ok(sum / patches.len().max(1) as f64)
}
