use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::board::ObjectPoints;
use crate::classical::ChArUcoDetection;
use crate::pose::{reprojection_error, solve_pnp_ransac, CameraIntrinsics, RansacParams};
use crate::IdPoint;

use super::{fmt6, EvalError};

/// Correctness radius of a detected corner, pixels.
pub const ACCURACY_RADIUS: f64 = 3.0;

/// Fraction of the ground-truth corners detected with the right id within
/// `radius` pixels.
pub fn corner_accuracy(det: &ChArUcoDetection, gt: &[IdPoint], radius: f64) -> f64 {
    if gt.is_empty() {
        return 0.0;
    }
    let hits = gt
        .iter()
        .filter(|g| det.get(g.id).is_some_and(|c| c.point().distance(g) <= radius))
        .count();
    hits as f64 / gt.len() as f64
}

/// Distance of each detected corner to its ground truth, by id; corners
/// without ground truth are skipped.
pub fn corner_errors(det: &ChArUcoDetection, gt: &[IdPoint]) -> Vec<(usize, f64)> {
    det.corners
        .iter()
        .filter_map(|c| gt.iter().find(|g| g.id == c.id).map(|g| (c.id, c.point().distance(g))))
        .collect()
}

/// Fraction of frames whose pose error falls below each threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
    /// Mean reprojection error of each frame; `None` when no pose was found.
    pub errors: Vec<Option<f64>>,
}

/// RANSAC pose for every detection, scored with the mean reprojection error
/// over all its corners. Frames without a pose fail at every threshold.
/// Frame `i` uses its own generator seeded with `seed + i`.
pub fn pose_accuracy_curve(
    detections: &[ChArUcoDetection],
    obj: &ObjectPoints,
    k: &CameraIntrinsics,
    thresholds: &[f64],
    ransac: &RansacParams,
    seed: u64,
) -> PoseCurve {
    let errors: Vec<Option<f64>> = detections
        .par_iter()
        .enumerate()
        .map(|(i, det)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let pose = solve_pnp_ransac(obj, &det.points(), k, ransac, &mut rng).ok()?;
            reprojection_error(k, &pose, obj, det).ok()
        })
        .collect();
    let n = detections.len().max(1) as f64;
    let fractions = thresholds
        .iter()
        .map(|&t| errors.iter().filter(|e| e.is_some_and(|e| e < t)).count() as f64 / n)
        .collect();
    PoseCurve { thresholds: thresholds.to_vec(), fractions, errors }
}

/// `threshold_px,method,fraction` rows, method by method.
pub fn curve_csv(curves: &[(&str, &PoseCurve)]) -> String {
    let mut out = String::from("threshold_px,method,fraction\n");
    for (method, c) in curves {
        for (t, f) in c.thresholds.iter().zip(&c.fractions) {
            out.push_str(&format!("{},{method},{}\n", fmt6(*t), fmt6(*f)));
        }
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<(), EvalError> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| EvalError::io(path, e))
}
