use rayon::prelude::*;

use crate::board::BoardSpec;
use crate::classical::{detect_classical, ChArUcoDetection, ClassicalParams};
use crate::deepdetect::{detect_deep, DeepConfig};
use crate::image::{apply_brightness, apply_motion_blur, GrayImage};
use crate::net::NetworkDef;

use super::{corner_accuracy, fmt6, SyntheticFrame, ACCURACY_RADIUS};

/// Anything that turns a frame into labelled corners.
pub trait Detector: Sync {
    fn name(&self) -> &str;
    fn detect(&self, img: &GrayImage) -> ChArUcoDetection;
}

pub struct ClassicalDetector {
    pub spec: BoardSpec,
    pub params: ClassicalParams,
}

impl Detector for ClassicalDetector {
    fn name(&self) -> &str {
        "classical"
    }

    fn detect(&self, img: &GrayImage) -> ChArUcoDetection {
        detect_classical(img, &self.spec, &self.params)
    }
}

pub struct DeepDetector {
    pub name: String,
    pub charuconet: NetworkDef<f32>,
    pub refinenet: Option<NetworkDef<f32>>,
    pub config: DeepConfig,
}

impl Detector for DeepDetector {
    fn name(&self) -> &str {
        &self.name
    }

    /// Failures count as empty detections.
    fn detect(&self, img: &GrayImage) -> ChArUcoDetection {
        detect_deep(img, &self.charuconet, self.refinenet.as_ref(), &self.config)
            .unwrap_or_else(|_| ChArUcoDetection::empty(crate::classical::DetectionSource::Deep))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepEffect {
    /// Horizontal box blur of width `k`.
    MotionBlur,
    /// Intensities scaled by `0.6^k`.
    Lighting,
}

impl SweepEffect {
    pub fn name(&self) -> &'static str {
        match self {
            SweepEffect::MotionBlur => "motion_blur",
            SweepEffect::Lighting => "lighting",
        }
    }

    /// The degraded frame at `level`, quantized to 8-bit values like a
    /// captured image.
    pub fn apply(&self, img: &GrayImage, level: usize) -> GrayImage {
        let out = match self {
            SweepEffect::MotionBlur => apply_motion_blur(img, level),
            SweepEffect::Lighting => apply_brightness(img, 0.6f64.powi(level as i32)),
        };
        out.map(|v| v.round().clamp(0.0, 255.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub effect: SweepEffect,
    pub levels: Vec<usize>,
    pub methods: Vec<String>,
    /// `accuracy[m][l]`: mean over images for method `m` at level `l`.
    pub accuracy: Vec<Vec<f64>>,
    /// `per_image[m][l][i]`.
    pub per_image: Vec<Vec<Vec<f64>>>,
}

impl SweepResult {
    pub fn method_accuracy(&self, name: &str) -> Option<&[f64]> {
        self.methods.iter().position(|m| m == name).map(|i| self.accuracy[i].as_slice())
    }

    /// `effect,level,method,accuracy` rows, method-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("effect,level,method,accuracy\n");
        for (m, name) in self.methods.iter().enumerate() {
            for (l, level) in self.levels.iter().enumerate() {
                out.push_str(&format!("{},{level},{name},{}\n", self.effect.name(), fmt6(self.accuracy[m][l])));
            }
        }
        out
    }
}

/// Applies the effect at levels `0..=k_max` to every frame and averages the
/// corner accuracy of each detector.
pub fn sweep(effect: SweepEffect, frames: &[SyntheticFrame], detectors: &[&dyn Detector], k_max: usize) -> SweepResult {
    let levels: Vec<usize> = (0..=k_max).collect();
    let jobs: Vec<(usize, usize)> = (0..levels.len()).flat_map(|l| (0..frames.len()).map(move |i| (l, i))).collect();
    let scores: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(l, i)| {
            let img = effect.apply(&frames[i].image, levels[l]);
            detectors.iter().map(|d| corner_accuracy(&d.detect(&img), &frames[i].gt, ACCURACY_RADIUS)).collect()
        })
        .collect();
    let mut per_image = vec![vec![vec![0.0; frames.len()]; levels.len()]; detectors.len()];
    for (&(l, i), s) in jobs.iter().zip(&scores) {
        for (m, &v) in s.iter().enumerate() {
            per_image[m][l][i] = v;
        }
    }
    let accuracy = per_image
        .iter()
        .map(|by_level| by_level.iter().map(|v| v.iter().sum::<f64>() / v.len().max(1) as f64).collect())
        .collect();
    SweepResult { effect, levels, methods: detectors.iter().map(|d| d.name().to_string()).collect(), accuracy, per_image }
}

pub fn sweep_motion_blur(frames: &[SyntheticFrame], detectors: &[&dyn Detector], k_max: usize) -> SweepResult {
    sweep(SweepEffect::MotionBlur, frames, detectors, k_max)
}

pub fn sweep_lighting(frames: &[SyntheticFrame], detectors: &[&dyn Detector], k_max: usize) -> SweepResult {
    sweep(SweepEffect::Lighting, frames, detectors, k_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(&'static str);
    impl Detector for Fixed {
        fn name(&self) -> &str {
            self.0
        }
        fn detect(&self, _: &GrayImage) -> ChArUcoDetection {
            ChArUcoDetection::empty(crate::classical::DetectionSource::Deep)
        }
    }

    #[test]
    fn csv_shape() {
        let frames = vec![];
        let (a, b) = (Fixed("a"), Fixed("b"));
        let r = sweep(SweepEffect::Lighting, &frames, &[&a, &b], 10);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 23);
        assert_eq!(csv.lines().nth(1), Some("lighting,0,a,0"));
    }
}
