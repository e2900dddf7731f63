//! Metrics, robustness sweeps, pose-accuracy curves, synthetic training
//! data and CSV reports.

mod frames;
mod metrics;
mod patches;
mod refine;
mod sweep;

pub use frames::{
    cell_targets, default_camera, foreign_dictionary, gen_test_frames, gen_training_frames, random_view_pose, render_frame,
    render_view, view_homography, FrameKind, FrameMix, SyntheticFrame, TrainingFrame, ViewStyle,
};
pub use metrics::{corner_accuracy, corner_errors, curve_csv, pose_accuracy_curve, write_text, PoseCurve, ACCURACY_RADIUS};
pub use refine::{patch_train_samples, refine_error, train_refinenet, RefineTrainConfig};
pub use sweep::{
    sweep, sweep_lighting, sweep_motion_blur, ClassicalDetector, DeepDetector, Detector, SweepEffect, SweepResult,
};

pub use patches::{
    gen_refine_patch, gen_refine_patches, label_center, normalized_patch, patch_label, render_saddle, rounding_baseline,
    write_patch_dataset, PatchSample, PatchStyle, CENTRAL, UPSAMPLE,
};

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] crate::image::ImageError),
    #[error(transparent)]
    Board(#[from] crate::board::BoardError),
    #[error("{0}")]
    Invalid(String),
}

impl EvalError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}

/// Formats a float with 6 significant digits, like C's `%.6g`.
pub fn fmt6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt6(0.0), "0");
        assert_eq!(fmt6(1.0), "1");
        assert_eq!(fmt6(0.125), "0.125");
        assert_eq!(fmt6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt6(123456.7), "123457");
        assert_eq!(fmt6(1234567.0), "1.23457e+06");
        assert_eq!(fmt6(-2.5e-7), "-2.5e-07");
        assert_eq!(fmt6(99.99996), "100");
        assert_eq!(fmt6(f64::NAN), "nan");
    }
}
