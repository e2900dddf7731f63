//! Pose accuracy curve: fraction of frames whose reprojection error is under
//! each pixel threshold. Half of the frames are darkened so the detector
//! misses them.

use charuco_forge::board::{board_object_points, BoardSpec};
use charuco_forge::classical::{detect_classical, ClassicalParams};
use charuco_forge::eval::{curve_csv, default_camera, gen_test_frames, pose_accuracy_curve, SweepEffect, ViewStyle};
use charuco_forge::pose::RansacParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = BoardSpec::default_5x5();
    let style = ViewStyle::default();
    let frames = gen_test_frames(&spec, 20, &style, &mut ChaCha8Rng::seed_from_u64(9))?;
    let params = ClassicalParams::default();
    let detections: Vec<_> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let img = if i % 2 == 0 { f.image.clone() } else { SweepEffect::Lighting.apply(&f.image, 8) };
            detect_classical(&img, &spec, &params)
        })
        .collect();
    let k = default_camera(style.width, style.height);
    let curve = pose_accuracy_curve(
        &detections,
        &board_object_points(&spec),
        &k,
        &[0.5, 1.0, 2.0, 3.0, 5.0],
        &RansacParams::default(),
        0,
    );
    print!("{}", curve_csv(&[("classical", &curve)]));
    Ok(())
}
