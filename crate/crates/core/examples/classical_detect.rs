//! Detect ChArUco corners in synthetic perspective views with the classical
//! pipeline and compare against ground truth.

use charuco_forge::board::BoardSpec;
use charuco_forge::classical::{detect_classical, ClassicalParams};
use charuco_forge::eval::{corner_accuracy, corner_errors, gen_test_frames, ViewStyle, ACCURACY_RADIUS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = BoardSpec::default_5x5();
    let frames = gen_test_frames(&spec, 5, &ViewStyle::default(), &mut ChaCha8Rng::seed_from_u64(1))?;
    let params = ClassicalParams::default();
    for (i, f) in frames.iter().enumerate() {
        let det = detect_classical(&f.image, &spec, &params);
        let worst = corner_errors(&det, &f.gt).iter().map(|e| e.1).fold(0.0, f64::max);
        println!(
            "frame {i}: {} corners, accuracy {:.2}, worst error {worst:.3} px",
            det.len(),
            corner_accuracy(&det, &f.gt, ACCURACY_RADIUS)
        );
    }
    print!("{}", detect_classical(&frames[0].image, &spec, &params).to_csv());
    Ok(())
}
