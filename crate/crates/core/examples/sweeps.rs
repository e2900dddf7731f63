//! Motion-blur and lighting robustness sweeps for the classical detector.
//! Prints the sweep CSV.

use charuco_forge::board::BoardSpec;
use charuco_forge::classical::ClassicalParams;
use charuco_forge::eval::{gen_test_frames, sweep, ClassicalDetector, SweepEffect, ViewStyle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = BoardSpec::default_5x5();
    let frames = gen_test_frames(&spec, 10, &ViewStyle::default(), &mut ChaCha8Rng::seed_from_u64(7))?;
    let det = ClassicalDetector { spec, params: ClassicalParams::default() };
    for effect in [SweepEffect::MotionBlur, SweepEffect::Lighting] {
        print!("{}", sweep(effect, &frames, &[&det], 10).to_csv());
    }
    Ok(())
}
