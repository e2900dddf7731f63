//! Overfit ChArUcoNet on a single batch of small synthetic frames, the
//! standard sanity check for the training loop.

use charuco_forge::board::BoardSpec;
use charuco_forge::eval::{gen_training_frames, FrameMix, ViewStyle};
use charuco_forge::image::AugmentConfig;
use charuco_forge::net::{build_charuconet, train, TrainConfig, TrainSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mix = FrameMix { style: ViewStyle { width: 128, height: 96, ..ViewStyle::default() }, ..FrameMix::default() };
    let frames = gen_training_frames(&BoardSpec::default_5x5(), 8, &mix, &AugmentConfig::positives(), &mut rng)?;
    let samples: Vec<TrainSample> = frames.iter().map(|f| f.to_sample()).collect();
    let mut net = build_charuconet(0.25)?;
    net.init_he_uniform(&mut rng);
    let log = train(&mut net, &samples, &TrainConfig::new(0.05, 300, 8), &mut rng)?;
    for s in log.steps.iter().step_by(25) {
        println!("step {:>4}  loss {:.4}", s.step, s.loss);
    }
    Ok(())
}
