//! Run the learned detector end to end. Weights are read from the paths
//! given on the command line; without them a freshly initialized ChArUcoNet
//! is used, which shows the plumbing but finds nothing useful.
//!
//! `cargo run --example deep_detect -- [charuconet.bin [refinenet.bin]]`

use charuco_forge::board::BoardSpec;
use charuco_forge::deepdetect::{detect_deep, DeepConfig, RefineMode};
use charuco_forge::eval::{corner_accuracy, gen_test_frames, ViewStyle, ACCURACY_RADIUS};
use charuco_forge::net::{build_charuconet, load_weights};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let charuconet = match args.first() {
        Some(p) => load_weights(p)?,
        None => {
            let mut n = build_charuconet(0.25)?;
            n.init_he_uniform(&mut ChaCha8Rng::seed_from_u64(0));
            n
        }
    };
    let refinenet = args.get(1).map(load_weights).transpose()?;
    let mode = if refinenet.is_some() { RefineMode::RefineNet } else { RefineMode::CornerSubPix };
    let cfg = DeepConfig { mode, ..DeepConfig::default() };

    let spec = BoardSpec::default_5x5();
    let frames = gen_test_frames(&spec, 3, &ViewStyle::default(), &mut ChaCha8Rng::seed_from_u64(4))?;
    for (i, f) in frames.iter().enumerate() {
        let det = detect_deep(&f.image, &charuconet, refinenet.as_ref(), &cfg)?;
        println!("frame {i}: {} corners, accuracy {:.2}", det.len(), corner_accuracy(&det, &f.gt, ACCURACY_RADIUS));
    }
    Ok(())
}
