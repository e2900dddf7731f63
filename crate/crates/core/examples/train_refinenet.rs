//! Train the subpixel refinement network on synthetic saddle patches and
//! compare its held-out error with plain rounding. Takes about a minute and
//! a half on one core at the default settings.
//!
//! `cargo run --release --example train_refinenet -- [steps]`

use charuco_forge::eval::{gen_refine_patches, refine_error, rounding_baseline, train_refinenet, PatchStyle, RefineTrainConfig};
use charuco_forge::net::save_weights;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RefineTrainConfig::default();
    if let Some(steps) = std::env::args().nth(1) {
        cfg.steps = steps.parse()?;
    }
    let (net, log) = train_refinenet(&cfg, &mut ChaCha8Rng::seed_from_u64(11))?;
    let held_out = gen_refine_patches(1000, &PatchStyle::default(), &mut ChaCha8Rng::seed_from_u64(12));
    println!("loss {:.3} -> {:.3}", log.initial_loss().unwrap_or(f32::NAN), log.final_loss().unwrap_or(f32::NAN));
    println!("rounding baseline {:.3}, RefineNet {:.3}", rounding_baseline(&held_out), refine_error(&net, &held_out)?);
    let path = std::env::temp_dir().join("refinenet.bin");
    save_weights(&net, &path)?;
    println!("weights saved to {}", path.display());
    Ok(())
}
