//! Run the training-time augmentation pipeline on a rendered board and save
//! a few augmented copies.

use charuco_forge::board::{render_board, BoardSpec};
use charuco_forge::image::{augment, write_pgm, AugmentConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (img, corners) = render_board(&BoardSpec::default_5x5(), 24, 12)?;
    let dir = std::env::temp_dir().join("charuco_augment");
    std::fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..6 {
        let a = augment(&img, &corners, &AugmentConfig::positives(), &mut rng);
        let names: Vec<&str> = a.applied.iter().map(|e| e.name()).collect();
        let path = dir.join(format!("aug_{i}.pgm"));
        write_pgm(&a.image, &path)?;
        println!("{}: {} corners kept, effects [{}]", path.display(), a.corners.len(), names.join(", "));
    }
    Ok(())
}
