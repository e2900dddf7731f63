//! Save a network to the binary weight format, reload it, and confirm the
//! outputs are bit-identical.

use charuco_forge::net::{build_charuconet, load_weights, save_weights, Tensor3};
use charuco_forge::image::GrayImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut net = build_charuconet(0.25)?;
    net.init_he_uniform(&mut ChaCha8Rng::seed_from_u64(2));
    let path = std::env::temp_dir().join("charuconet_example.bin");
    save_weights(&net, &path)?;
    let loaded = load_weights(&path)?;
    println!("{} parameters written to {}", net.param_count(), path.display());

    let input = Tensor3::from_image(&GrayImage::from_fn(64, 48, |x, y| ((x ^ y) * 4 % 256) as f32));
    let a = net.forward(&input)?;
    let b = loaded.forward(&input)?;
    let same = a.iter().zip(&b).all(|(x, y)| x.data == y.data);
    println!("outputs identical after reload: {same}");
    Ok(())
}
