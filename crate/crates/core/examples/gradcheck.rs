//! Finite-difference gradient check of every layer type and both networks.

use charuco_forge::net::run_gradcheck;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reports = run_gradcheck(0.125, 6, &mut ChaCha8Rng::seed_from_u64(0))?;
    for r in &reports {
        println!("{:<28} checked {:>3}  max rel error {:.2e}", r.name, r.checked, r.max_rel_error);
    }
    Ok(())
}
