//! Recover a board pose from noisy corner observations, with and without
//! RANSAC, and report reprojection error.

use charuco_forge::board::{board_object_points, BoardSpec};
use charuco_forge::eval::{default_camera, random_view_pose, ViewStyle};
use charuco_forge::pose::{project, solve_pnp, solve_pnp_ransac, RansacParams};
use charuco_forge::IdPoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = BoardSpec::default_5x5();
    let obj = board_object_points(&spec);
    let style = ViewStyle::default();
    let k = default_camera(style.width, style.height);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth = random_view_pose(&spec, &k, &style, &mut rng);

    let noise = Normal::new(0.0, 0.5)?;
    let mut pts: Vec<IdPoint> = project(&k, &truth, &obj)?
        .into_iter()
        .map(|p| IdPoint::new(p.id, p.x + noise.sample(&mut rng), p.y + noise.sample(&mut rng)))
        .collect();
    let plain = solve_pnp(&obj, &pts, &k)?;
    println!(
        "LM:     rotation error {:.4} rad, translation error {:.5} m, mean reprojection {:.3} px",
        plain.rotation_error(&truth),
        plain.translation_error(&truth),
        plain.mean_reproj_err
    );

    // Two gross outliers: plain LM is dragged off, RANSAC is not.
    pts[3].x += 40.0;
    pts[9].y -= 35.0;
    let robust = solve_pnp_ransac(&obj, &pts, &k, &RansacParams::default(), &mut rng)?;
    println!(
        "RANSAC: rotation error {:.4} rad, {} of {} inliers",
        robust.rotation_error(&truth),
        robust.inliers.len(),
        pts.len()
    );
    println!("{}\n{}", charuco_forge::pose::Pose::CSV_HEADER, robust.csv_row().trim_end());
    Ok(())
}
