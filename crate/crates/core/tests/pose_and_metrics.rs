use charuco_forge::board::{board_object_points, BoardSpec};
use charuco_forge::classical::{ChArUcoDetection, ClassicalParams, DetectedCorner, DetectionSource};
use charuco_forge::eval::{
    corner_accuracy, curve_csv, default_camera, gen_test_frames, pose_accuracy_curve, random_view_pose, sweep, ClassicalDetector,
    Detector, SweepEffect, ViewStyle,
};
use charuco_forge::pose::{project, reprojection_error, solve_pnp, solve_pnp_ransac, CameraIntrinsics, Pose, PoseError, RansacParams};
use charuco_forge::IdPoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64) -> (BoardSpec, CameraIntrinsics, Pose) {
    let spec = BoardSpec::default_5x5();
    let style = ViewStyle::default();
    let k = default_camera(style.width, style.height);
    let pose = random_view_pose(&spec, &k, &style, &mut ChaCha8Rng::seed_from_u64(seed));
    (spec, k, pose)
}

fn detection(pts: &[IdPoint]) -> ChArUcoDetection {
    ChArUcoDetection::new(
        pts.iter().map(|p| DetectedCorner { id: p.id, x: p.x, y: p.y, confidence: 1.0 }).collect(),
        DetectionSource::Classical,
    )
    .unwrap()
}

#[test]
fn ransac_without_outliers_matches_plain_solver() {
    let (spec, k, truth) = setup(1);
    let obj = board_object_points(&spec);
    let pts = project(&k, &truth, &obj).unwrap();
    let plain = solve_pnp(&obj, &pts, &k).unwrap();
    let robust = solve_pnp_ransac(&obj, &pts, &k, &RansacParams::default(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert_eq!(robust.inliers, (0..16).collect::<Vec<_>>());
    assert!(robust.rotation_error(&plain) < 1e-9 && robust.translation_error(&plain) < 1e-9);
    // Closure on exact data.
    let back = project(&k, &robust, &obj).unwrap();
    assert!(back.iter().zip(&pts).all(|(a, b)| a.distance(b) < 1e-6));
}

#[test]
fn ransac_excludes_displaced_corners() {
    let (spec, k, truth) = setup(3);
    let obj = board_object_points(&spec);
    let mut pts = project(&k, &truth, &obj).unwrap();
    pts[2].x += 50.0;
    pts[11].y += 50.0;
    let pose = solve_pnp_ransac(&obj, &pts, &k, &RansacParams::default(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let expected: Vec<usize> = (0..16).filter(|&i| i != 2 && i != 11).collect();
    assert_eq!(pose.inliers, expected);
    assert!(pose.rotation_error(&truth) < 1e-6);
}

#[test]
fn ransac_is_seeded() {
    let (spec, k, truth) = setup(5);
    let obj = board_object_points(&spec);
    let mut pts = project(&k, &truth, &obj).unwrap();
    for (i, p) in pts.iter_mut().enumerate() {
        p.x += ((i * 37) % 7) as f64 * 0.3;
        if i % 5 == 0 {
            p.y -= 20.0;
        }
    }
    let run = |seed, iters| {
        let params = RansacParams { max_iters: iters, ..RansacParams::default() };
        solve_pnp_ransac(&obj, &pts, &k, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    };
    let (a, b) = (run(9, 100), run(9, 100));
    assert_eq!(a.inliers, b.inliers);
    assert_eq!(a.rotation, b.rotation);
    assert_eq!(a.translation, b.translation);
    // More iterations with the same seed find the same consensus.
    assert_eq!(run(9, 200).inliers, a.inliers);
    let r = a.rotation;
    assert!((r.transpose() * r - nalgebra::Matrix3::identity()).norm() < 1e-12);
    assert!((r.determinant() - 1.0).abs() < 1e-12);
}

#[test]
fn pnp_error_paths() {
    let (spec, k, truth) = setup(6);
    let obj = board_object_points(&spec);
    let pts = project(&k, &truth, &obj).unwrap();
    let err = solve_pnp(&obj, &pts[..3], &k).unwrap_err();
    assert!(matches!(err, PoseError::InsufficientCorrespondences { .. }));
    assert!(err.to_string().contains("insufficient correspondences"));
    // Random garbage has no four-point consensus within 3 px.
    let garbage: Vec<IdPoint> = (0..6).map(|i| IdPoint::new(i, (i * i * 53 % 300) as f64, (i * 97 % 230) as f64)).collect();
    let r = solve_pnp_ransac(&obj, &garbage, &k, &RansacParams::default(), &mut ChaCha8Rng::seed_from_u64(0));
    assert!(r.is_err());
}

#[test]
fn reprojection_error_definition() {
    let (spec, k, truth) = setup(7);
    let obj = board_object_points(&spec);
    let pts = project(&k, &truth, &obj).unwrap();
    assert_eq!(reprojection_error(&k, &truth, &obj, &detection(&pts)).unwrap(), 0.0);
    let one = [IdPoint::new(pts[5].id, pts[5].x + 3.0, pts[5].y)];
    assert!((reprojection_error(&k, &truth, &obj, &detection(&one)).unwrap() - 3.0).abs() < 1e-12);
    let empty = ChArUcoDetection::empty(DetectionSource::Classical);
    assert!(matches!(reprojection_error(&k, &truth, &obj, &empty), Err(PoseError::EmptyDetection)));
    // Order of correspondences does not matter.
    let shifted: Vec<IdPoint> = pts.iter().map(|p| IdPoint::new(p.id, p.x + p.id as f64 * 0.1, p.y - 0.2)).collect();
    let a = reprojection_error(&k, &truth, &obj, &detection(&shifted)).unwrap();
    let mut rev = shifted.clone();
    rev.reverse();
    let b = reprojection_error(&k, &truth, &obj, &detection(&rev)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn corner_accuracy_quantization() {
    let gt: Vec<IdPoint> = (0..16).map(|i| IdPoint::new(i, 10.0 * i as f64, 5.0)).collect();
    assert_eq!(corner_accuracy(&detection(&gt), &gt, 3.0), 1.0);
    let two = detection(&gt[..2]);
    assert_eq!(corner_accuracy(&two, &gt, 3.0), 0.125);
    // Right place, wrong id.
    let swapped = detection(&[IdPoint::new(1, gt[0].x, gt[0].y)]);
    assert_eq!(corner_accuracy(&swapped, &gt, 3.0), 0.0);
}

#[test]
fn pose_curve_on_exact_data_is_one() {
    let spec = BoardSpec::default_5x5();
    let obj = board_object_points(&spec);
    let style = ViewStyle::default();
    let k = default_camera(style.width, style.height);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dets: Vec<_> = (0..10)
        .map(|_| detection(&project(&k, &random_view_pose(&spec, &k, &style, &mut rng), &obj).unwrap()))
        .chain(std::iter::once(ChArUcoDetection::empty(DetectionSource::Classical)))
        .collect();
    let thresholds = [1e-3, 0.5, 3.0, f64::INFINITY];
    let curve = pose_accuracy_curve(&dets[..10], &obj, &k, &thresholds, &RansacParams::default(), 0);
    assert!(curve.fractions.iter().all(|&f| f == 1.0));
    let with_failure = pose_accuracy_curve(&dets, &obj, &k, &thresholds, &RansacParams::default(), 0);
    assert!(with_failure.fractions.iter().all(|&f| f == 10.0 / 11.0));
    assert_eq!(with_failure.errors[10], None);
    let csv = curve_csv(&[("exact", &curve)]);
    assert!(csv.starts_with("threshold_px,method,fraction\n0.001,exact,1\n"));
}

struct Renamed(ClassicalDetector, &'static str);

impl Detector for Renamed {
    fn name(&self) -> &str {
        self.1
    }
    fn detect(&self, img: &charuco_forge::image::GrayImage) -> ChArUcoDetection {
        self.0.detect(img)
    }
}

#[test]
fn sweep_report_shape_and_determinism() {
    let spec = BoardSpec::default_5x5();
    let frames = gen_test_frames(&spec, 3, &ViewStyle::default(), &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
    let a = Renamed(ClassicalDetector { spec: spec.clone(), params: ClassicalParams::default() }, "a");
    let b = Renamed(ClassicalDetector { spec, params: ClassicalParams { subpix: None, ..ClassicalParams::default() } }, "b");
    let r1 = sweep(SweepEffect::MotionBlur, &frames, &[&a, &b], 10).to_csv();
    let r2 = sweep(SweepEffect::MotionBlur, &frames, &[&a, &b], 10).to_csv();
    assert_eq!(r1, r2);
    let lines: Vec<&str> = r1.lines().collect();
    assert_eq!(lines.len(), 23);
    assert_eq!(lines[0], "effect,level,method,accuracy");
    assert_eq!(lines[1], "motion_blur,0,a,1");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    charuco_forge::eval::write_text(&path, &r1).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), r1);
}
