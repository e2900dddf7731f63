use charuco_forge::board::{board_to_toml, BoardSpec};
use charuco_forge::cli::{run_with_output, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
use charuco_forge::image::{read_pgm, write_pgm, GrayImage};

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv: Vec<&str> = std::iter::once("charuco").chain(args.iter().copied()).collect();
    let code = run_with_output(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn render_then_detect_then_pose() {
    let dir = tempfile::tempdir().unwrap();
    let board_pgm = dir.path().join("board.pgm");
    let (code, _) = run(&["render-board", "--pps", "40", "--out", board_pgm.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let img = read_pgm(&board_pgm).unwrap();
    assert_eq!((img.width(), img.height()), (200, 200));
    let gt = std::fs::read_to_string(dir.path().join("board_gt.csv")).unwrap();
    assert_eq!(gt.lines().count(), 17);

    let toml = dir.path().join("board.toml");
    std::fs::write(&toml, board_to_toml(&BoardSpec::default_5x5(), None)).unwrap();
    let (code, csv) = run(&["detect", "--method", "classical", "--image", board_pgm.to_str().unwrap(), "--board", toml.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "id,x,y,confidence");
    assert_eq!(lines.len(), 17);

    let det = dir.path().join("det.csv");
    std::fs::write(&det, &csv).unwrap();
    let intr = dir.path().join("k.txt");
    std::fs::write(&intr, "400 400 100 100\n").unwrap();
    let (code, pose) = run(&["pose", "--detections", det.to_str().unwrap(), "--intrinsics", intr.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(pose.starts_with("r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz,n_inliers,reproj_err\n"));
}

#[test]
fn failures_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let blank = dir.path().join("blank.pgm");
    write_pgm(&GrayImage::filled(64, 48, 128.0), &blank).unwrap();
    assert_eq!(run(&["detect", "--image", blank.to_str().unwrap()]).0, EXIT_FAILURE);
    assert_eq!(run(&["detect", "--image", dir.path().join("missing.pgm").to_str().unwrap()]).0, EXIT_USAGE);
    assert_eq!(run(&["detect", "--image", blank.to_str().unwrap(), "--bogus"]).0, EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run(&[]).0, EXIT_USAGE);
}

#[test]
fn sweep_is_reproducible_from_seed() {
    let args = ["sweep", "--effect", "lighting", "--kmax", "3", "--images", "2", "--seed", "7"];
    let (c1, a) = run(&args);
    let (c2, b) = run(&args);
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);
}

#[test]
fn dataset_generators_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let patches = dir.path().join("patches");
    assert_eq!(run(&["--seed", "3", "gen-patches", "--n", "5", "--out", patches.to_str().unwrap()]).0, EXIT_OK);
    let labels = std::fs::read_to_string(patches.join("labels.csv")).unwrap();
    assert!(labels.starts_with("filename,x,y,bin\n"));
    assert_eq!(labels.lines().count(), 6);

    let frames = dir.path().join("frames");
    assert_eq!(run(&["gen-frames", "--n", "2", "--width", "160", "--height", "120", "--out", frames.to_str().unwrap()]).0, EXIT_OK);
    assert!(std::fs::read_dir(&frames).unwrap().count() >= 2);
}
