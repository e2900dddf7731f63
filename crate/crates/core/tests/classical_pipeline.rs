use charuco_forge::board::{board_object_points, board_to_render_px, render_board, BoardSpec};
use charuco_forge::classical::{
    adaptive_threshold, corner_subpix, decode_candidate, DecodeParams, detect_classical, detect_markers, find_quads, interpolate_corners, ClassicalParams,
    SubpixParams,
};
use charuco_forge::eval::{corner_accuracy, render_saddle, SweepEffect};
use charuco_forge::image::{warp_homography, GrayImage, Homography};
use nalgebra::Matrix3;

const PPS: usize = 40;
const MARGIN: usize = 20;

fn rot90_cw(img: &GrayImage) -> GrayImage {
    img.transpose().flip_horizontal()
}

fn clean() -> (BoardSpec, GrayImage, Vec<charuco_forge::IdPoint>) {
    let spec = BoardSpec::default_5x5();
    let (img, gt) = render_board(&spec, PPS, MARGIN).unwrap();
    (spec, img, gt)
}

#[test]
fn threshold_of_render_keeps_interior_colors() {
    let (spec, img, _) = clean();
    let bin = adaptive_threshold(&img, 21, 7.0);
    // Square centers lie far from any edge that the local mean could blur.
    for w in 0..spec.squares_y {
        for u in 0..spec.squares_x {
            let (x, y) = (MARGIN + u * PPS + 2, MARGIN + w * PPS + 2);
            assert_eq!(bin.get(x, y), img.get(x, y), "square ({u},{w})");
        }
    }
}

#[test]
fn clean_render_yields_twelve_quads() {
    let (_, img, _) = clean();
    let quads = find_quads(&adaptive_threshold(&img, 21, 7.0), 8.0);
    assert_eq!(quads.len(), 12);
}

#[test]
fn warped_quads_match_warped_marker_corners() {
    let (spec, img, _) = clean();
    let m = Matrix3::new(0.95, 0.08, 12.0, -0.05, 1.0, 6.0, 1.5e-4, -1.0e-4, 1.0);
    let h = Homography::new(m).unwrap();
    let warped = warp_homography(&img, &h, img.width() + 40, img.height() + 40).unwrap();
    // Fill the out-of-frame area white so it does not form a dark border.
    let inside = |x: usize, y: usize| h.inverse().apply(x as f64, y as f64).is_some_and(|(sx, sy)| {
        sx >= 0.0 && sy >= 0.0 && sx <= (img.width() - 1) as f64 && sy <= (img.height() - 1) as f64
    });
    let warped = GrayImage::from_fn(warped.width(), warped.height(), |x, y| if inside(x, y) { warped.get(x, y) } else { 255.0 });
    // Bilinear resampling separates the black squares that only touch at a
    // corner, so isolated chessboard squares show up as quads too. Decoding
    // must reject every one of them.
    let quads: Vec<_> = find_quads(&adaptive_threshold(&warped, 21, 7.0), 8.0)
        .into_iter()
        .filter(|q| decode_candidate(&warped, q, &spec.dictionary, &DecodeParams::default()).is_some())
        .collect();
    assert_eq!(quads.len(), 12);
    let expected: Vec<(f64, f64)> = spec
        .marker_placements()
        .iter()
        .flat_map(|p| spec.marker_corners_board(p))
        .map(|c| {
            let (x, y) = board_to_render_px(&spec, PPS, MARGIN, c[0], c[1]);
            h.apply(x, y).unwrap()
        })
        .collect();
    for q in &quads {
        for &(x, y) in &q.quad {
            let d = expected.iter().map(|e| (e.0 - x).hypot(e.1 - y)).fold(f64::INFINITY, f64::min);
            assert!(d <= 1.5, "quad corner ({x:.2},{y:.2}) is {d:.2} px from every marker corner");
        }
    }
}

#[test]
fn rotation_closure() {
    let (spec, img, _) = clean();
    let params = ClassicalParams::default();
    let mut rotated = img.clone();
    for turns in 0..4u8 {
        let markers = detect_markers(&rotated, &spec, &params);
        let mut ids: Vec<usize> = markers.iter().map(|m| m.id.unwrap()).collect();
        ids.sort();
        assert_eq!(ids, (0..12).collect::<Vec<_>>(), "turns {turns}");
        assert!(markers.iter().all(|m| m.rotation == Some(turns)), "turns {turns}");
        assert_eq!(detect_classical(&rotated, &spec, &params).len(), 16);
        rotated = rot90_cw(&rotated);
    }
}

#[test]
fn vanilla_chessboard_is_rejected() {
    let (spec, _, _) = clean();
    let side = spec.squares_x * PPS + 2 * MARGIN;
    let img = GrayImage::from_fn(side, side, |x, y| {
        let inside = (MARGIN..side - MARGIN).contains(&x) && (MARGIN..side - MARGIN).contains(&y);
        if inside && ((x - MARGIN) / PPS + (y - MARGIN) / PPS) % 2 == 0 { 0.0 } else { 255.0 }
    });
    let params = ClassicalParams::default();
    assert!(detect_markers(&img, &spec, &params).is_empty());
    assert!(detect_classical(&img, &spec, &params).is_empty());
}

#[test]
fn single_marker_recovers_its_own_corners() {
    let (spec, img, gt) = clean();
    let params = ClassicalParams::default();
    let markers = detect_markers(&img, &spec, &params);
    let obj = board_object_points(&spec);
    let s = spec.square_length;
    for m in &markers {
        let pl = spec.marker_placements()[m.id.unwrap()];
        let det = interpolate_corners(std::slice::from_ref(m), &spec, &img);
        let (x0, y1) = (pl.col as f64 * s, (spec.squares_y - pl.row) as f64 * s);
        let own: Vec<usize> = obj
            .iter()
            .filter(|p| p.x > x0 - 1e-9 && p.x < x0 + s + 1e-9 && p.y > y1 - s - 1e-9 && p.y < y1 + 1e-9)
            .map(|p| p.id)
            .collect();
        assert!(!own.is_empty());
        for id in own {
            let c = det.get(id).unwrap_or_else(|| panic!("marker {:?} lost corner {id}", m.id));
            let d = (c.x - gt[id].x).hypot(c.y - gt[id].y);
            assert!(d <= 2.0, "marker {:?} corner {id}: {d:.3} px", m.id);
        }
    }
}

#[test]
fn no_markers_no_corners() {
    let (spec, img, _) = clean();
    assert!(interpolate_corners(&[], &spec, &img).is_empty());
    let blank = GrayImage::filled(320, 240, 200.0);
    assert!(detect_classical(&blank, &spec, &ClassicalParams::default()).is_empty());
}

#[test]
fn all_markers_give_all_corners() {
    let (spec, img, gt) = clean();
    let params = ClassicalParams { subpix: None, ..ClassicalParams::default() };
    let det = interpolate_corners(&detect_markers(&img, &spec, &params), &spec, &img);
    assert_eq!(det.len(), 16);
    for c in &det.corners {
        assert!((c.x - gt[c.id].x).hypot(c.y - gt[c.id].y) <= 0.5);
        assert_eq!(c.confidence, 1.0);
    }
}

#[test]
fn subpix_on_rendered_saddle() {
    let truth = (50.25, 50.75);
    let img = render_saddle(100, truth, 0.3, 0.3 + std::f64::consts::FRAC_PI_2, 30.0, 220.0, 16);
    let params = SubpixParams::default();
    let r = corner_subpix(&img, (51.0, 50.0), &params);
    assert!(r.refined);
    assert!((r.x - truth.0).hypot(r.y - truth.1) <= 0.1, "({}, {})", r.x, r.y);
    let again = corner_subpix(&img, (r.x, r.y), &params);
    assert!((again.x - r.x).hypot(again.y - r.y) < params.eps);
}

#[test]
fn heavy_blur_and_darkness_defeat_the_detector() {
    let (spec, img, gt) = clean();
    let params = ClassicalParams::default();
    assert_eq!(corner_accuracy(&detect_classical(&img, &spec, &params), &gt, 3.0), 1.0);
    let blurred = SweepEffect::MotionBlur.apply(&img, 8);
    assert_eq!(corner_accuracy(&detect_classical(&blurred, &spec, &params), &gt, 3.0), 0.0);
    let dark = SweepEffect::Lighting.apply(&img, 9);
    assert_eq!(corner_accuracy(&detect_classical(&dark, &spec, &params), &gt, 3.0), 0.0);
}

#[test]
fn closure_at_smallest_square_size() {
    let spec = BoardSpec::default_5x5();
    let (img, gt) = render_board(&spec, 24, 12).unwrap();
    let det = detect_classical(&img, &spec, &ClassicalParams::default());
    assert_eq!(det.len(), 16);
    for c in &det.corners {
        assert!((c.x - gt[c.id].x).hypot(c.y - gt[c.id].y) <= 0.5);
    }
}
