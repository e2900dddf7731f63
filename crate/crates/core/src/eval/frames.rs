use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, RngExt};

use crate::board::{board_object_points, BoardSpec, Dictionary, MarkerBits};
use crate::image::{augment, AugmentConfig, Effect, GrayImage, Homography};
use crate::net::{CellTargets, Tensor3, TrainSample, CELL, ID_DUSTBIN, KEYPOINT_DUSTBIN};
use crate::pose::{project, CameraIntrinsics, Pose};
use crate::IdPoint;

use super::EvalError;

/// Pinhole camera for `width` x `height` frames with the principal point at
/// the image centre.
pub fn default_camera(width: usize, height: usize) -> CameraIntrinsics {
    let f = 300.0 * width as f64 / 320.0;
    CameraIntrinsics::new(f, f, 0.5 * (width as f64 - 1.0), 0.5 * (height as f64 - 1.0)).expect("positive focal length")
}

/// How a board appears in a synthetic frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewStyle {
    pub width: usize,
    pub height: usize,
    /// Intensity outside the board.
    pub background: f32,
    /// White margin around the printed squares, in square lengths.
    pub quiet_zone: f64,
    pub supersample: usize,
    /// Largest tilt of the board normal away from the optical axis, degrees.
    pub max_tilt_deg: f64,
    /// Range of the board's apparent width as a fraction of the frame height.
    pub min_fill: f64,
    pub max_fill: f64,
    /// Smallest distance in pixels from any outer board corner to the frame
    /// border.
    pub border_px: f64,
}

impl Default for ViewStyle {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            background: 110.0,
            quiet_zone: 0.5,
            supersample: 4,
            max_tilt_deg: 30.0,
            min_fill: 0.65,
            max_fill: 0.85,
            border_px: 6.0,
        }
    }
}

/// Maps board square coordinates (`u` right, `w` down from the top-left
/// outer corner) to pixels for a camera pose.
pub fn view_homography(spec: &BoardSpec, k: &CameraIntrinsics, pose: &Pose) -> Result<Homography, EvalError> {
    let s = spec.square_length;
    let to_metric = Matrix3::new(s, 0.0, 0.0, 0.0, -s, spec.squares_y as f64 * s, 0.0, 0.0, 1.0);
    let r = &pose.rotation;
    let rt = Matrix3::from_columns(&[r.column(0).into_owned(), r.column(1).into_owned(), pose.translation]);
    Ok(Homography::new(k.matrix() * rt * to_metric)?)
}

/// Area-sampled render of the board seen through `h` (from
/// [`view_homography`]).
pub fn render_view(spec: &BoardSpec, h: &Homography, style: &ViewStyle) -> GrayImage {
    let inv = h.inverse();
    let ss = style.supersample.max(1);
    let offs: Vec<f64> = (0..ss).map(|i| (i as f64 + 0.5) / ss as f64 - 0.5).collect();
    let (sx, sy) = (spec.squares_x as f64, spec.squares_y as f64);
    let q = style.quiet_zone;
    GrayImage::from_fn(style.width, style.height, |x, y| {
        let mut acc = 0.0f32;
        for &oy in &offs {
            for &ox in &offs {
                acc += match inv.apply(x as f64 + ox, y as f64 + oy) {
                    Some((u, w)) => match spec.intensity_at(u, w) {
                        Some(v) => v,
                        None if u >= -q && w >= -q && u < sx + q && w < sy + q => 255.0,
                        None => style.background,
                    },
                    None => style.background,
                };
            }
        }
        acc / (ss * ss) as f32
    })
}

fn outer_corners(spec: &BoardSpec, quiet_zone: f64) -> [crate::board::ObjectPoint; 4] {
    let (w, h, q) = (spec.squares_x as f64 * spec.square_length, spec.squares_y as f64 * spec.square_length, quiet_zone * spec.square_length);
    let p = |id, x, y| crate::board::ObjectPoint { id, x, y, z: 0.0 };
    [p(0, -q, -q), p(1, w + q, -q), p(2, w + q, h + q), p(3, -q, h + q)]
}

/// Random board pose that keeps the whole board, quiet zone included, in
/// the frame. Tilt, in-plane rotation, distance and position are uniform.
pub fn random_view_pose<R: Rng + ?Sized>(spec: &BoardSpec, k: &CameraIntrinsics, style: &ViewStyle, rng: &mut R) -> Pose {
    let (bw, bh) = (spec.squares_x as f64 * spec.square_length, spec.squares_y as f64 * spec.square_length);
    let centre = Vector3::new(0.5 * bw, 0.5 * bh, 0.0);
    let corners = outer_corners(spec, style.quiet_zone);
    for attempt in 0.. {
        // Give up on the frame border constraint's tightness only after many
        // draws by shrinking the board.
        let shrink = if attempt > 500 { 0.7 } else { 1.0 };
        let fill = rng.random_range(style.min_fill..=style.max_fill) * shrink;
        let depth = k.fy * bw.max(bh) / (fill * style.height as f64);
        let tilt = rng.random_range(0.0..=style.max_tilt_deg.to_radians());
        let tilt_dir = rng.random_range(0.0..2.0 * PI);
        let spin = rng.random_range(0.0..2.0 * PI);
        // Board faces the camera: flip about X so board Y points up in the
        // image, spin in-plane, then tilt.
        let face = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), PI);
        let spin_r = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), spin);
        let axis = nalgebra::Unit::new_normalize(Vector3::new(tilt_dir.cos(), tilt_dir.sin(), 0.0));
        let tilt_r = nalgebra::Rotation3::from_axis_angle(&axis, tilt);
        let r = (tilt_r * spin_r * face).into_inner();
        let (cx, cy) = (
            rng.random_range(0.35..0.65) * style.width as f64,
            rng.random_range(0.35..0.65) * style.height as f64,
        );
        let ray = Vector3::new((cx - k.cx) / k.fx, (cy - k.cy) / k.fy, 1.0);
        let t = ray * depth - r * centre;
        let pose = Pose::new(r, t);
        let pts = crate::board::ObjectPoints(corners.to_vec());
        let Ok(img) = project(k, &pose, &pts) else { continue };
        let b = style.border_px;
        if img.iter().all(|p| p.x >= b && p.y >= b && p.x <= style.width as f64 - 1.0 - b && p.y <= style.height as f64 - 1.0 - b) {
            return pose;
        }
    }
    unreachable!("the loop only exits by returning")
}

/// A rendered view with exact corner locations.
#[derive(Debug, Clone)]
pub struct SyntheticFrame {
    pub image: GrayImage,
    /// All 16 inner corners, in id order.
    pub gt: Vec<IdPoint>,
    pub pose: Pose,
}

pub fn render_frame(spec: &BoardSpec, k: &CameraIntrinsics, pose: &Pose, style: &ViewStyle) -> Result<SyntheticFrame, EvalError> {
    let h = view_homography(spec, k, pose)?;
    let gt = project(k, pose, &board_object_points(spec)).map_err(|e| EvalError::Invalid(e.to_string()))?;
    Ok(SyntheticFrame { image: render_view(spec, &h, style), gt, pose: pose.clone() })
}

/// `n` frames of the board under independent random poses.
pub fn gen_test_frames<R: Rng + ?Sized>(
    spec: &BoardSpec,
    n: usize,
    style: &ViewStyle,
    rng: &mut R,
) -> Result<Vec<SyntheticFrame>, EvalError> {
    let k = default_camera(style.width, style.height);
    (0..n).map(|_| render_frame(spec, &k, &random_view_pose(spec, &k, style, rng), style)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// The target board.
    Positive,
    /// No board at all.
    Negative,
    /// A ChArUco board printed with markers from another dictionary.
    ForeignDictionary,
}

#[derive(Debug, Clone)]
pub struct TrainingFrame {
    pub image: GrayImage,
    pub kind: FrameKind,
    /// Visible inner corners after augmentation.
    pub corners: Vec<IdPoint>,
    pub keypoints: CellTargets,
    pub ids: CellTargets,
    pub applied: Vec<Effect>,
}

impl TrainingFrame {
    pub fn to_sample(&self) -> TrainSample {
        TrainSample { input: Tensor3::from_image(&self.image), targets: vec![self.keypoints.clone(), self.ids.clone()] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMix {
    pub style: ViewStyle,
    pub negative_fraction: f64,
    pub foreign_fraction: f64,
}

impl Default for FrameMix {
    fn default() -> Self {
        Self { style: ViewStyle::default(), negative_fraction: 0.0, foreign_fraction: 0.0 }
    }
}

/// Per-cell targets for corners in a `width` x `height` frame: the
/// keypoint class is `8 * row + col` of the corner's pixel inside its cell
/// and the id class is the corner id. Cells without a corner hold the
/// dustbin classes. When two corners share a cell the first wins.
pub fn cell_targets(corners: &[IdPoint], width: usize, height: usize) -> (CellTargets, CellTargets) {
    let (hc, wc) = (height / CELL, width / CELL);
    let mut kp = CellTargets::filled(hc, wc, Some(KEYPOINT_DUSTBIN));
    let mut ids = CellTargets::filled(hc, wc, Some(ID_DUSTBIN));
    let mut taken = vec![false; hc * wc];
    for c in corners {
        let (px, py) = (c.x.round(), c.y.round());
        if px < 0.0 || py < 0.0 || px >= (wc * CELL) as f64 || py >= (hc * CELL) as f64 {
            continue;
        }
        let (px, py) = (px as usize, py as usize);
        let (cx, cy) = (px / CELL, py / CELL);
        if std::mem::replace(&mut taken[cy * wc + cx], true) {
            continue;
        }
        kp.set(cy, cx, Some(CELL * (py % CELL) + px % CELL));
        ids.set(cy, cx, Some(c.id));
    }
    (kp, ids)
}

/// The default dictionary with every bit inverted: same structure, none of
/// the target's codes.
pub fn foreign_dictionary(dict: &Dictionary) -> Result<Dictionary, EvalError> {
    let entries = dict
        .entries()
        .iter()
        .map(|e| MarkerBits::new(e.size(), e.as_slice().iter().map(|b| !b).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dictionary::new(format!("{}-inverted", dict.name()), entries)?)
}

fn clutter<R: Rng + ?Sized>(width: usize, height: usize, rng: &mut R) -> GrayImage {
    // Random blocks and a gradient: structure without chessboard corners
    // carrying valid markers.
    let base = rng.random_range(30.0..200.0);
    let (gx, gy) = (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
    let mut img = GrayImage::from_fn(width, height, |x, y| (base + gx * x as f64 + gy * y as f64).clamp(0.0, 255.0) as f32);
    for _ in 0..rng.random_range(3..10) {
        let (x0, y0) = (rng.random_range(0..width), rng.random_range(0..height));
        let (w, h) = (rng.random_range(4..width / 2), rng.random_range(4..height / 2));
        let v = rng.random_range(0.0..255.0) as f32;
        for y in y0..(y0 + h).min(height) {
            for x in x0..(x0 + w).min(width) {
                img.set(x, y, v);
            }
        }
    }
    img
}

/// Labelled frames for ChArUcoNet: board renders under random poses, then
/// augmentation. Negative frames get dustbin targets everywhere; boards
/// with foreign markers get dustbin ids and ignored keypoints.
pub fn gen_training_frames<R: Rng + ?Sized>(
    spec: &BoardSpec,
    n: usize,
    mix: &FrameMix,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<Vec<TrainingFrame>, EvalError> {
    cfg.validate().map_err(EvalError::Invalid)?;
    let style = &mix.style;
    if style.width % CELL != 0 || style.height % CELL != 0 {
        return Err(EvalError::Invalid(format!("frame size {}x{} is not a multiple of {CELL}", style.width, style.height)));
    }
    let k = default_camera(style.width, style.height);
    let foreign_spec = BoardSpec { dictionary: foreign_dictionary(&spec.dictionary)?, ..spec.clone() };
    let neg_cfg = AugmentConfig { homography: 0.0, ..cfg.clone() };
    let mut frames = Vec::with_capacity(n);
    for _ in 0..n {
        let roll: f64 = rng.random_range(0.0..1.0);
        let kind = if roll < mix.negative_fraction {
            FrameKind::Negative
        } else if roll < mix.negative_fraction + mix.foreign_fraction {
            FrameKind::ForeignDictionary
        } else {
            FrameKind::Positive
        };
        let (base, gt) = match kind {
            FrameKind::Negative => (clutter(style.width, style.height, rng), Vec::new()),
            FrameKind::Positive | FrameKind::ForeignDictionary => {
                let board = if kind == FrameKind::Positive { spec } else { &foreign_spec };
                let pose = random_view_pose(board, &k, style, rng);
                let f = render_frame(board, &k, &pose, style)?;
                (f.image, f.gt)
            }
        };
        let aug = augment(&base, &gt, if kind == FrameKind::Negative { &neg_cfg } else { cfg }, rng);
        let (mut kp, mut ids) = cell_targets(&aug.corners, style.width, style.height);
        if kind != FrameKind::Positive {
            ids = CellTargets::filled(ids.h, ids.w, Some(ID_DUSTBIN));
        }
        if kind == FrameKind::ForeignDictionary {
            kp = CellTargets::filled(kp.h, kp.w, None);
        }
        let corners = if kind == FrameKind::Positive { aug.corners } else { Vec::new() };
        frames.push(TrainingFrame { image: aug.image, kind, corners, keypoints: kp, ids, applied: aug.applied });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::match_marker_bits;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn view_homography_matches_projection() {
        let spec = BoardSpec::default_5x5();
        let style = ViewStyle::default();
        let k = default_camera(320, 240);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pose = random_view_pose(&spec, &k, &style, &mut rng);
        let h = view_homography(&spec, &k, &pose).unwrap();
        let gt = project(&k, &pose, &board_object_points(&spec)).unwrap();
        for p in &gt {
            let (u, w) = ((p.id % 4 + 1) as f64, (5 - (p.id / 4 + 1)) as f64);
            let (x, y) = h.apply(u, w).unwrap();
            assert!((x - p.x).abs() < 1e-9 && (y - p.y).abs() < 1e-9);
        }
    }

    #[test]
    fn targets_from_render_ground_truth() {
        let spec = BoardSpec::default_5x5();
        let mix = FrameMix { style: ViewStyle { width: 160, height: 128, ..ViewStyle::default() }, ..FrameMix::default() };
        let frames = gen_training_frames(&spec, 2, &mix, &AugmentConfig::none(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for f in &frames {
            assert!(f.applied.is_empty());
            assert_eq!(f.corners.len(), 16);
            for c in &f.corners {
                let (px, py) = (c.x.round() as usize, c.y.round() as usize);
                assert_eq!(f.ids.get(py / 8, px / 8), Some(c.id));
                assert_eq!(f.keypoints.get(py / 8, px / 8), Some(8 * (py % 8) + px % 8));
            }
            assert_eq!(f.ids.classes.iter().filter(|c| **c != Some(ID_DUSTBIN)).count(), 16);
        }
    }

    #[test]
    fn negative_and_foreign_labels() {
        let spec = BoardSpec::default_5x5();
        let style = ViewStyle { width: 96, height: 96, ..ViewStyle::default() };
        let neg = FrameMix { style: style.clone(), negative_fraction: 1.0, foreign_fraction: 0.0 };
        let f = &gen_training_frames(&spec, 1, &neg, &AugmentConfig::none(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap()[0];
        assert_eq!(f.kind, FrameKind::Negative);
        assert!(f.keypoints.classes.iter().all(|c| *c == Some(KEYPOINT_DUSTBIN)));
        assert!(f.ids.classes.iter().all(|c| *c == Some(ID_DUSTBIN)));
        let foreign = FrameMix { style, negative_fraction: 0.0, foreign_fraction: 1.0 };
        let f = &gen_training_frames(&spec, 1, &foreign, &AugmentConfig::none(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap()[0];
        assert_eq!(f.kind, FrameKind::ForeignDictionary);
        assert!(f.keypoints.classes.iter().all(|c| c.is_none()));
        assert!(f.ids.classes.iter().all(|c| *c == Some(ID_DUSTBIN)));
    }

    #[test]
    fn foreign_codes_do_not_decode() {
        let d = BoardSpec::default_5x5().dictionary;
        let f = foreign_dictionary(&d).unwrap();
        for e in f.entries() {
            assert_eq!(match_marker_bits(e, &d, 2).unwrap(), None);
        }
    }
}
