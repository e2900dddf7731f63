//! Pinhole camera model, projection, planar PnP with Levenberg-Marquardt
//! refinement, RANSAC and the mean reprojection error.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Vector3};
use rand::seq::index::sample;
use rand::Rng;

use crate::board::{ObjectPoint, ObjectPoints};
use crate::classical::ChArUcoDetection;
use crate::image::Homography;
use crate::IdPoint;

#[derive(Debug, thiserror::Error)]
pub enum PoseError {
    #[error("invalid intrinsics: {0}")]
    Intrinsics(String),
    #[error("point {id} has non-positive depth {depth}")]
    NonPositiveDepth { id: usize, depth: f64 },
    #[error("insufficient correspondences: {0} given, at least 4 required")]
    InsufficientCorrespondences(usize),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("no object point with id {0}")]
    UnknownId(usize),
    #[error("no consensus: best hypothesis has {0} inliers")]
    NoConsensus(usize),
    #[error("empty detection: reprojection error undefined")]
    EmptyDetection,
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Pinhole intrinsics with radial (`k1`, `k2`) and tangential (`p1`, `p2`)
/// distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub distortion: [f64; 4],
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, PoseError> {
        Self::with_distortion(fx, fy, cx, cy, [0.0; 4])
    }

    pub fn with_distortion(fx: f64, fy: f64, cx: f64, cy: f64, distortion: [f64; 4]) -> Result<Self, PoseError> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(PoseError::Intrinsics(format!("focal lengths must be positive, got {fx} {fy}")));
        }
        if !(cx.is_finite() && cy.is_finite() && distortion.iter().all(|d| d.is_finite())) {
            return Err(PoseError::Intrinsics("non-finite parameter".into()));
        }
        Ok(Self { fx, fy, cx, cy, distortion })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    fn has_distortion(&self) -> bool {
        self.distortion.iter().any(|&d| d != 0.0)
    }

    /// Normalized image coordinates to distorted normalized coordinates.
    pub fn distort(&self, x: f64, y: f64) -> (f64, f64) {
        let [k1, k2, p1, p2] = self.distortion;
        let r2 = x * x + y * y;
        let radial = 1.0 + k1 * r2 + k2 * r2 * r2;
        (x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x), y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y)
    }

    /// Pixel to undistorted normalized coordinates by fixed-point iteration.
    pub fn normalize(&self, u: f64, v: f64) -> (f64, f64) {
        let (xd, yd) = ((u - self.cx) / self.fx, (v - self.cy) / self.fy);
        if !self.has_distortion() {
            return (xd, yd);
        }
        let (mut x, mut y) = (xd, yd);
        for _ in 0..50 {
            let (dx, dy) = self.distort(x, y);
            let (nx, ny) = (x + xd - dx, y + yd - dy);
            let done = (nx - x).abs() + (ny - y).abs() < 1e-15;
            (x, y) = (nx, ny);
            if done {
                break;
            }
        }
        (x, y)
    }

    /// Camera-frame point to pixel; `None` when the depth is not positive.
    pub fn project_camera_point(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if !(p.z > 0.0) {
            return None;
        }
        let (x, y) = (p.x / p.z, p.y / p.z);
        let (x, y) = if self.has_distortion() { self.distort(x, y) } else { (x, y) };
        Some((self.fx * x + self.cx, self.fy * y + self.cy))
    }

    /// Whitespace-separated `fx fy cx cy [k1 k2 p1 p2]`.
    pub fn parse(text: &str) -> Result<Self, PoseError> {
        let vals: Vec<f64> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .map(|t| t.parse::<f64>().map_err(|_| PoseError::Intrinsics(format!("bad number {t:?}"))))
            .collect::<Result<_, _>>()?;
        match vals.len() {
            4 => Self::new(vals[0], vals[1], vals[2], vals[3]),
            8 => Self::with_distortion(vals[0], vals[1], vals[2], vals[3], [vals[4], vals[5], vals[6], vals[7]]),
            n => Err(PoseError::Intrinsics(format!("expected 4 or 8 values, found {n}"))),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PoseError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PoseError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let [k1, k2, p1, p2] = self.distortion;
        format!("{} {} {} {} {k1} {k2} {p1} {p2}\n", self.fx, self.fy, self.cx, self.cy)
    }
}

/// Board-to-camera rigid transform: `X_cam = R X_board + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    /// Ids of the correspondences supporting the pose.
    pub inliers: Vec<usize>,
    /// Mean reprojection error over the inliers, pixels.
    pub mean_reproj_err: f64,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation, inliers: Vec::new(), mean_reproj_err: 0.0 }
    }

    pub fn from_axis_angle(omega: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self::new(Rotation3::new(omega).into_inner(), translation)
    }

    pub fn transform(&self, p: &ObjectPoint) -> Vector3<f64> {
        self.rotation * Vector3::new(p.x, p.y, p.z) + self.translation
    }

    /// Angle of the relative rotation, radians.
    pub fn rotation_error(&self, other: &Pose) -> f64 {
        let rel = self.rotation * other.rotation.transpose();
        let c = ((rel.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        // acos loses precision near zero; use the skew part there.
        let s = 0.5 * Vector3::new(rel[(2, 1)] - rel[(1, 2)], rel[(0, 2)] - rel[(2, 0)], rel[(1, 0)] - rel[(0, 1)]).norm();
        s.atan2(c)
    }

    pub fn translation_error(&self, other: &Pose) -> f64 {
        (self.translation - other.translation).norm()
    }

    pub const CSV_HEADER: &'static str = "r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz,n_inliers,reproj_err";

    pub fn csv_row(&self) -> String {
        let mut row = String::new();
        for r in 0..3 {
            for c in 0..3 {
                let _ = write!(row, "{},", crate::eval::fmt6(self.rotation[(r, c)]));
            }
        }
        for v in self.translation.iter() {
            let _ = write!(row, "{},", crate::eval::fmt6(*v));
        }
        let _ = write!(row, "{},{}", self.inliers.len(), crate::eval::fmt6(self.mean_reproj_err));
        row
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }
}

/// Projects every object point; fails on the first point at or behind the
/// camera plane.
pub fn project(k: &CameraIntrinsics, pose: &Pose, pts: &ObjectPoints) -> Result<Vec<IdPoint>, PoseError> {
    pts.iter()
        .map(|p| {
            let c = pose.transform(p);
            k.project_camera_point(&c).map(|(x, y)| IdPoint::new(p.id, x, y)).ok_or(PoseError::NonPositiveDepth { id: p.id, depth: c.z })
        })
        .collect()
}

/// Mean Euclidean distance between detected corners and the projections of
/// their object points.
pub fn reprojection_error(k: &CameraIntrinsics, pose: &Pose, obj: &ObjectPoints, det: &ChArUcoDetection) -> Result<f64, PoseError> {
    if det.is_empty() {
        return Err(PoseError::EmptyDetection);
    }
    let mut sum = 0.0;
    for c in &det.corners {
        let p = obj.get(c.id).ok_or(PoseError::UnknownId(c.id))?;
        let cam = pose.transform(p);
        let (u, v) = k.project_camera_point(&cam).ok_or(PoseError::NonPositiveDepth { id: c.id, depth: cam.z })?;
        sum += (u - c.x).hypot(v - c.y);
    }
    Ok(sum / det.len() as f64)
}

#[derive(Debug, Clone, Copy)]
struct Correspondence {
    id: usize,
    obj: Vector3<f64>,
    img: (f64, f64),
}

fn match_points(obj: &ObjectPoints, img_pts: &[IdPoint]) -> Result<Vec<Correspondence>, PoseError> {
    img_pts
        .iter()
        .map(|q| {
            let p = obj.get(q.id).ok_or(PoseError::UnknownId(q.id))?;
            Ok(Correspondence { id: q.id, obj: Vector3::new(p.x, p.y, p.z), img: (q.x, q.y) })
        })
        .collect()
}

fn residual(k: &CameraIntrinsics, r: &Matrix3<f64>, t: &Vector3<f64>, c: &Correspondence) -> Option<(f64, f64)> {
    let (u, v) = k.project_camera_point(&(r * c.obj + t))?;
    Some((u - c.img.0, v - c.img.1))
}

fn mean_error(k: &CameraIntrinsics, r: &Matrix3<f64>, t: &Vector3<f64>, cs: &[Correspondence]) -> f64 {
    cs.iter().map(|c| residual(k, r, t, c).map_or(f64::INFINITY, |(a, b)| a.hypot(b))).sum::<f64>() / cs.len() as f64
}

/// Planar pose from the board-plane homography: `H ~ [r1 r2 t]` in
/// normalized coordinates.
fn homography_init(k: &CameraIntrinsics, cs: &[Correspondence]) -> Result<(Matrix3<f64>, Vector3<f64>), PoseError> {
    let src: Vec<(f64, f64)> = cs.iter().map(|c| (c.obj.x, c.obj.y)).collect();
    let dst: Vec<(f64, f64)> = cs.iter().map(|c| k.normalize(c.img.0, c.img.1)).collect();
    let h = Homography::from_correspondences(&src, &dst).map_err(|e| PoseError::Degenerate(e.to_string()))?;
    let m = h.matrix();
    let (h1, h2, h3) = (m.column(0).into_owned(), m.column(1).into_owned(), m.column(2).into_owned());
    let mut scale = 2.0 / (h1.norm() + h2.norm());
    // The board has to be in front of the camera.
    if h3.z * scale < 0.0 {
        scale = -scale;
    }
    let (r1, r2, t) = (h1 * scale, h2 * scale, h3 * scale);
    let approx = Matrix3::from_columns(&[r1, r2, r1.cross(&r2)]);
    let svd = approx.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        r = u * fix * vt;
    }
    Ok((r, t))
}

const LM_MAX_ITERS: usize = 100;
const LM_STEP_TOL: f64 = 1e-10;

/// Levenberg-Marquardt over an axis-angle increment and the translation.
/// The Jacobian is taken by central differences.
fn refine_lm(
    k: &CameraIntrinsics,
    cs: &[Correspondence],
    mut r: Matrix3<f64>,
    mut t: Vector3<f64>,
) -> Result<(Matrix3<f64>, Vector3<f64>), PoseError> {
    let n = cs.len();
    let apply = |r: &Matrix3<f64>, t: &Vector3<f64>, d: &DVector<f64>| {
        let rot = Rotation3::new(Vector3::new(d[0], d[1], d[2])).into_inner() * r;
        (rot, t + Vector3::new(d[3], d[4], d[5]))
    };
    let residuals = |r: &Matrix3<f64>, t: &Vector3<f64>| -> Option<DVector<f64>> {
        let mut v = DVector::zeros(2 * n);
        for (i, c) in cs.iter().enumerate() {
            let (a, b) = residual(k, r, t, c)?;
            v[2 * i] = a;
            v[2 * i + 1] = b;
        }
        Some(v)
    };
    let mut f = residuals(&r, &t).ok_or_else(|| PoseError::Degenerate("initial pose puts points behind the camera".into()))?;
    let mut cost = f.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..LM_MAX_ITERS {
        let mut jac = DMatrix::zeros(2 * n, 6);
        for j in 0..6 {
            let h = if j < 3 { 1e-7 } else { 1e-7 * t.norm().max(1e-3) };
            let mut d = DVector::zeros(6);
            d[j] = h;
            let (rp, tp) = apply(&r, &t, &d);
            d[j] = -h;
            let (rm, tm) = apply(&r, &t, &d);
            let (Some(fp), Some(fm)) = (residuals(&rp, &tp), residuals(&rm, &tm)) else {
                return Err(PoseError::Degenerate("Jacobian probe crosses the camera plane".into()));
            };
            jac.set_column(j, &((fp - fm) / (2.0 * h)));
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &f;
        let mut accepted = false;
        let mut small_step = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for d in 0..6 {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = -chol.solve(&g);
            let (rn, tn) = apply(&r, &t, &step);
            if let Some(fnew) = residuals(&rn, &tn) {
                let c = fnew.norm_squared();
                if c <= cost {
                    small_step = step.norm() < LM_STEP_TOL;
                    (r, t, f, cost) = (rn, tn, fnew, c);
                    lambda = (lambda * 0.3).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            if step.norm() < LM_STEP_TOL {
                small_step = true;
                break;
            }
            lambda *= 10.0;
        }
        if jtj.determinant().abs() < 1e-300 {
            return Err(PoseError::Degenerate("singular normal equations".into()));
        }
        if small_step || !accepted {
            break;
        }
    }
    Ok((orthonormalize(&r), t))
}

fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let out = svd.u.expect("u requested") * svd.v_t.expect("v requested");
    if out.determinant() < 0.0 {
        -out
    } else {
        out
    }
}

fn check_planar(cs: &[Correspondence]) -> Result<(), PoseError> {
    if cs.len() < 4 {
        return Err(PoseError::InsufficientCorrespondences(cs.len()));
    }
    if let Some(c) = cs.iter().find(|c| c.obj.z.abs() > 1e-12) {
        return Err(PoseError::Degenerate(format!("object point {} is off the Z = 0 plane", c.id)));
    }
    let n = cs.len() as f64;
    let (mx, my) = (cs.iter().map(|c| c.obj.x).sum::<f64>() / n, cs.iter().map(|c| c.obj.y).sum::<f64>() / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for c in cs {
        let (dx, dy) = (c.obj.x - mx, c.obj.y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    // Smaller eigenvalue of the scatter matrix relative to the larger one.
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (lo, hi) = (0.5 * tr - disc, 0.5 * tr + disc);
    if !(hi > 0.0) || lo < 1e-9 * hi {
        return Err(PoseError::Degenerate("object points are collinear".into()));
    }
    Ok(())
}

fn solve_correspondences(k: &CameraIntrinsics, cs: &[Correspondence]) -> Result<Pose, PoseError> {
    check_planar(cs)?;
    let (r0, t0) = homography_init(k, cs)?;
    let (r, t) = refine_lm(k, cs, r0, t0)?;
    Ok(Pose { rotation: r, translation: t, inliers: cs.iter().map(|c| c.id).collect(), mean_reproj_err: mean_error(k, &r, &t, cs) })
}

/// Pose of a planar (Z = 0) target from at least four 2D-3D matches, paired
/// by corner id.
pub fn solve_pnp(obj: &ObjectPoints, img_pts: &[IdPoint], k: &CameraIntrinsics) -> Result<Pose, PoseError> {
    if img_pts.len() < 4 {
        return Err(PoseError::InsufficientCorrespondences(img_pts.len()));
    }
    solve_correspondences(k, &match_points(obj, img_pts)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    /// Largest reprojection residual of an inlier, pixels.
    pub inlier_thresh: f64,
    pub max_iters: usize,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self { inlier_thresh: 3.0, max_iters: 100 }
    }
}

fn inliers_of(k: &CameraIntrinsics, r: &Matrix3<f64>, t: &Vector3<f64>, cs: &[Correspondence], thresh: f64) -> Vec<usize> {
    (0..cs.len()).filter(|&i| residual(k, r, t, &cs[i]).is_some_and(|(a, b)| a.hypot(b) <= thresh)).collect()
}

/// Four-point hypotheses scored by inlier count, then a full refit on the
/// best consensus set.
pub fn solve_pnp_ransac<R: Rng + ?Sized>(
    obj: &ObjectPoints,
    img_pts: &[IdPoint],
    k: &CameraIntrinsics,
    params: &RansacParams,
    rng: &mut R,
) -> Result<Pose, PoseError> {
    if img_pts.len() < 4 {
        return Err(PoseError::InsufficientCorrespondences(img_pts.len()));
    }
    let cs = match_points(obj, img_pts)?;
    let mut best: Vec<usize> = Vec::new();
    let mut best_err = f64::INFINITY;
    for _ in 0..params.max_iters {
        let pick: Vec<Correspondence> = sample(rng, cs.len(), 4).iter().map(|i| cs[i]).collect();
        let Ok(hyp) = solve_correspondences(k, &pick) else { continue };
        let inl = inliers_of(k, &hyp.rotation, &hyp.translation, &cs, params.inlier_thresh);
        let sel: Vec<Correspondence> = inl.iter().map(|&i| cs[i]).collect();
        let err = if sel.is_empty() { f64::INFINITY } else { mean_error(k, &hyp.rotation, &hyp.translation, &sel) };
        if inl.len() > best.len() || (inl.len() == best.len() && err < best_err) {
            (best, best_err) = (inl, err);
        }
        if best.len() == cs.len() {
            break;
        }
    }
    if best.len() < 4 {
        return Err(PoseError::NoConsensus(best.len()));
    }
    let mut pose = solve_correspondences(k, &best.iter().map(|&i| cs[i]).collect::<Vec<_>>())?;
    let refit = inliers_of(k, &pose.rotation, &pose.translation, &cs, params.inlier_thresh);
    if refit.len() >= 4 && refit.len() > best.len() {
        pose = solve_correspondences(k, &refit.iter().map(|&i| cs[i]).collect::<Vec<_>>())?;
    }
    Ok(pose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::{board_object_points, BoardSpec};

    fn camera() -> CameraIntrinsics {
        CameraIntrinsics::new(300.0, 300.0, 159.5, 119.5).unwrap()
    }

    #[test]
    fn principal_point_projection() {
        let k = CameraIntrinsics::new(100.0, 100.0, 160.0, 160.0).unwrap();
        let pose = Pose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, 1.0));
        let pts = ObjectPoints(vec![ObjectPoint { id: 3, x: 0.0, y: 0.0, z: 0.0 }, ObjectPoint { id: 4, x: 0.1, y: 0.0, z: 0.0 }]);
        let out = project(&k, &pose, &pts).unwrap();
        assert_eq!((out[0].x, out[0].y), (160.0, 160.0));
        let k2 = CameraIntrinsics::new(200.0, 100.0, 160.0, 160.0).unwrap();
        let out2 = project(&k2, &pose, &pts).unwrap();
        assert!(((out2[1].x - 160.0) - 2.0 * (out[1].x - 160.0)).abs() < 1e-12);
        let behind = Pose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, -1.0));
        assert!(matches!(project(&k, &behind, &pts), Err(PoseError::NonPositiveDepth { id: 3, .. })));
    }

    #[test]
    fn zero_distortion_matches_plain_model() {
        let k = camera();
        let kd = CameraIntrinsics::with_distortion(300.0, 300.0, 159.5, 119.5, [0.0; 4]).unwrap();
        let pose = Pose::from_axis_angle(Vector3::new(0.1, -0.2, 0.05), Vector3::new(-0.1, -0.1, 0.5));
        let pts = board_object_points(&BoardSpec::default_5x5());
        assert_eq!(project(&k, &pose, &pts).unwrap(), project(&kd, &pose, &pts).unwrap());
    }

    #[test]
    fn undistortion_inverts_distortion() {
        let k = CameraIntrinsics::with_distortion(300.0, 310.0, 160.0, 120.0, [-0.2, 0.05, 0.001, -0.002]).unwrap();
        let (x, y) = (0.31, -0.22);
        let (xd, yd) = k.distort(x, y);
        let (u, v) = (k.fx * xd + k.cx, k.fy * yd + k.cy);
        let (bx, by) = k.normalize(u, v);
        assert!((bx - x).abs() < 1e-12 && (by - y).abs() < 1e-12);
    }

    #[test]
    fn three_points_are_insufficient() {
        let spec = BoardSpec::default_5x5();
        let obj = board_object_points(&spec);
        let pts: Vec<IdPoint> = (0..3).map(|i| IdPoint::new(i, i as f64, 1.0)).collect();
        let err = solve_pnp(&obj, &pts, &camera()).unwrap_err();
        assert!(err.to_string().contains("insufficient correspondences"));
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let obj = board_object_points(&BoardSpec::default_5x5());
        let pts: Vec<IdPoint> = (0..4).map(|i| IdPoint::new(i, 100.0 + 10.0 * i as f64, 50.0)).collect();
        assert!(matches!(solve_pnp(&obj, &pts, &camera()), Err(PoseError::Degenerate(_))));
    }

    #[test]
    fn recovers_pose_with_distortion() {
        let k = CameraIntrinsics::with_distortion(300.0, 300.0, 159.5, 119.5, [-0.1, 0.02, 0.001, 0.0]).unwrap();
        let truth = Pose::from_axis_angle(Vector3::new(2.9, 0.3, -0.2), Vector3::new(-0.1, 0.08, 0.45));
        let obj = board_object_points(&BoardSpec::default_5x5());
        let img = project(&k, &truth, &obj).unwrap();
        let est = solve_pnp(&obj, &img, &k).unwrap();
        assert!(est.translation_error(&truth) < 1e-8, "{:?}", est.translation);
        assert!(est.rotation_error(&truth) < 1e-8);
    }

    #[test]
    fn intrinsics_file_format() {
        let k = CameraIntrinsics::parse("300 301 159.5 119.5\n").unwrap();
        assert_eq!((k.fx, k.fy, k.distortion), (300.0, 301.0, [0.0; 4]));
        let kd = CameraIntrinsics::parse(&k.to_text()).unwrap();
        assert_eq!(k, kd);
        assert!(CameraIntrinsics::parse("1 2 3").is_err());
        assert!(CameraIntrinsics::parse("-1 2 3 4").is_err());
    }

    #[test]
    fn pose_csv_columns() {
        let p = Pose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, 1.0));
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0].split(',').count(), 14);
        assert_eq!(lines[1], "1,0,0,0,1,0,0,0,1,0,0,1,0,0");
    }
}
