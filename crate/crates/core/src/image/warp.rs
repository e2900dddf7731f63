use nalgebra::{DMatrix, Matrix3, Vector3};

use super::{GrayImage, ImageError};

/// Projective map of the plane, normalized so that `h[2][2] == 1` whenever
/// that entry is nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    pub fn new(m: Matrix3<f64>) -> Result<Self, ImageError> {
        let m = if m[(2, 2)].abs() > 1e-15 { m / m[(2, 2)] } else { m };
        let det = m.determinant();
        if !(det.abs() > 1e-12) {
            return Err(ImageError::SingularHomography(det));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self(Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn inverse(&self) -> Self {
        let inv = self.0.try_inverse().expect("homography is invertible by construction");
        Self::new(inv).unwrap_or(Self(inv))
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Self) -> Result<Self, ImageError> {
        Self::new(self.0 * other.0)
    }

    /// Map a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let v = self.0 * Vector3::new(x, y, 1.0);
        if v.z.abs() < 1e-15 {
            None
        } else {
            Some((v.x / v.z, v.y / v.z))
        }
    }

    /// Normalized DLT from `src` to `dst` over all given correspondences.
    pub fn from_correspondences(src: &[(f64, f64)], dst: &[(f64, f64)]) -> Result<Self, ImageError> {
        let n = src.len().min(dst.len());
        if n < 4 {
            return Err(ImageError::DegenerateCorrespondences(n));
        }
        let (ts, ps) = normalize_points(&src[..n]).ok_or(ImageError::DegenerateCorrespondences(n))?;
        let (td, pd) = normalize_points(&dst[..n]).ok_or(ImageError::DegenerateCorrespondences(n))?;
        // Pad to at least 9 rows so the SVD exposes the full right null space.
        let rows = (2 * n).max(9);
        let mut a = DMatrix::<f64>::zeros(rows, 9);
        for (i, (&(x, y), &(u, v))) in ps.iter().zip(&pd).enumerate() {
            let r = 2 * i;
            a.row_mut(r).copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
            a.row_mut(r + 1).copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
        }
        let svd = a.svd(false, true);
        let vt = svd.v_t.ok_or(ImageError::DegenerateCorrespondences(n))?;
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nine singular values");
        let sv = &svd.singular_values;
        let mut sorted: Vec<f64> = sv.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        // A second vanishing singular value means the solution is not unique.
        if sorted[1] <= 1e-10 * sorted[8] {
            return Err(ImageError::DegenerateCorrespondences(n));
        }
        let h = vt.row(imin);
        let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
        let td_inv = td.try_inverse().ok_or(ImageError::DegenerateCorrespondences(n))?;
        Self::new(td_inv * hn * ts)
    }
}

/// Hartley normalization: centroid to origin, mean distance sqrt(2).
fn normalize_points(pts: &[(f64, f64)]) -> Option<(Matrix3<f64>, Vec<(f64, f64)>)> {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_dist = pts.iter().map(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()).sum::<f64>() / n;
    if !(mean_dist > 1e-12) {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    Some((t, pts.iter().map(|p| (s * (p.0 - cx), s * (p.1 - cy))).collect()))
}

/// Inverse-mapped bilinear warp: `out(p) = img(H^-1 p)`, black outside.
pub fn warp_homography(
    img: &GrayImage,
    h: &Homography,
    out_width: usize,
    out_height: usize,
) -> Result<GrayImage, ImageError> {
    let h = Homography::new(*h.matrix())?;
    let inv = h.inverse();
    Ok(GrayImage::from_fn(out_width, out_height, |x, y| match inv.apply(x as f64, y as f64) {
        Some((sx, sy)) => img.bilinear(sx, sy, 0.0),
        None => 0.0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_rejected() {
        let m = Matrix3::new(1.0, 2.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(Homography::new(m), Err(ImageError::SingularHomography(_))));
        let img = GrayImage::filled(3, 3, 1.0);
        let bad = Homography(m);
        assert!(warp_homography(&img, &bad, 3, 3).is_err());
    }

    #[test]
    fn normalizes_bottom_right() {
        let h = Homography::new(Matrix3::identity() * 4.0).unwrap();
        assert_eq!(*h.matrix(), Matrix3::identity());
    }

    #[test]
    fn identity_warp() {
        let img = GrayImage::from_fn(11, 7, |x, y| (x * 20 + y) as f32);
        assert_eq!(warp_homography(&img, &Homography::identity(), 11, 7).unwrap(), img);
    }

    #[test]
    fn translation_warp() {
        let img = GrayImage::from_fn(8, 4, |x, y| (1 + x * 20 + y) as f32);
        let out = warp_homography(&img, &Homography::translation(1.0, 0.0), 8, 4).unwrap();
        for y in 0..4 {
            assert_eq!(out.get(0, y), 0.0);
            for x in 1..8 {
                assert_eq!(out.get(x, y), img.get(x - 1, y));
            }
        }
    }

    #[test]
    fn dlt_recovers_known_homography() {
        let truth = Homography::new(Matrix3::new(1.1, 0.05, 12.0, -0.03, 0.95, -4.0, 1e-4, -2e-4, 1.0)).unwrap();
        let src: Vec<(f64, f64)> = (0..5).flat_map(|i| (0..4).map(move |j| (i as f64 * 30.0, j as f64 * 25.0))).collect();
        let dst: Vec<(f64, f64)> = src.iter().map(|&(x, y)| truth.apply(x, y).unwrap()).collect();
        let est = Homography::from_correspondences(&src, &dst).unwrap();
        for (a, b) in est.matrix().iter().zip(truth.matrix().iter()) {
            assert!((a - b).abs() < 1e-9);
        }
        let four = Homography::from_correspondences(&src[..4], &dst[..4]);
        // First four source points are collinear (same x).
        assert!(four.is_err());
        let idx = [0, 3, 16, 19];
        let s4: Vec<_> = idx.iter().map(|&i| src[i]).collect();
        let d4: Vec<_> = idx.iter().map(|&i| dst[i]).collect();
        let est4 = Homography::from_correspondences(&s4, &d4).unwrap();
        let (x, y) = est4.apply(45.0, 40.0).unwrap();
        let (tx, ty) = truth.apply(45.0, 40.0).unwrap();
        assert!((x - tx).abs() < 1e-8 && (y - ty).abs() < 1e-8);
    }
}
