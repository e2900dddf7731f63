use nalgebra::{Matrix2, Vector2};

use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubpixParams {
    pub half_window: usize,
    /// Stop once an iteration moves the point less than this many pixels.
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for SubpixParams {
    fn default() -> Self {
        Self { half_window: 5, eps: 1e-3, max_iter: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubpixResult {
    pub x: f64,
    pub y: f64,
    /// False when the input point was returned unchanged: flat window,
    /// window leaving the image, or a solution outside the window.
    pub refined: bool,
}

/// Saddle-point refinement: every window pixel `q` whose gradient `G(q)`
/// is nonzero must see the corner along its edge, so the corner solves
/// `sum G G^T p = sum G G^T q`. Iterates with Gaussian window weights.
pub fn corner_subpix(img: &GrayImage, pt: (f64, f64), params: &SubpixParams) -> SubpixResult {
    let unrefined = SubpixResult { x: pt.0, y: pt.1, refined: false };
    let hw = params.half_window as f64;
    let inside = |p: (f64, f64)| {
        p.0 - hw - 1.0 >= 0.0 && p.1 - hw - 1.0 >= 0.0 && p.0 + hw + 1.0 <= (img.width() - 1) as f64 && p.1 + hw + 1.0 <= (img.height() - 1) as f64
    };
    if params.half_window == 0 || !inside(pt) {
        return unrefined;
    }
    let k = params.half_window as isize;
    let coeff = 1.0 / (hw * hw);
    let mut p = pt;
    for _ in 0..params.max_iter.max(1) {
        let mut a = Matrix2::zeros();
        let mut rhs = Vector2::zeros();
        for dy in -k..=k {
            for dx in -k..=k {
                let q = (p.0 + dx as f64, p.1 + dy as f64);
                let gx = 0.5 * (img.bilinear_clamped(q.0 + 1.0, q.1) - img.bilinear_clamped(q.0 - 1.0, q.1)) as f64;
                let gy = 0.5 * (img.bilinear_clamped(q.0, q.1 + 1.0) - img.bilinear_clamped(q.0, q.1 - 1.0)) as f64;
                let w = (-((dx * dx + dy * dy) as f64) * coeff).exp();
                let g = Matrix2::new(gx * gx, gx * gy, gx * gy, gy * gy) * w;
                a += g;
                rhs += g * Vector2::new(q.0, q.1);
            }
        }
        let scale = a.trace();
        if !(scale > 1e-9) || a.determinant().abs() < 1e-9 * scale * scale {
            return unrefined;
        }
        let Some(inv) = a.try_inverse() else { return unrefined };
        let next = inv * rhs;
        let moved = (next.x - p.0).hypot(next.y - p.1);
        p = (next.x, next.y);
        if (p.0 - pt.0).abs() > hw || (p.1 - pt.1).abs() > hw || !inside(p) {
            return unrefined;
        }
        if moved < params.eps {
            break;
        }
    }
    SubpixResult { x: p.0, y: p.1, refined: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::render_saddle;

    fn saddle_at(x: f64, y: f64) -> GrayImage {
        // Embed the 24x24 renderer output by rendering a larger canvas.
        render_saddle(100, (x, y), 0.3, 1.9, 30.0, 220.0, 8)
    }

    #[test]
    fn converges_on_antialiased_corner() {
        let img = saddle_at(50.25, 50.75);
        let r = corner_subpix(&img, (52.0, 49.0), &SubpixParams::default());
        assert!(r.refined);
        assert!((r.x - 50.25).hypot(r.y - 50.75) < 0.1, "{r:?}");
        let again = corner_subpix(&img, (r.x, r.y), &SubpixParams::default());
        assert!((again.x - r.x).hypot(again.y - r.y) < 1e-3);
    }

    #[test]
    fn flat_patch_is_unrefined() {
        let r = corner_subpix(&GrayImage::filled(40, 40, 80.0), (20.3, 19.6), &SubpixParams::default());
        assert_eq!(r, SubpixResult { x: 20.3, y: 19.6, refined: false });
    }

    #[test]
    fn window_at_the_border_is_unrefined() {
        let img = saddle_at(3.0, 3.0);
        assert!(!corner_subpix(&img, (3.0, 3.0), &SubpixParams::default()).refined);
    }
}
