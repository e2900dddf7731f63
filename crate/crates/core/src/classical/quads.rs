use super::contours::{approx_closed_polygon, contour_perimeter, dark_region_borders};
use super::MarkerCandidate;
use crate::image::GrayImage;

/// Relative Douglas-Peucker tolerance.
const POLY_EPS_FRACTION: f64 = 0.03;
/// Largest ratio of outline length to quad perimeter. A staircase outline,
/// such as the diagonally connected black squares of a chessboard, can
/// simplify to four vertices but is far longer than the resulting quad.
const MAX_OUTLINE_RATIO: f64 = 1.5;

/// Convex four-sided dark-region outlines with every side at least
/// `min_side` pixels long. Corners lie on the dark/light transition and are
/// ordered top-left, bottom-left, bottom-right, top-right (counter-clockwise
/// on screen).
pub fn find_quads(binary: &GrayImage, min_side: f64) -> Vec<MarkerCandidate> {
    let min_pixels = (4.0 * min_side).max(4.0) as usize;
    let mut quads = Vec::new();
    for border in dark_region_borders(binary, min_pixels) {
        let pts: Vec<(f64, f64)> = border.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        let perimeter = contour_perimeter(&pts);
        if perimeter < 4.0 * min_side {
            continue;
        }
        let poly = approx_closed_polygon(&pts, POLY_EPS_FRACTION * perimeter);
        if poly.len() != 4 {
            continue;
        }
        let vertices: Vec<(f64, f64)> = poly.iter().map(|&i| pts[i]).collect();
        if !is_convex(&vertices) {
            continue;
        }
        let corners = refine_corners(&pts, &poly).unwrap_or_else(|| [vertices[0], vertices[1], vertices[2], vertices[3]]);
        if !is_convex(&corners) || (0..4).any(|i| dist(corners[i], corners[(i + 1) % 4]) < min_side) {
            continue;
        }
        let quad_perimeter: f64 = (0..4).map(|i| dist(corners[i], corners[(i + 1) % 4])).sum();
        if perimeter > MAX_OUTLINE_RATIO * quad_perimeter {
            continue;
        }
        quads.push(MarkerCandidate::new(order_quad(corners)));
    }
    quads
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

pub(crate) fn is_convex(v: &[(f64, f64)]) -> bool {
    let n = v.len();
    let signs: Vec<f64> = (0..n).map(|i| cross(v[i], v[(i + 1) % n], v[(i + 2) % n])).collect();
    signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0)
}

/// Starting at the vertex nearest the image origin, counter-clockwise on
/// screen (negative shoelace area with y pointing down).
pub(crate) fn order_quad(mut c: [(f64, f64); 4]) -> [(f64, f64); 4] {
    let area: f64 = (0..4).map(|i| c[i].0 * c[(i + 1) % 4].1 - c[(i + 1) % 4].0 * c[i].1).sum();
    if area > 0.0 {
        c.reverse();
    }
    let start = (0..4).min_by(|&a, &b| (c[a].0 + c[a].1).total_cmp(&(c[b].0 + c[b].1))).expect("four corners");
    [c[start], c[(start + 1) % 4], c[(start + 2) % 4], c[(start + 3) % 4]]
}

/// Total-least-squares line through each side's contour pixels, pushed
/// outward onto the pixel transition, intersected with its neighbours.
fn refine_corners(pts: &[(f64, f64)], poly: &[usize]) -> Option<[(f64, f64); 4]> {
    let n = pts.len();
    let mut lines = Vec::with_capacity(4);
    for i in 0..4 {
        let (a, b) = (poly[i], poly[(i + 1) % 4]);
        let len = (b + n - a) % n;
        let skip = ((len as f64) * 0.1).ceil() as usize + 1;
        let side: Vec<(f64, f64)> = if len > 2 * skip + 1 {
            (a + skip..a + len - skip + 1).map(|k| pts[k % n]).collect()
        } else {
            vec![pts[a], pts[b]]
        };
        let m = side.len() as f64;
        let (cx, cy) = (side.iter().map(|p| p.0).sum::<f64>() / m, side.iter().map(|p| p.1).sum::<f64>() / m);
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in &side {
            let (dx, dy) = (p.0 - cx, p.1 - cy);
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let mut dir = (theta.cos(), theta.sin());
        let travel = (pts[b].0 - pts[a].0, pts[b].1 - pts[a].1);
        if dir.0 * travel.0 + dir.1 * travel.1 < 0.0 {
            dir = (-dir.0, -dir.1);
        }
        // Clockwise traversal keeps the region on the right, so the
        // outward normal points left of the direction of travel.
        let normal = (dir.1, -dir.0);
        let shift = 0.5 * normal.0.abs().max(normal.1.abs());
        lines.push(((cx + shift * normal.0, cy + shift * normal.1), dir));
    }
    let mut corners = [(0.0, 0.0); 4];
    for i in 0..4 {
        // Vertex `i` joins side `i - 1` and side `i`.
        let (p, d) = lines[(i + 3) % 4];
        let (q, e) = lines[i];
        let det = d.0 * (-e.1) - d.1 * (-e.0);
        if det.abs() < 1e-6 {
            return None;
        }
        let (rx, ry) = (q.0 - p.0, q.1 - p.1);
        let t = (rx * (-e.1) - ry * (-e.0)) / det;
        corners[i] = (p.0 + t * d.0, p.1 + t * d.1);
    }
    Some(corners)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_image_has_no_quads() {
        assert!(find_quads(&GrayImage::filled(50, 40, 255.0), 5.0).is_empty());
    }

    #[test]
    fn filled_square_corners_on_pixel_edges() {
        // Dark pixels 10..=29 cover [9.5, 29.5] in continuous coordinates.
        let img = GrayImage::from_fn(50, 50, |x, y| if (10..30).contains(&x) && (12..32).contains(&y) { 0.0 } else { 255.0 });
        let quads = find_quads(&img, 5.0);
        assert_eq!(quads.len(), 1);
        let expect = [(9.5, 11.5), (9.5, 31.5), (29.5, 31.5), (29.5, 11.5)];
        for (c, e) in quads[0].quad.iter().zip(expect) {
            assert!(dist(*c, e) < 1e-9, "{c:?} vs {e:?}");
        }
    }

    #[test]
    fn ordering_is_counter_clockwise_from_top_left() {
        let o = order_quad([(10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (0.0, 0.0)]);
        assert_eq!(o, [(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)]);
    }
}
