use crate::image::GrayImage;

/// Clockwise on screen (y down), starting west.
const NEIGHBORS: [(isize, isize); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

/// Outer borders of the 8-connected dark (zero) regions of a binary image,
/// each traced clockwise from its top-left pixel. Regions smaller than
/// `min_pixels` are skipped.
pub fn dark_region_borders(binary: &GrayImage, min_pixels: usize) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (binary.width(), binary.height());
    let mut labels = vec![0u32; w * h];
    let mut borders = Vec::new();
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if labels[start] != 0 || binary.pixels()[start] != 0.0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        let mut size = 0usize;
        while let Some(p) = stack.pop() {
            size += 1;
            let (px, py) = ((p % w) as isize, (p / w) as isize);
            for (dx, dy) in NEIGHBORS {
                let (nx, ny) = (px + dx, py + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let q = ny as usize * w + nx as usize;
                if labels[q] == 0 && binary.pixels()[q] == 0.0 {
                    labels[q] = next;
                    stack.push(q);
                }
            }
        }
        if size >= min_pixels {
            borders.push(trace_border(&labels, w, h, start, next));
        }
    }
    borders
}

/// Moore-neighbour tracing of the region containing `start`, which must be
/// its first pixel in raster order.
fn trace_border(labels: &[u32], w: usize, h: usize, start: usize, label: u32) -> Vec<(usize, usize)> {
    let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < w as isize && y < h as isize && labels[y as usize * w + x as usize] == label;
    let s = ((start % w) as isize, (start / w) as isize);
    let mut contour = vec![(s.0 as usize, s.1 as usize)];
    // Every neighbour scanned before the first hit is outside the region,
    // since `start` comes first in raster order.
    let Some(first_dir) = (0..8).find(|&d| inside(s.0 + NEIGHBORS[d].0, s.1 + NEIGHBORS[d].1)) else {
        return contour;
    };
    let mut cur = s;
    let mut dir = first_dir;
    loop {
        cur = (cur.0 + NEIGHBORS[dir].0, cur.1 + NEIGHBORS[dir].1);
        // Resume the clockwise scan at the last outside pixel examined
        // before stepping here, expressed relative to the new pixel.
        let from_dir = if dir % 2 == 0 { (dir + 6) % 8 } else { (dir + 5) % 8 };
        let nd = (0..8)
            .map(|k| (from_dir + k) % 8)
            .find(|&d| inside(cur.0 + NEIGHBORS[d].0, cur.1 + NEIGHBORS[d].1))
            .expect("a traced pixel has the previous pixel as neighbour");
        if cur == s && nd == first_dir {
            break;
        }
        contour.push((cur.0 as usize, cur.1 as usize));
        dir = nd;
        if contour.len() > 4 * w * h {
            break;
        }
    }
    contour
}

fn perp_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = dx.hypot(dy);
    if len < 1e-12 {
        return (p.0 - a.0).hypot(p.1 - a.1);
    }
    ((p.0 - a.0) * dy - (p.1 - a.1) * dx).abs() / len
}

fn douglas_peucker(pts: &[(f64, f64)], lo: usize, hi: usize, eps: f64, keep: &mut Vec<usize>) {
    if hi <= lo + 1 {
        return;
    }
    let (mut best, mut best_d) = (lo, -1.0);
    for i in lo + 1..hi {
        let d = perp_distance(pts[i], pts[lo], pts[hi]);
        if d > best_d {
            best = i;
            best_d = d;
        }
    }
    if best_d > eps {
        douglas_peucker(pts, lo, best, eps, keep);
        keep.push(best);
        douglas_peucker(pts, best, hi, eps, keep);
    }
}

/// Simplify a closed contour; returns indices into `contour` in order.
pub fn approx_closed_polygon(contour: &[(f64, f64)], eps: f64) -> Vec<usize> {
    let n = contour.len();
    if n < 3 {
        return (0..n).collect();
    }
    let far = (1..n)
        .max_by(|&a, &b| {
            let d = |i: usize| (contour[i].0 - contour[0].0).hypot(contour[i].1 - contour[0].1);
            d(a).total_cmp(&d(b))
        })
        .expect("n >= 3");
    let mut ring: Vec<(f64, f64)> = contour.to_vec();
    ring.push(contour[0]);
    let mut keep = vec![0];
    douglas_peucker(&ring, 0, far, eps, &mut keep);
    keep.push(far);
    douglas_peucker(&ring, far, n, eps, &mut keep);
    // Drop vertices that ended up on a straight run of the closed polygon,
    // such as the arbitrary starting point.
    loop {
        let m = keep.len();
        if m <= 3 {
            break;
        }
        let redundant = (0..m).find(|&i| {
            let (a, p, b) = (contour[keep[(i + m - 1) % m]], contour[keep[i]], contour[keep[(i + 1) % m]]);
            perp_distance(p, a, b) <= eps
        });
        match redundant {
            Some(i) => {
                keep.remove(i);
            }
            None => break,
        }
    }
    keep
}

pub fn contour_perimeter(contour: &[(f64, f64)]) -> f64 {
    let n = contour.len();
    (0..n).map(|i| {
        let (a, b) = (contour[i], contour[(i + 1) % n]);
        (a.0 - b.0).hypot(a.1 - b.1)
    })
    .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traces_a_square_clockwise() {
        let img = GrayImage::from_fn(10, 10, |x, y| if (2..6).contains(&x) && (3..7).contains(&y) { 0.0 } else { 255.0 });
        let borders = dark_region_borders(&img, 1);
        assert_eq!(borders.len(), 1);
        let b = &borders[0];
        assert_eq!(b[0], (2, 3));
        assert_eq!(b[1], (3, 3));
        assert_eq!(b.len(), 12);
        let pts: Vec<(f64, f64)> = b.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        let poly = approx_closed_polygon(&pts, 0.5);
        let corners: Vec<(usize, usize)> = poly.iter().map(|&i| b[i]).collect();
        assert_eq!(corners, vec![(2, 3), (5, 3), (5, 6), (2, 6)]);
    }

    #[test]
    fn single_pixel_and_diagonal_connectivity() {
        let img = GrayImage::from_fn(6, 6, |x, y| if (x, y) == (1, 1) || (x, y) == (2, 2) { 0.0 } else { 255.0 });
        let borders = dark_region_borders(&img, 1);
        assert_eq!(borders.len(), 1);
        assert_eq!(borders[0], vec![(1, 1), (2, 2)]);
        let lone = GrayImage::from_fn(3, 3, |x, y| if (x, y) == (1, 1) { 0.0 } else { 255.0 });
        assert_eq!(dark_region_borders(&lone, 1), vec![vec![(1, 1)]]);
    }
}
