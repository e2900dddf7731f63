use super::{ChArUcoDetection, DetectedCorner, DetectionSource, MarkerCandidate};
use crate::board::{board_object_points, BoardSpec};
use crate::image::{GrayImage, Homography};

/// Board-frame (meters) to image correspondences of every corner of the
/// decoded markers. A marker observed with rotation `r` shows its canonical
/// corner `i` at quad position `(i - r) mod 4`.
pub fn marker_correspondences(markers: &[MarkerCandidate], spec: &BoardSpec) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let placements = spec.marker_placements();
    let mut seen = std::collections::HashSet::new();
    let (mut board, mut image) = (Vec::new(), Vec::new());
    for m in markers {
        let (Some(id), Some(rot)) = (m.id, m.rotation) else { continue };
        let Some(placement) = placements.iter().find(|p| p.id == id) else { continue };
        if !seen.insert(id) {
            continue;
        }
        let corners = spec.marker_corners_board(placement);
        for (i, c) in corners.iter().enumerate() {
            board.push((c[0], c[1]));
            image.push(m.quad[(i + 4 - rot as usize % 4) % 4]);
        }
    }
    (board, image)
}

/// Homography from all decoded marker corners, then projection of every
/// chessboard corner; corners landing outside the image are dropped.
pub fn interpolate_corners(markers: &[MarkerCandidate], spec: &BoardSpec, img: &GrayImage) -> ChArUcoDetection {
    board_homography(markers, spec)
        .map(|h| project_corners(&h, spec, img))
        .unwrap_or_else(|| ChArUcoDetection::empty(DetectionSource::Classical))
}

/// Least-squares board (meters) to image homography from every decoded
/// marker corner; `None` below four points or for degenerate layouts.
pub fn board_homography(markers: &[MarkerCandidate], spec: &BoardSpec) -> Option<Homography> {
    let (board, image) = marker_correspondences(markers, spec);
    if board.len() < 4 {
        return None;
    }
    Homography::from_correspondences(&board, &image).ok()
}

fn project_corners(h: &Homography, spec: &BoardSpec, img: &GrayImage) -> ChArUcoDetection {
    let (w, hgt) = (img.width() as f64, img.height() as f64);
    let corners = board_object_points(spec)
        .iter()
        .filter_map(|p| {
            let (x, y) = h.apply(p.x, p.y)?;
            (x >= -0.5 && y >= -0.5 && x < w - 0.5 && y < hgt - 0.5).then_some(DetectedCorner { id: p.id, x, y, confidence: 1.0 })
        })
        .collect();
    ChArUcoDetection { corners, source: DetectionSource::Classical }
}
