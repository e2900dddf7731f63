//! Marker-based baseline detector: adaptive threshold, quad extraction,
//! marker decoding, homography interpolation of the chessboard corners and
//! gradient-based subpixel refinement.

mod contours;
mod decode;
mod interpolate;
mod quads;
mod subpix;
mod threshold;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

pub use contours::{approx_closed_polygon, contour_perimeter, dark_region_borders};
pub use decode::{decode_candidate, DecodeParams};
pub use interpolate::{board_homography, interpolate_corners, marker_correspondences};
pub use quads::find_quads;
pub use subpix::{corner_subpix, SubpixParams, SubpixResult};
pub use threshold::adaptive_threshold;

use crate::board::{BoardSpec, MarkerBits};
use crate::image::{GrayImage, Homography};
use crate::IdPoint;

#[derive(Debug, thiserror::Error)]
pub enum DetectionError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate corner id {0}")]
    DuplicateId(usize),
}

/// A dark quadrilateral that may be a marker. Corners are ordered
/// top-left, bottom-left, bottom-right, top-right in the image.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerCandidate {
    pub quad: [(f64, f64); 4],
    pub bits: Option<MarkerBits>,
    pub id: Option<usize>,
    /// Clockwise quarter turns of the dictionary entry that match the
    /// observed bits.
    pub rotation: Option<u8>,
}

impl MarkerCandidate {
    pub fn new(quad: [(f64, f64); 4]) -> Self {
        Self { quad, bits: None, id: None, rotation: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectionSource {
    Classical,
    Deep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedCorner {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl DetectedCorner {
    pub fn point(&self) -> IdPoint {
        IdPoint::new(self.id, self.x, self.y)
    }
}

/// Corners with unique ids, sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct ChArUcoDetection {
    pub corners: Vec<DetectedCorner>,
    pub source: DetectionSource,
}

impl ChArUcoDetection {
    pub fn empty(source: DetectionSource) -> Self {
        Self { corners: Vec::new(), source }
    }

    /// Sorts by id and rejects duplicates.
    pub fn new(mut corners: Vec<DetectedCorner>, source: DetectionSource) -> Result<Self, DetectionError> {
        corners.sort_by_key(|c| c.id);
        if let Some(w) = corners.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(DetectionError::DuplicateId(w[0].id));
        }
        Ok(Self { corners, source })
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&DetectedCorner> {
        self.corners.iter().find(|c| c.id == id)
    }

    pub fn points(&self) -> Vec<IdPoint> {
        self.corners.iter().map(DetectedCorner::point).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,x,y,confidence\n");
        for c in &self.corners {
            let _ = writeln!(out, "{},{},{},{}", c.id, crate::eval::fmt6(c.x), crate::eval::fmt6(c.y), crate::eval::fmt6(c.confidence));
        }
        out
    }

    pub fn from_csv(text: &str, source: DetectionSource) -> Result<Self, DetectionError> {
        let mut corners = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("id")) {
                continue;
            }
            let err = |msg: &str| DetectionError::Parse { line: i + 1, msg: msg.to_string() };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(err("expected 4 fields: id,x,y,confidence"));
            }
            let id: usize = fields[0].parse().map_err(|_| err("bad corner id"))?;
            let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err("bad number"));
            if !ids.insert(id) {
                return Err(DetectionError::DuplicateId(id));
            }
            corners.push(DetectedCorner { id, x: num(fields[1])?, y: num(fields[2])?, confidence: num(fields[3])? });
        }
        Self::new(corners, source)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DetectionError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|source| DetectionError::Io { path: path.display().to_string(), source })
    }

    pub fn read_csv(path: impl AsRef<Path>, source: DetectionSource) -> Result<Self, DetectionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DetectionError::Io { path: path.display().to_string(), source: e })?;
        Self::from_csv(&text, source)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalParams {
    pub threshold_window: usize,
    pub threshold_offset: f64,
    /// Shortest accepted quad side, pixels.
    pub min_side: f64,
    pub decode: DecodeParams,
    /// `None` skips the subpixel stage.
    pub subpix: Option<SubpixParams>,
}

impl Default for ClassicalParams {
    fn default() -> Self {
        Self { threshold_window: 21, threshold_offset: 7.0, min_side: 8.0, decode: DecodeParams::default(), subpix: Some(SubpixParams::default()) }
    }
}

/// Decoded markers found in `img`, at most one per id (the first found).
pub fn detect_markers(img: &GrayImage, spec: &BoardSpec, params: &ClassicalParams) -> Vec<MarkerCandidate> {
    let binary = adaptive_threshold(img, params.threshold_window, params.threshold_offset);
    let mut seen = HashSet::new();
    find_quads(&binary, params.min_side)
        .iter()
        .filter_map(|q| decode_candidate(img, q, &spec.dictionary, &params.decode))
        .filter(|m| m.id.is_some_and(|id| seen.insert(id)))
        .collect()
}

/// Largest subpixel half window around a chessboard corner that stays
/// clear of the nearest marker corner, given the board homography.
fn clear_half_window(h: &Homography, spec: &BoardSpec, corner: (f64, f64), max: usize) -> usize {
    let nearest = spec
        .marker_placements()
        .iter()
        .flat_map(|p| spec.marker_corners_board(p))
        .filter_map(|c| h.apply(c[0], c[1]))
        .map(|(x, y)| (x - corner.0).hypot(y - corner.1))
        .fold(f64::INFINITY, f64::min);
    // The square window reaches sqrt(2) * hw along its diagonal.
    let fit = (nearest / std::f64::consts::SQRT_2 - 1.0).floor();
    if fit.is_finite() { (fit.max(2.0) as usize).min(max) } else { max }
}

/// Threshold, quads, decoding, homography interpolation and subpixel
/// refinement. The subpixel window shrinks where marker corners come close
/// to a chessboard corner.
pub fn detect_classical(img: &GrayImage, spec: &BoardSpec, params: &ClassicalParams) -> ChArUcoDetection {
    let markers = detect_markers(img, spec, params);
    let Some(h) = board_homography(&markers, spec) else { return ChArUcoDetection::empty(DetectionSource::Classical) };
    let mut det = interpolate_corners(&markers, spec, img);
    if let Some(sp) = &params.subpix {
        for c in &mut det.corners {
            let local = SubpixParams { half_window: clear_half_window(&h, spec, (c.x, c.y), sp.half_window), ..*sp };
            let r = corner_subpix(img, (c.x, c.y), &local);
            (c.x, c.y) = (r.x, r.y);
        }
    }
    det
}
