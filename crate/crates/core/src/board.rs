//! ChArUco board model: marker dictionary, board geometry, ground-truth
//! rendering and planar object points.
//!
//! Coordinate conventions shared by the whole crate:
//!
//! - Image coordinates have their origin at the top-left, `x` to the right,
//!   `y` down, and pixel centers at integer coordinates. A binary edge
//!   between pixel columns `i - 1` and `i` therefore sits at `x = i - 0.5`.
//! - The board frame has its origin at the bottom-left outer corner of the
//!   chessboard, `X` to the right, `Y` up and `Z = 0` on the board plane.
//! - Inner corner ids run row-major from bottom to top: id 0 is the
//!   bottom-left inner corner, the last id the top-right one.
//! - Markers occupy the white squares in row-major order starting from the
//!   top-left white square. The top-left square of the board is black.
//! - Marker bits use the ArUco convention: `1` is white, `0` is black.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::image::GrayImage;
use crate::IdPoint;

const DEFAULT_DICTIONARY: &str = include_str!("../data/dict_5x5_12.txt");

#[derive(Debug, Error)]
pub enum BoardError {
    #[error("line {line}: malformed dictionary entry: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: wrong bit count {found}, expected {expected}")]
    WrongBitCount { line: usize, found: usize, expected: usize },
    #[error("rotation-ambiguous dictionary: entry {first} and entry {second} coincide under rotation")]
    RotationAmbiguous { first: usize, second: usize },
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("marker size mismatch: got {found}x{found}, dictionary uses {expected}x{expected}")]
    SizeMismatch { found: usize, expected: usize },
    #[error("invalid board: {0}")]
    InvalidBoard(String),
    #[error("pixels_per_square {pps} too small, need at least {min} to render marker bits")]
    SquareTooSmall { pps: usize, min: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Square bit matrix of a single marker, row-major, `true` = white.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MarkerBits {
    size: usize,
    bits: Vec<bool>,
}

impl MarkerBits {
    pub fn new(size: usize, bits: Vec<bool>) -> Result<Self, BoardError> {
        if size < 3 || size % 2 == 0 {
            return Err(BoardError::InvalidBoard(format!(
                "marker side must be odd and >= 3, got {size}"
            )));
        }
        if bits.len() != size * size {
            return Err(BoardError::WrongBitCount { line: 0, found: bits.len(), expected: size * size });
        }
        Ok(Self { size, bits })
    }

    pub fn from_rows(rows: &[&[u8]]) -> Result<Self, BoardError> {
        let size = rows.len();
        let bits = rows.iter().flat_map(|r| r.iter().map(|&b| b != 0)).collect();
        Self::new(size, bits)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.size + col] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    /// Rotate clockwise by `quarter_turns` * 90 degrees.
    pub fn rotated(&self, quarter_turns: u8) -> Self {
        let n = self.size;
        let mut out = self.clone();
        for _ in 0..(quarter_turns % 4) {
            let src = out.clone();
            for r in 0..n {
                for c in 0..n {
                    out.bits[r * n + c] = src.bits[(n - 1 - c) * n + r];
                }
            }
        }
        out
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }

    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for MarkerBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MarkerBits({})", self.to_bit_string())
    }
}

/// Ordered set of marker patterns, pairwise distinct under rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    name: String,
    entries: Vec<MarkerBits>,
}

impl Dictionary {
    pub fn new(name: impl Into<String>, entries: Vec<MarkerBits>) -> Result<Self, BoardError> {
        let first = entries.first().ok_or(BoardError::EmptyDictionary)?;
        let size = first.size();
        for e in &entries {
            if e.size() != size {
                return Err(BoardError::SizeMismatch { found: e.size(), expected: size });
            }
        }
        for (i, a) in entries.iter().enumerate() {
            for r in 1..4 {
                if a.rotated(r) == *a {
                    return Err(BoardError::RotationAmbiguous { first: i, second: i });
                }
            }
            for (j, b) in entries.iter().enumerate().skip(i + 1) {
                if (0..4).any(|r| a.rotated(r) == *b) {
                    return Err(BoardError::RotationAmbiguous { first: i, second: j });
                }
            }
        }
        Ok(Self { name: name.into(), entries })
    }

    /// The shipped 12-entry 5x5 dictionary.
    pub fn default_5x5() -> Self {
        parse_dictionary(DEFAULT_DICTIONARY, "charuco_5x5_12").expect("shipped dictionary is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[MarkerBits] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn marker_size(&self) -> usize {
        self.entries[0].size()
    }

    /// Smallest Hamming distance between any two entries over all rotations.
    pub fn min_rotation_distance(&self) -> usize {
        let mut best = usize::MAX;
        for (i, a) in self.entries.iter().enumerate() {
            for r in 1..4 {
                best = best.min(a.hamming(&a.rotated(r)));
            }
            for b in &self.entries[i + 1..] {
                for r in 0..4 {
                    best = best.min(a.rotated(r).hamming(b));
                }
            }
        }
        best
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# {}\n", self.name);
        for e in &self.entries {
            s.push_str(&e.to_bit_string());
            s.push('\n');
        }
        s
    }

    /// Keep only the first `n` entries.
    pub fn truncated(&self, n: usize) -> Self {
        Self { name: self.name.clone(), entries: self.entries[..n.min(self.len())].to_vec() }
    }
}

pub fn parse_dictionary(text: &str, name: &str) -> Result<Dictionary, BoardError> {
    let mut entries = Vec::new();
    let mut expected: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(bad) = line.chars().find(|c| *c != '0' && *c != '1') {
            return Err(BoardError::MalformedLine {
                line: line_no,
                reason: format!("unexpected character {bad:?}"),
            });
        }
        let n = line.len();
        let want = match expected {
            Some(w) => w,
            None => {
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n || side < 3 || side % 2 == 0 {
                    return Err(BoardError::WrongBitCount { line: line_no, found: n, expected: 25 });
                }
                expected = Some(n);
                n
            }
        };
        if n != want {
            return Err(BoardError::WrongBitCount { line: line_no, found: n, expected: want });
        }
        let side = (n as f64).sqrt().round() as usize;
        entries.push(MarkerBits::new(side, line.bytes().map(|b| b == b'1').collect())?);
    }
    Dictionary::new(name, entries)
}

pub fn load_dictionary(path: impl AsRef<Path>) -> Result<Dictionary, BoardError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| BoardError::Io { path: path.display().to_string(), source })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dictionary");
    parse_dictionary(&text, name)
}

pub fn save_dictionary(dict: &Dictionary, path: impl AsRef<Path>) -> Result<(), BoardError> {
    let path = path.as_ref();
    std::fs::write(path, dict.to_text())
        .map_err(|source| BoardError::Io { path: path.display().to_string(), source })
}

/// Best dictionary match for an observed bit pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkerMatch {
    pub id: usize,
    /// Observed bits equal the entry rotated clockwise by `rotation` quarter turns.
    pub rotation: u8,
    pub distance: usize,
}

/// Minimum-Hamming match over all entries and rotations; ties go to the
/// lowest id, then the lowest rotation.
pub fn match_marker_bits(
    bits: &MarkerBits,
    dict: &Dictionary,
    max_hamming: usize,
) -> Result<Option<MarkerMatch>, BoardError> {
    if bits.size() != dict.marker_size() {
        return Err(BoardError::SizeMismatch { found: bits.size(), expected: dict.marker_size() });
    }
    let mut best: Option<MarkerMatch> = None;
    for (id, entry) in dict.entries().iter().enumerate() {
        for rotation in 0..4u8 {
            let distance = entry.rotated(rotation).hamming(bits);
            if best.is_none_or(|b| distance < b.distance) {
                best = Some(MarkerMatch { id, rotation, distance });
            }
        }
    }
    Ok(best.filter(|m| m.distance <= max_hamming))
}

/// Geometry and dictionary of a ChArUco target.
#[derive(Debug, Clone, PartialEq)]
pub struct BoardSpec {
    pub squares_x: usize,
    pub squares_y: usize,
    /// Meters.
    pub square_length: f64,
    /// Meters, strictly smaller than `square_length`.
    pub marker_length: f64,
    pub dictionary: Dictionary,
    pub marker_border_bits: usize,
}

/// Placement of one marker on the board.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkerPlacement {
    pub id: usize,
    /// Square column from the left.
    pub col: usize,
    /// Square row from the top.
    pub row: usize,
}

impl BoardSpec {
    pub fn new(
        squares_x: usize,
        squares_y: usize,
        square_length: f64,
        marker_length: f64,
        dictionary: Dictionary,
        marker_border_bits: usize,
    ) -> Result<Self, BoardError> {
        let spec = Self { squares_x, squares_y, square_length, marker_length, dictionary, marker_border_bits };
        spec.validate()?;
        Ok(spec)
    }

    /// The 5x5 board with the shipped 12-entry dictionary.
    pub fn default_5x5() -> Self {
        Self::new(5, 5, 0.04, 0.028, Dictionary::default_5x5(), 1).expect("default board is valid")
    }

    pub fn validate(&self) -> Result<(), BoardError> {
        if self.squares_x < 2 || self.squares_y < 2 {
            return Err(BoardError::InvalidBoard("board needs at least 2x2 squares".into()));
        }
        if !(self.square_length > 0.0) || !(self.marker_length > 0.0) {
            return Err(BoardError::InvalidBoard("lengths must be positive".into()));
        }
        if self.marker_length >= self.square_length {
            return Err(BoardError::InvalidBoard("marker_length must be < square_length".into()));
        }
        if self.marker_border_bits == 0 {
            return Err(BoardError::InvalidBoard("marker_border_bits must be >= 1".into()));
        }
        let needed = self.marker_count();
        if self.dictionary.len() < needed {
            return Err(BoardError::InvalidBoard(format!(
                "board hosts {needed} markers but the dictionary has {} entries",
                self.dictionary.len()
            )));
        }
        Ok(())
    }

    pub fn corner_cols(&self) -> usize {
        self.squares_x - 1
    }

    pub fn corner_rows(&self) -> usize {
        self.squares_y - 1
    }

    pub fn corner_count(&self) -> usize {
        self.corner_cols() * self.corner_rows()
    }

    fn is_white(&self, col: usize, row: usize) -> bool {
        (col + row) % 2 == 1
    }

    pub fn marker_count(&self) -> usize {
        (0..self.squares_y)
            .flat_map(|r| (0..self.squares_x).map(move |c| (c, r)))
            .filter(|&(c, r)| self.is_white(c, r))
            .count()
    }

    pub fn marker_placements(&self) -> Vec<MarkerPlacement> {
        let mut out = Vec::new();
        for row in 0..self.squares_y {
            for col in 0..self.squares_x {
                if self.is_white(col, row) {
                    out.push(MarkerPlacement { id: out.len(), col, row });
                }
            }
        }
        out
    }

    /// Bits per marker side including the border ring.
    pub fn marker_cells(&self) -> usize {
        self.dictionary.marker_size() + 2 * self.marker_border_bits
    }

    pub fn min_pixels_per_square(&self) -> usize {
        self.marker_cells() * 2
    }

    /// Board-frame (X, Y) in meters of a marker's corners, ordered
    /// top-left, bottom-left, bottom-right, top-right as seen on the
    /// unrotated board.
    pub fn marker_corners_board(&self, placement: &MarkerPlacement) -> [[f64; 2]; 4] {
        let s = self.square_length;
        let inset = 0.5 * (s - self.marker_length);
        let left = placement.col as f64 * s + inset;
        let right = left + self.marker_length;
        let top = (self.squares_y - placement.row) as f64 * s - inset;
        let bottom = top - self.marker_length;
        [[left, top], [left, bottom], [right, bottom], [right, top]]
    }

    /// Intensity of the board at a point given in square units measured
    /// from the top-left outer corner (`u` right, `w` down). Points off the
    /// chessboard return `None`.
    pub fn intensity_at(&self, u: f64, w: f64) -> Option<f32> {
        if u < 0.0 || w < 0.0 || u >= self.squares_x as f64 || w >= self.squares_y as f64 {
            return None;
        }
        let col = u.floor() as usize;
        let row = w.floor() as usize;
        if !self.is_white(col, row) {
            return Some(0.0);
        }
        let rel = self.marker_length / self.square_length;
        let inset = 0.5 * (1.0 - rel);
        let mu = (u - col as f64 - inset) / rel;
        let mv = (w - row as f64 - inset) / rel;
        if !(0.0..1.0).contains(&mu) || !(0.0..1.0).contains(&mv) {
            return Some(255.0);
        }
        let cells = self.marker_cells();
        let cu = ((mu * cells as f64).floor() as usize).min(cells - 1);
        let cv = ((mv * cells as f64).floor() as usize).min(cells - 1);
        let b = self.marker_border_bits;
        if cu < b || cv < b || cu >= cells - b || cv >= cells - b {
            return Some(0.0);
        }
        let id = self.marker_index_at(col, row).expect("white squares host markers");
        let white = self.dictionary.entries()[id].get(cv - b, cu - b);
        Some(if white { 255.0 } else { 0.0 })
    }

    fn marker_index_at(&self, col: usize, row: usize) -> Option<usize> {
        if !self.is_white(col, row) {
            return None;
        }
        let before = (0..row)
            .flat_map(|r| (0..self.squares_x).map(move |c| (c, r)))
            .filter(|&(c, r)| self.is_white(c, r))
            .count();
        let in_row = (0..col).filter(|&c| self.is_white(c, row)).count();
        Some(before + in_row)
    }

    /// Convert board-frame meters to square units from the top-left corner.
    pub fn metric_to_squares(&self, x: f64, y: f64) -> (f64, f64) {
        (x / self.square_length, self.squares_y as f64 - y / self.square_length)
    }
}

/// One planar board point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectPoint {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// 3D inner-corner coordinates of the board, indexed by corner id.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectPoints(pub Vec<ObjectPoint>);

impl ObjectPoints {
    pub fn get(&self, id: usize) -> Option<&ObjectPoint> {
        self.0.iter().find(|p| p.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ObjectPoint> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Board description file: TOML with `squares_x`, `squares_y`,
/// `square_length_m`, `marker_length_m` and optional `marker_border_bits`
/// and `dictionary_path` (relative to the file). Missing geometry keys take
/// the default board's values.
#[derive(Debug, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct BoardFile {
    squares_x: Option<usize>,
    squares_y: Option<usize>,
    square_length_m: Option<f64>,
    marker_length_m: Option<f64>,
    marker_border_bits: Option<usize>,
    dictionary_path: Option<String>,
}

pub fn parse_board(text: &str, base_dir: &Path) -> Result<BoardSpec, BoardError> {
    let f: BoardFile = toml::from_str(text).map_err(|e| BoardError::InvalidBoard(format!("board file: {}", e.message())))?;
    let d = BoardSpec::default_5x5();
    let dictionary = match &f.dictionary_path {
        Some(p) => load_dictionary(base_dir.join(p))?,
        None => d.dictionary,
    };
    BoardSpec::new(
        f.squares_x.unwrap_or(d.squares_x),
        f.squares_y.unwrap_or(d.squares_y),
        f.square_length_m.unwrap_or(d.square_length),
        f.marker_length_m.unwrap_or(d.marker_length),
        dictionary,
        f.marker_border_bits.unwrap_or(d.marker_border_bits),
    )
}

pub fn load_board(path: impl AsRef<Path>) -> Result<BoardSpec, BoardError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| BoardError::Io { path: path.display().to_string(), source })?;
    parse_board(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn board_to_toml(spec: &BoardSpec, dictionary_path: Option<&str>) -> String {
    let mut out = format!(
        "squares_x = {}\nsquares_y = {}\nsquare_length_m = {:?}\nmarker_length_m = {:?}\nmarker_border_bits = {}\n",
        spec.squares_x, spec.squares_y, spec.square_length, spec.marker_length, spec.marker_border_bits
    );
    if let Some(p) = dictionary_path {
        out.push_str(&format!("dictionary_path = {p:?}\n"));
    }
    out
}

pub fn board_object_points(spec: &BoardSpec) -> ObjectPoints {
    let cols = spec.corner_cols();
    ObjectPoints(
        (0..spec.corner_count())
            .map(|id| ObjectPoint {
                id,
                x: ((id % cols) + 1) as f64 * spec.square_length,
                y: ((id / cols) + 1) as f64 * spec.square_length,
                z: 0.0,
            })
            .collect(),
    )
}

/// Pixel position of a board-frame point in a `render_board` image.
pub fn board_to_render_px(spec: &BoardSpec, pps: usize, margin_px: usize, x: f64, y: f64) -> (f64, f64) {
    let (u, w) = spec.metric_to_squares(x, y);
    (margin_px as f64 + u * pps as f64 - 0.5, margin_px as f64 + w * pps as f64 - 0.5)
}

/// Render the board as a binary image with a white margin. Each pixel takes
/// the board color at its center.
pub fn render_board(
    spec: &BoardSpec,
    pixels_per_square: usize,
    margin_px: usize,
) -> Result<(GrayImage, Vec<IdPoint>), BoardError> {
    spec.validate()?;
    let min = spec.min_pixels_per_square();
    if pixels_per_square < min {
        return Err(BoardError::SquareTooSmall { pps: pixels_per_square, min });
    }
    let pps = pixels_per_square as f64;
    let width = spec.squares_x * pixels_per_square + 2 * margin_px;
    let height = spec.squares_y * pixels_per_square + 2 * margin_px;
    let mut img = GrayImage::filled(width, height, 255.0);
    for y in 0..height {
        let w = (y as f64 + 0.5 - margin_px as f64) / pps;
        for x in 0..width {
            let u = (x as f64 + 0.5 - margin_px as f64) / pps;
            if let Some(v) = spec.intensity_at(u, w) {
                img.set(x, y, v);
            }
        }
    }
    let gt = board_object_points(spec)
        .iter()
        .map(|p| {
            let (x, y) = board_to_render_px(spec, pixels_per_square, margin_px, p.x, p.y);
            IdPoint::new(p.id, x, y)
        })
        .collect();
    Ok((img, gt))
}
