use super::MarkerCandidate;
use crate::board::{match_marker_bits, Dictionary, MarkerBits};
use crate::image::{GrayImage, Homography};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeParams {
    pub max_hamming: usize,
    /// Width of the black marker border in cells.
    pub border_bits: usize,
    /// Fraction of border cells that must read dark.
    pub min_border_dark: f64,
    /// Required gray-level gap between the surrounding white margin and the
    /// marker border.
    pub min_contrast: f64,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self { max_hamming: 1, border_bits: 1, min_border_dark: 0.7, min_contrast: 10.0 }
    }
}

/// Sub-samples per cell axis, spread over the central part of the cell.
const SAMPLES: usize = 4;
const SAMPLE_SPAN: f64 = 0.6;

/// Unwarps the quad into a grid of `(marker_size + 2 * border)` square
/// cells, checks the black border and reads the interior bits. Returns the
/// candidate with `bits`, `id` and `rotation` set, or `None` when the border
/// check fails or no dictionary entry is close enough.
pub fn decode_candidate(
    img: &GrayImage,
    candidate: &MarkerCandidate,
    dict: &Dictionary,
    params: &DecodeParams,
) -> Option<MarkerCandidate> {
    let n = dict.marker_size();
    let b = params.border_bits;
    let cells = n + 2 * b;
    let side = cells as f64;
    let canon = [(0.0, 0.0), (0.0, side), (side, side), (side, 0.0)];
    let h = Homography::from_correspondences(&canon, &candidate.quad).ok()?;
    let sample = |u: f64, v: f64| h.apply(u, v).map(|(x, y)| img.bilinear_clamped(x, y) as f64);

    let mut means = vec![0.0; cells * cells];
    for r in 0..cells {
        for c in 0..cells {
            let mut acc = 0.0;
            for sy in 0..SAMPLES {
                for sx in 0..SAMPLES {
                    let off = |k: usize| 0.5 + SAMPLE_SPAN * ((k as f64 + 0.5) / SAMPLES as f64 - 0.5);
                    acc += sample(c as f64 + off(sx), r as f64 + off(sy))?;
                }
            }
            means[r * cells + c] = acc / (SAMPLES * SAMPLES) as f64;
        }
    }
    let is_border = |r: usize, c: usize| r < b || c < b || r >= cells - b || c >= cells - b;
    let mut border: Vec<f64> = (0..cells * cells).filter(|&i| is_border(i / cells, i % cells)).map(|i| means[i]).collect();
    border.sort_by(f64::total_cmp);
    let dark = border[border.len() / 2];

    // Ring half a cell outside the marker, on the white square margin.
    let mut ring = Vec::new();
    for k in 0..cells {
        let t = k as f64 + 0.5;
        for (u, v) in [(t, -0.5), (t, side + 0.5), (-0.5, t), (side + 0.5, t)] {
            ring.push(sample(u, v)?);
        }
    }
    let light = ring.iter().sum::<f64>() / ring.len() as f64;
    if light - dark < params.min_contrast {
        return None;
    }
    let threshold = 0.5 * (light + dark);
    let border_dark = border.iter().filter(|&&m| m < threshold).count() as f64 / border.len() as f64;
    if border_dark < params.min_border_dark {
        return None;
    }
    let mut bits = MarkerBits::new(n, vec![false; n * n]).expect("square bit grid");
    for r in 0..n {
        for c in 0..n {
            bits.set(r, c, means[(r + b) * cells + c + b] > threshold);
        }
    }
    let m = match_marker_bits(&bits, dict, params.max_hamming).ok()??;
    Some(MarkerCandidate { quad: candidate.quad, bits: Some(bits), id: Some(m.id), rotation: Some(m.rotation) })
}
