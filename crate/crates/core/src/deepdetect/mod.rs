//! Turns ChArUcoNet head outputs into id-labelled corners and refines them
//! with RefineNet, the classical subpixel solver, or not at all.

use crate::classical::{corner_subpix, ChArUcoDetection, DetectedCorner, DetectionSource, SubpixParams};
use crate::image::GrayImage;
use crate::net::{
    softmax, NetError, NetKind, NetworkDef, Tensor3, CELL, ID_CLASSES, ID_DUSTBIN, KEYPOINT_CLASSES, KEYPOINT_DUSTBIN,
    REFINE_BINS, REFINE_PATCH,
};

#[derive(Debug, thiserror::Error)]
pub enum DeepError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("refinement mode needs RefineNet weights")]
    MissingRefineNet,
    #[error("expected a {expected:?} network, got {found:?}")]
    WrongNetwork { expected: NetKind, found: NetKind },
    #[error("invalid refine config: {0}")]
    Config(String),
}

/// Probability thresholds applied to the winning class of each head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeThresholds {
    pub keypoint: f64,
    pub id: f64,
}

impl Default for DecodeThresholds {
    fn default() -> Self {
        Self { keypoint: 0.3, id: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDecode {
    /// Cell column and row.
    pub cell: (usize, usize),
    /// Pixel offset `(dx, dy)` inside the cell and its probability.
    pub keypoint: Option<(usize, usize, f64)>,
    /// Corner id and its probability.
    pub id: Option<(usize, f64)>,
}

impl CellDecode {
    pub fn pixel(&self) -> Option<(usize, usize)> {
        self.keypoint.map(|(dx, dy, _)| (CELL * self.cell.0 + dx, CELL * self.cell.1 + dy))
    }
}

fn argmax(p: &[f32]) -> (usize, f64) {
    let (i, v) = p.iter().enumerate().fold((0, f32::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    (i, v as f64)
}

/// Per-cell softmax and argmax of both heads, one entry per cell in row-major
/// order.
pub fn decode_cells(x: &Tensor3<f32>, c: &Tensor3<f32>, th: &DecodeThresholds) -> Result<Vec<CellDecode>, DeepError> {
    if x.c != KEYPOINT_CLASSES || c.c != ID_CLASSES {
        return Err(DeepError::Shape(format!(
            "heads need {KEYPOINT_CLASSES} and {ID_CLASSES} channels, got {} and {}",
            x.c, c.c
        )));
    }
    if (x.h, x.w) != (c.h, c.w) {
        return Err(DeepError::Shape(format!("head grids differ: {}x{} vs {}x{}", x.w, x.h, c.w, c.h)));
    }
    let mut cells = Vec::with_capacity(x.h * x.w);
    for cy in 0..x.h {
        for cx in 0..x.w {
            let (k, kp) = argmax(&softmax(x.cell(cy, cx)));
            let (i, ip) = argmax(&softmax(c.cell(cy, cx)));
            cells.push(CellDecode {
                cell: (cx, cy),
                keypoint: (k != KEYPOINT_DUSTBIN && kp >= th.keypoint).then_some((k % CELL, k / CELL, kp)),
                id: (i != ID_DUSTBIN && ip >= th.id).then_some((i, ip)),
            });
        }
    }
    Ok(cells)
}

/// Pairs each cell's keypoint with its id; among cells claiming the same id
/// the most confident (first on ties) wins.
pub fn assemble_detections(cells: &[CellDecode]) -> ChArUcoDetection {
    let mut best: Vec<Option<DetectedCorner>> = vec![None; ID_DUSTBIN];
    for cell in cells {
        let (Some((_, _, kp)), Some((id, ip)), Some((px, py))) = (cell.keypoint, cell.id, cell.pixel()) else { continue };
        let Some(slot) = best.get_mut(id) else { continue };
        let confidence = kp * ip;
        if slot.is_none_or(|b| confidence > b.confidence) {
            *slot = Some(DetectedCorner { id, x: px as f64, y: py as f64, confidence });
        }
    }
    ChArUcoDetection { corners: best.into_iter().flatten().collect(), source: DetectionSource::Deep }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineConfig {
    pub patch: usize,
    pub central: usize,
    pub upsample: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { patch: REFINE_PATCH, central: 8, upsample: 8 }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<(), DeepError> {
        if self.patch != 3 * self.central || self.upsample * self.upsample * self.central * self.central != REFINE_BINS {
            return Err(DeepError::Config(format!(
                "patch {} must be three central regions of {} and upsample^2 * central^2 must be {REFINE_BINS}",
                self.patch, self.central
            )));
        }
        Ok(())
    }

    /// Offset from the patch origin of the centre of subpixel bin `label`.
    pub fn bin_offset(&self, label: usize) -> (f64, f64) {
        let grid = self.central * self.upsample;
        let (row, col) = (label / grid, label % grid);
        let at = |i: usize| self.central as f64 + (i as f64 + 0.5) / self.upsample as f64;
        (at(col), at(row))
    }
}

/// Zero-mean, unit-variance network input from a patch. A flat patch maps
/// to all zeros.
pub fn normalized_patch(img: &GrayImage) -> Tensor3<f32> {
    let n = img.pixels().len() as f64;
    let mean = img.pixels().iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = img.pixels().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    let inv = if var > 1e-12 { 1.0 / var.sqrt() } else { 0.0 };
    Tensor3::from_vec(
        img.height(),
        img.width(),
        1,
        img.pixels().iter().map(|&v| ((v as f64 - mean) * inv) as f32).collect(),
    )
}

fn expect_kind(net: &NetworkDef<f32>, expected: NetKind) -> Result<(), DeepError> {
    if net.kind != expected {
        return Err(DeepError::WrongNetwork { expected, found: net.kind });
    }
    Ok(())
}

/// Most likely subpixel bin for a 24x24 patch, or `None` when the logits
/// are not finite.
pub fn predict_bin(refinenet: &NetworkDef<f32>, patch: &GrayImage) -> Result<Option<usize>, DeepError> {
    let out = refinenet.forward(&normalized_patch(patch))?;
    let logits = &out[0].data;
    if logits.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    Ok(Some(argmax(logits).0))
}

/// Replaces each corner by the RefineNet estimate inside the central region
/// of a patch centred on its integer location.
pub fn refine_subpixel(
    img: &GrayImage,
    det: &ChArUcoDetection,
    refinenet: &NetworkDef<f32>,
    cfg: &RefineConfig,
) -> Result<ChArUcoDetection, DeepError> {
    cfg.validate()?;
    expect_kind(refinenet, NetKind::RefineNet)?;
    let half = (cfg.patch / 2) as isize;
    let mut out = det.clone();
    for c in &mut out.corners {
        let (ix, iy) = (c.x.round() as isize, c.y.round() as isize);
        let (ox, oy) = (ix - half, iy - half);
        let patch = img.crop_replicate(ox, oy, cfg.patch, cfg.patch);
        let Some(bin) = predict_bin(refinenet, &patch)? else { continue };
        let (dx, dy) = cfg.bin_offset(bin);
        c.x = (ox as f64 + dx).clamp(0.0, (img.width() - 1) as f64);
        c.y = (oy as f64 + dy).clamp(0.0, (img.height() - 1) as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineMode {
    RefineNet,
    CornerSubPix,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepConfig {
    pub thresholds: DecodeThresholds,
    pub mode: RefineMode,
    pub refine: RefineConfig,
    pub subpix: SubpixParams,
}

impl Default for DeepConfig {
    fn default() -> Self {
        Self {
            thresholds: DecodeThresholds::default(),
            mode: RefineMode::RefineNet,
            refine: RefineConfig::default(),
            subpix: SubpixParams::default(),
        }
    }
}

/// ChArUcoNet forward pass, cell decoding, assembly and the configured
/// refinement stage.
pub fn detect_deep(
    img: &GrayImage,
    charuconet: &NetworkDef<f32>,
    refinenet: Option<&NetworkDef<f32>>,
    cfg: &DeepConfig,
) -> Result<ChArUcoDetection, DeepError> {
    expect_kind(charuconet, NetKind::CharucoNet)?;
    if img.width() % CELL != 0 || img.height() % CELL != 0 {
        return Err(DeepError::Shape(format!("image {}x{} is not a multiple of {CELL}", img.width(), img.height())));
    }
    let heads = charuconet.forward(&Tensor3::from_image(img))?;
    let det = assemble_detections(&decode_cells(&heads[0], &heads[1], &cfg.thresholds)?);
    match cfg.mode {
        RefineMode::None => Ok(det),
        RefineMode::RefineNet => refine_subpixel(img, &det, refinenet.ok_or(DeepError::MissingRefineNet)?, &cfg.refine),
        RefineMode::CornerSubPix => {
            let mut out = det;
            for c in &mut out.corners {
                let r = corner_subpix(img, (c.x, c.y), &cfg.subpix);
                (c.x, c.y) = (r.x, r.y);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{build_charuconet, build_refinenet};

    fn one_hot(h: usize, w: usize, c: usize, hot: &[(usize, usize, usize)], background: usize) -> Tensor3<f32> {
        let mut t = Tensor3::zeros(h, w, c);
        for y in 0..h {
            for x in 0..w {
                let i = t.idx(y, x, background);
                t.data[i] = 20.0;
            }
        }
        for &(y, x, ch) in hot {
            let (b, i) = (t.idx(y, x, background), t.idx(y, x, ch));
            t.data[b] = 0.0;
            t.data[i] = 20.0;
        }
        t
    }

    #[test]
    fn channel_to_pixel_mapping() {
        let x = one_hot(4, 4, 65, &[(0, 0, 0), (3, 2, 9)], 64);
        let c = one_hot(4, 4, 17, &[(0, 0, 1), (3, 2, 2)], 16);
        let cells = decode_cells(&x, &c, &DecodeThresholds::default()).unwrap();
        assert_eq!(cells[0].pixel(), Some((0, 0)));
        assert_eq!(cells[3 * 4 + 2].pixel(), Some((17, 25)));
        assert!(cells[1].keypoint.is_none() && cells[1].id.is_none());
    }

    #[test]
    fn uniform_logits_yield_nothing() {
        let cells = decode_cells(&Tensor3::zeros(2, 2, 65), &Tensor3::zeros(2, 2, 17), &DecodeThresholds { keypoint: 0.5, id: 0.5 }).unwrap();
        assert!(cells.iter().all(|c| c.keypoint.is_none() && c.id.is_none()));
        assert!(decode_cells(&Tensor3::zeros(2, 2, 64), &Tensor3::zeros(2, 2, 17), &DecodeThresholds::default()).is_err());
    }

    #[test]
    fn shift_invariance_per_cell() {
        let x = Tensor3::from_vec(1, 2, 65, (0..130).map(|i| ((i * 37) % 11) as f32 * 0.7).collect());
        let c = Tensor3::from_vec(1, 2, 17, (0..34).map(|i| ((i * 13) % 7) as f32).collect());
        let mut xs = x.clone();
        xs.data[..65].iter_mut().for_each(|v| *v += 5.0);
        let th = DecodeThresholds { keypoint: 0.0, id: 0.0 };
        let (a, b) = (decode_cells(&x, &c, &th).unwrap(), decode_cells(&xs, &c, &th).unwrap());
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.cell, q.cell);
            assert_eq!(p.keypoint.map(|k| (k.0, k.1)), q.keypoint.map(|k| (k.0, k.1)));
            let (pp, qp) = (p.keypoint.map_or(0.0, |k| k.2), q.keypoint.map_or(0.0, |k| k.2));
            assert!((pp - qp).abs() < 1e-6);
        }
    }

    fn cell(cx: usize, kp: Option<f64>, id: Option<(usize, f64)>) -> CellDecode {
        CellDecode { cell: (cx, 0), keypoint: kp.map(|p| (1, 2, p)), id }
    }

    #[test]
    fn duplicate_ids_keep_the_most_confident() {
        let det = assemble_detections(&[cell(0, Some(0.9), Some((5, 1.0))), cell(1, Some(0.4), Some((5, 1.0)))]);
        assert_eq!(det.len(), 1);
        assert_eq!((det.corners[0].x, det.corners[0].confidence), (1.0, 0.9));
        assert!(assemble_detections(&[cell(0, Some(0.9), None)]).is_empty());
        let all: Vec<CellDecode> = (0..16).map(|i| cell(i, Some(1.0), Some((i, 1.0)))).collect();
        let det = assemble_detections(&all);
        assert_eq!(det.corners.iter().map(|c| c.id).collect::<Vec<_>>(), (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn bin_offsets() {
        let cfg = RefineConfig::default();
        assert_eq!(cfg.bin_offset(0), (8.0625, 8.0625));
        assert_eq!(cfg.bin_offset(4095), (15.9375, 15.9375));
        assert!(RefineConfig { patch: 20, ..cfg }.validate().is_err());
    }

    #[test]
    fn refinement_modes() {
        let img = GrayImage::from_fn(32, 32, |x, y| if (x < 16) == (y < 16) { 30.0 } else { 220.0 });
        let mut refinenet = build_refinenet(0.25).unwrap();
        let empty = ChArUcoDetection::empty(DetectionSource::Deep);
        assert_eq!(refine_subpixel(&img, &empty, &refinenet, &RefineConfig::default()).unwrap(), empty);
        // All-zero weights give uniform logits, so the first bin wins.
        let det = ChArUcoDetection { corners: vec![DetectedCorner { id: 3, x: 16.0, y: 15.0, confidence: 1.0 }], source: DetectionSource::Deep };
        let r = refine_subpixel(&img, &det, &refinenet, &RefineConfig::default()).unwrap();
        assert_eq!((r.corners[0].x, r.corners[0].y), (16.0 - 12.0 + 8.0625, 15.0 - 12.0 + 8.0625));
        let charuconet = build_charuconet(0.125).unwrap();
        assert!(matches!(refine_subpixel(&img, &det, &charuconet, &RefineConfig::default()), Err(DeepError::WrongNetwork { .. })));
        let cfg = DeepConfig { mode: RefineMode::RefineNet, ..DeepConfig::default() };
        assert!(matches!(detect_deep(&img, &charuconet, None, &cfg), Err(DeepError::MissingRefineNet)));
        let none = DeepConfig { mode: RefineMode::None, ..DeepConfig::default() };
        assert!(detect_deep(&img, &charuconet, None, &none).unwrap().is_empty());
        refinenet.layers_mut().for_each(|l| l.bias.iter_mut().for_each(|b| *b = f32::NAN));
        let untouched = refine_subpixel(&img, &det, &refinenet, &RefineConfig::default()).unwrap();
        assert_eq!(untouched, det);
        assert!(detect_deep(&GrayImage::filled(30, 32, 0.0), &charuconet, None, &none).is_err());
    }
}
