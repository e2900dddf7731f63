//! ChArUco board toolkit: rendering, classical and CNN-based corner
//! detection, planar PnP pose estimation and robustness evaluation.

pub mod board;
pub mod cli;
pub mod classical;
pub mod deepdetect;
pub mod image;
pub mod eval;
pub mod net;
pub mod pose;

/// A board corner id with an image location in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdPoint {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl IdPoint {
    pub fn new(id: usize, x: f64, y: f64) -> Self {
        Self { id, x, y }
    }

    pub fn distance(&self, other: &IdPoint) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}
