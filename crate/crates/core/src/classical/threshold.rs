use crate::image::GrayImage;

/// Summed-area table with a zero first row and column.
pub(crate) struct Integral {
    w: usize,
    sums: Vec<f64>,
}

impl Integral {
    pub(crate) fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let mut sums = vec![0.0; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += img.get(x, y) as f64;
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + row;
            }
        }
        Self { w, sums }
    }

    /// Sum over `[x0, x1) x [y0, y1)`.
    pub(crate) fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = |x: usize, y: usize| self.sums[y * (self.w + 1) + x];
        s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0)
    }
}

/// Binarize against the mean of a `window`-sized box clipped to the image:
/// 255 where `value > mean - offset`, else 0. Even windows are widened by
/// one pixel.
pub fn adaptive_threshold(img: &GrayImage, window: usize, offset: f64) -> GrayImage {
    let r = window.max(3) / 2;
    let integral = Integral::new(img);
    let (w, h) = (img.width(), img.height());
    GrayImage::from_fn(w, h, |x, y| {
        let (x0, y0) = (x.saturating_sub(r), y.saturating_sub(r));
        let (x1, y1) = ((x + r + 1).min(w), (y + r + 1).min(h));
        let mean = integral.sum(x0, y0, x1, y1) / ((x1 - x0) * (y1 - y0)) as f64;
        if img.get(x, y) as f64 > mean - offset {
            255.0
        } else {
            0.0
        }
    })
}
