use rand::{Rng, RngExt};

use super::tensor::{matmul, matmul_a_bt, matmul_at_b, Real, Tensor3};
use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    /// 3x3 convolution, stride 1, zero padding 1.
    Conv3x3,
    /// Pointwise convolution.
    Conv1x1,
    Relu,
    /// 2x2 max pooling, stride 2.
    MaxPool2x2,
    /// Flatten then fully connect; `in_channels` is the flattened length.
    Dense,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub name: String,
}

impl LayerSpec {
    pub fn new(kind: LayerKind, in_channels: usize, out_channels: usize, name: impl Into<String>) -> Self {
        Self { kind, in_channels, out_channels, name: name.into() }
    }

    pub fn has_params(&self) -> bool {
        matches!(self.kind, LayerKind::Conv3x3 | LayerKind::Conv1x1 | LayerKind::Dense)
    }

    pub fn weight_dims(&self) -> Vec<usize> {
        match self.kind {
            LayerKind::Conv3x3 => vec![3, 3, self.in_channels, self.out_channels],
            LayerKind::Conv1x1 | LayerKind::Dense => vec![self.in_channels, self.out_channels],
            LayerKind::Relu | LayerKind::MaxPool2x2 => vec![],
        }
    }

    pub fn fan_in(&self) -> usize {
        match self.kind {
            LayerKind::Conv3x3 => 9 * self.in_channels,
            _ => self.in_channels,
        }
    }
}

/// A layer with its parameters. Weights are laid out so that
/// `out = patches x W + b` with `W` of shape `fan_in x out_channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T = f32> {
    pub spec: LayerSpec,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

pub(crate) enum Cache<T> {
    None,
    Cols(Vec<T>),
    Argmax(Vec<usize>),
}

impl<T: Real> Layer<T> {
    pub fn zeros(spec: LayerSpec) -> Self {
        let (wn, bn) = if spec.has_params() { (spec.fan_in() * spec.out_channels, spec.out_channels) } else { (0, 0) };
        Self { spec, weight: vec![T::zero(); wn], bias: vec![T::zero(); bn] }
    }

    /// He-uniform weights, zero biases.
    pub fn init_he_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if !self.spec.has_params() {
            return;
        }
        let limit = (6.0 / self.spec.fan_in() as f64).sqrt();
        for w in &mut self.weight {
            *w = T::from_f64(rng.random_range(-limit..limit));
        }
        self.bias.iter_mut().for_each(|b| *b = T::zero());
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn output_shape(&self, (h, w, c): (usize, usize, usize)) -> Result<(usize, usize, usize), NetError> {
        let s = &self.spec;
        match s.kind {
            LayerKind::Conv3x3 | LayerKind::Conv1x1 => {
                if c != s.in_channels {
                    return Err(NetError::Shape(format!("{}: expected {} channels, got {c}", s.name, s.in_channels)));
                }
                Ok((h, w, s.out_channels))
            }
            LayerKind::Relu => Ok((h, w, c)),
            LayerKind::MaxPool2x2 => {
                if h % 2 != 0 || w % 2 != 0 {
                    return Err(NetError::Shape(format!("{}: cannot pool odd size {h}x{w}", s.name)));
                }
                Ok((h / 2, w / 2, c))
            }
            LayerKind::Dense => {
                if h * w * c != s.in_channels {
                    return Err(NetError::Shape(format!(
                        "{}: expected {} flattened inputs, got {h}x{w}x{c}",
                        s.name, s.in_channels
                    )));
                }
                Ok((1, 1, s.out_channels))
            }
        }
    }

    /// Forward pass without retaining backward state.
    pub fn apply(&self, x: &Tensor3<T>) -> Result<Tensor3<T>, NetError> {
        self.forward(x).map(|(y, _)| y)
    }

    pub(crate) fn forward(&self, x: &Tensor3<T>) -> Result<(Tensor3<T>, Cache<T>), NetError> {
        let (oh, ow, oc) = self.output_shape(x.shape())?;
        let mut out = Tensor3::zeros(oh, ow, oc);
        let cache = match self.spec.kind {
            LayerKind::Conv3x3 => {
                let cols = im2col3x3(x);
                let rows = x.h * x.w;
                fill_bias(&mut out.data, &self.bias);
                matmul(rows, 9 * x.c, oc, &cols, &self.weight, &mut out.data, true);
                Cache::Cols(cols)
            }
            LayerKind::Conv1x1 | LayerKind::Dense => {
                let rows = if self.spec.kind == LayerKind::Dense { 1 } else { x.h * x.w };
                fill_bias(&mut out.data, &self.bias);
                matmul(rows, self.spec.in_channels, oc, &x.data, &self.weight, &mut out.data, true);
                Cache::None
            }
            LayerKind::Relu => {
                for (o, &v) in out.data.iter_mut().zip(&x.data) {
                    *o = if v > T::zero() { v } else { T::zero() };
                }
                Cache::None
            }
            LayerKind::MaxPool2x2 => {
                let mut argmax = vec![0usize; out.data.len()];
                for y in 0..oh {
                    for xx in 0..ow {
                        for ch in 0..oc {
                            let mut best_i = x.idx(2 * y, 2 * xx, ch);
                            let mut best = x.data[best_i];
                            for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                                let i = x.idx(2 * y + dy, 2 * xx + dx, ch);
                                if x.data[i] > best {
                                    best = x.data[i];
                                    best_i = i;
                                }
                            }
                            let o = out.idx(y, xx, ch);
                            out.data[o] = best;
                            argmax[o] = best_i;
                        }
                    }
                }
                Cache::Argmax(argmax)
            }
        };
        Ok((out, cache))
    }

    /// Accumulates parameter gradients into `gw`/`gb` and returns the input
    /// gradient when `need_input_grad` is set.
    pub(crate) fn backward(
        &self,
        x: &Tensor3<T>,
        y: &Tensor3<T>,
        cache: &Cache<T>,
        dy: &Tensor3<T>,
        gw: &mut [T],
        gb: &mut [T],
        need_input_grad: bool,
    ) -> Option<Tensor3<T>> {
        let oc = self.spec.out_channels;
        match (self.spec.kind, cache) {
            (LayerKind::Conv3x3, Cache::Cols(cols)) => {
                let rows = x.h * x.w;
                let k = 9 * x.c;
                matmul_at_b(k, rows, oc, cols, &dy.data, gw, true);
                accumulate_bias(gb, &dy.data, oc);
                need_input_grad.then(|| {
                    let mut dcols = vec![T::zero(); rows * k];
                    matmul_a_bt(rows, oc, k, &dy.data, &self.weight, &mut dcols, false);
                    col2im3x3(&dcols, x.h, x.w, x.c)
                })
            }
            (LayerKind::Conv1x1 | LayerKind::Dense, _) => {
                let rows = if self.spec.kind == LayerKind::Dense { 1 } else { x.h * x.w };
                let k = self.spec.in_channels;
                matmul_at_b(k, rows, oc, &x.data, &dy.data, gw, true);
                accumulate_bias(gb, &dy.data, oc);
                need_input_grad.then(|| {
                    let mut dx = Tensor3::zeros(x.h, x.w, x.c);
                    matmul_a_bt(rows, oc, k, &dy.data, &self.weight, &mut dx.data, false);
                    dx
                })
            }
            (LayerKind::Relu, _) => need_input_grad.then(|| {
                let mut dx = Tensor3::zeros(x.h, x.w, x.c);
                for ((d, &g), &o) in dx.data.iter_mut().zip(&dy.data).zip(&y.data) {
                    *d = if o > T::zero() { g } else { T::zero() };
                }
                dx
            }),
            (LayerKind::MaxPool2x2, Cache::Argmax(argmax)) => need_input_grad.then(|| {
                let mut dx = Tensor3::zeros(x.h, x.w, x.c);
                for (&src, &g) in argmax.iter().zip(&dy.data) {
                    dx.data[src] = dx.data[src] + g;
                }
                dx
            }),
            _ => unreachable!("cache kind always matches layer kind"),
        }
    }
}

fn fill_bias<T: Real>(out: &mut [T], bias: &[T]) {
    for row in out.chunks_mut(bias.len()) {
        row.copy_from_slice(bias);
    }
}

fn accumulate_bias<T: Real>(gb: &mut [T], dy: &[T], oc: usize) {
    for row in dy.chunks(oc) {
        for (g, &d) in gb.iter_mut().zip(row) {
            *g = *g + d;
        }
    }
}

/// Rows are output pixels, columns `(ky * 3 + kx) * c + ch`; zero padding.
fn im2col3x3<T: Real>(x: &Tensor3<T>) -> Vec<T> {
    let (h, w, c) = x.shape();
    let k = 9 * c;
    let mut cols = vec![T::zero(); h * w * k];
    for y in 0..h {
        for xx in 0..w {
            let row = &mut cols[(y * w + xx) * k..(y * w + xx + 1) * k];
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = xx as isize + kx as isize - 1;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let src = x.idx(sy as usize, sx as usize, 0);
                    let dst = (ky * 3 + kx) * c;
                    row[dst..dst + c].copy_from_slice(&x.data[src..src + c]);
                }
            }
        }
    }
    cols
}

fn col2im3x3<T: Real>(dcols: &[T], h: usize, w: usize, c: usize) -> Tensor3<T> {
    let k = 9 * c;
    let mut dx = Tensor3::zeros(h, w, c);
    for y in 0..h {
        for xx in 0..w {
            let row = &dcols[(y * w + xx) * k..(y * w + xx + 1) * k];
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = xx as isize + kx as isize - 1;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let dst = dx.idx(sy as usize, sx as usize, 0);
                    let src = (ky * 3 + kx) * c;
                    for ch in 0..c {
                        dx.data[dst + ch] = dx.data[dst + ch] + row[src + ch];
                    }
                }
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_picks_max_and_routes_gradient() {
        let layer = Layer::<f64>::zeros(LayerSpec::new(LayerKind::MaxPool2x2, 1, 1, "p"));
        let x = Tensor3::from_vec(2, 2, 1, vec![1.0, 4.0, 3.0, 2.0]);
        let (y, cache) = layer.forward(&x).unwrap();
        assert_eq!(y.data, vec![4.0]);
        let dx = layer.backward(&x, &y, &cache, &Tensor3::from_vec(1, 1, 1, vec![5.0]), &mut [], &mut [], true).unwrap();
        assert_eq!(dx.data, vec![0.0, 5.0, 0.0, 0.0]);
    }

    #[test]
    fn odd_pool_and_channel_mismatch_rejected() {
        let pool = Layer::<f32>::zeros(LayerSpec::new(LayerKind::MaxPool2x2, 1, 1, "p"));
        assert!(pool.output_shape((3, 4, 1)).is_err());
        let conv = Layer::<f32>::zeros(LayerSpec::new(LayerKind::Conv3x3, 2, 4, "c"));
        assert!(conv.output_shape((4, 4, 3)).is_err());
    }
}
