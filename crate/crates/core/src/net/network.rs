use rand::Rng;

use super::layers::{Cache, Layer, LayerKind, LayerSpec};
use super::tensor::{Real, Tensor3};
use super::NetError;

/// Keypoint head classes: 64 pixel positions of an 8x8 cell plus a dustbin.
pub const KEYPOINT_CLASSES: usize = 65;
pub const KEYPOINT_DUSTBIN: usize = 64;
/// Corner ids of the 5x5 board.
pub const NUM_CORNER_IDS: usize = 16;
/// Id head classes: one per corner id plus a dustbin.
pub const ID_CLASSES: usize = NUM_CORNER_IDS + 1;
pub const ID_DUSTBIN: usize = NUM_CORNER_IDS;
/// Side of the cell grid in pixels (three 2x2 poolings).
pub const CELL: usize = 8;
pub const REFINE_PATCH: usize = 24;
pub const REFINE_BOTTLENECK: usize = 8;
pub const REFINE_BINS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    CharucoNet,
    RefineNet,
}

/// Channel widths of the shared VGG-style encoder and the head layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arch {
    pub conv1: usize,
    pub conv2: usize,
    pub conv3: usize,
    pub conv4: usize,
    pub head: usize,
}

impl Arch {
    /// Full width is 64-64-128-128 in the encoder and 256 in the heads.
    pub fn from_multiplier(m: f64) -> Result<Self, NetError> {
        if !(m > 0.0 && m <= 1.0) {
            return Err(NetError::Config(format!("width multiplier must be in (0, 1], got {m}")));
        }
        let scale = |c: f64| (c * m).round() as usize;
        let arch = Self { conv1: scale(64.0), conv2: scale(64.0), conv3: scale(128.0), conv4: scale(128.0), head: scale(256.0) };
        if [arch.conv1, arch.conv2, arch.conv3, arch.conv4, arch.head].contains(&0) {
            return Err(NetError::Config(format!("width multiplier {m} produces a layer with zero channels")));
        }
        Ok(arch)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Head<T = f32> {
    pub name: String,
    pub layers: Vec<Layer<T>>,
}

/// Shared encoder plus named heads; parameters live inside the layers and
/// are addressed as `<layer>.weight` / `<layer>.bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDef<T = f32> {
    pub kind: NetKind,
    pub arch: Arch,
    pub encoder: Vec<Layer<T>>,
    pub heads: Vec<Head<T>>,
}

fn encoder_specs(a: &Arch) -> Vec<LayerSpec> {
    use LayerKind::*;
    let conv = |cin, cout, name: &str| LayerSpec::new(Conv3x3, cin, cout, name);
    let relu = |c, name: &str| LayerSpec::new(Relu, c, c, name);
    let pool = |c, name: &str| LayerSpec::new(MaxPool2x2, c, c, name);
    vec![
        conv(1, a.conv1, "conv1a"),
        relu(a.conv1, "relu1a"),
        conv(a.conv1, a.conv1, "conv1b"),
        relu(a.conv1, "relu1b"),
        pool(a.conv1, "pool1"),
        conv(a.conv1, a.conv2, "conv2a"),
        relu(a.conv2, "relu2a"),
        conv(a.conv2, a.conv2, "conv2b"),
        relu(a.conv2, "relu2b"),
        pool(a.conv2, "pool2"),
        conv(a.conv2, a.conv3, "conv3a"),
        relu(a.conv3, "relu3a"),
        conv(a.conv3, a.conv3, "conv3b"),
        relu(a.conv3, "relu3b"),
        pool(a.conv3, "pool3"),
        conv(a.conv3, a.conv4, "conv4a"),
        relu(a.conv4, "relu4a"),
        conv(a.conv4, a.conv4, "conv4b"),
        relu(a.conv4, "relu4b"),
    ]
}

fn zero_layers<T: Real>(specs: Vec<LayerSpec>) -> Vec<Layer<T>> {
    specs.into_iter().map(Layer::zeros).collect()
}

impl<T: Real> NetworkDef<T> {
    /// Zero-initialized ChArUcoNet with the given widths.
    pub fn charuconet(arch: Arch) -> Self {
        use LayerKind::*;
        let c4 = arch.conv4;
        let keypoint = vec![
            LayerSpec::new(Conv3x3, c4, arch.head, "convPa"),
            LayerSpec::new(Relu, arch.head, arch.head, "reluPa"),
            LayerSpec::new(Conv1x1, arch.head, KEYPOINT_CLASSES, "convPb"),
        ];
        let ids = vec![
            LayerSpec::new(Conv3x3, c4, arch.head, "convCa"),
            LayerSpec::new(Relu, arch.head, arch.head, "reluCa"),
            LayerSpec::new(Conv1x1, arch.head, ID_CLASSES, "convCb"),
        ];
        Self {
            kind: NetKind::CharucoNet,
            arch,
            encoder: zero_layers(encoder_specs(&arch)),
            heads: vec![
                Head { name: "keypoints".into(), layers: zero_layers(keypoint) },
                Head { name: "ids".into(), layers: zero_layers(ids) },
            ],
        }
    }

    /// Zero-initialized RefineNet: same encoder, then a 1x1 bottleneck to 8
    /// channels and a dense map to 4096 subpixel bins.
    pub fn refinenet(arch: Arch) -> Self {
        use LayerKind::*;
        let side = REFINE_PATCH / CELL;
        let head = vec![
            LayerSpec::new(Conv1x1, arch.conv4, REFINE_BOTTLENECK, "bottleneck"),
            LayerSpec::new(Relu, REFINE_BOTTLENECK, REFINE_BOTTLENECK, "relu_bottleneck"),
            LayerSpec::new(Dense, side * side * REFINE_BOTTLENECK, REFINE_BINS, "logits"),
        ];
        Self {
            kind: NetKind::RefineNet,
            arch,
            encoder: zero_layers(encoder_specs(&arch)),
            heads: vec![Head { name: "subpixel".into(), layers: zero_layers(head) }],
        }
    }

    pub fn init_he_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for layer in self.layers_mut() {
            layer.init_he_uniform(rng);
        }
    }

    /// Zero the weights of the last layer of every head, so that training
    /// starts from uniform output distributions.
    pub fn zero_output_layers(&mut self) {
        for head in &mut self.heads {
            if let Some(last) = head.layers.iter_mut().rev().find(|l| l.spec.has_params()) {
                last.weight.iter_mut().for_each(|w| *w = T::zero());
                last.bias.iter_mut().for_each(|b| *b = T::zero());
            }
        }
    }

    /// Encoder layers followed by every head's layers, in head order.
    pub fn layers(&self) -> impl Iterator<Item = &Layer<T>> {
        self.encoder.iter().chain(self.heads.iter().flat_map(|h| h.layers.iter()))
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer<T>> {
        self.encoder.iter_mut().chain(self.heads.iter_mut().flat_map(|h| h.layers.iter_mut()))
    }

    pub fn layer_specs(&self) -> Vec<&LayerSpec> {
        self.layers().map(|l| &l.spec).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(Layer::param_count).sum()
    }

    /// `(name, dims)` of every parameter tensor in storage order.
    pub fn tensor_layout(&self) -> Vec<(String, Vec<usize>)> {
        self.layers()
            .filter(|l| l.spec.has_params())
            .flat_map(|l| {
                [
                    (format!("{}.weight", l.spec.name), l.spec.weight_dims()),
                    (format!("{}.bias", l.spec.name), vec![l.spec.out_channels]),
                ]
            })
            .collect()
    }

    pub fn cast<U: Real>(&self) -> NetworkDef<U> {
        let conv = |l: &Layer<T>| Layer {
            spec: l.spec.clone(),
            weight: l.weight.iter().map(|&v| U::from_f64(v.as_f64())).collect(),
            bias: l.bias.iter().map(|&v| U::from_f64(v.as_f64())).collect(),
        };
        NetworkDef {
            kind: self.kind,
            arch: self.arch,
            encoder: self.encoder.iter().map(conv).collect(),
            heads: self
                .heads
                .iter()
                .map(|h| Head { name: h.name.clone(), layers: h.layers.iter().map(conv).collect() })
                .collect(),
        }
    }

    pub fn check_input(&self, (h, w, c): (usize, usize, usize)) -> Result<(), NetError> {
        if c != 1 {
            return Err(NetError::Shape(format!("expected a single-channel input, got {c} channels")));
        }
        match self.kind {
            NetKind::CharucoNet if h == 0 || w == 0 || h % CELL != 0 || w % CELL != 0 => Err(NetError::Shape(
                format!("ChArUcoNet input {w}x{h} must have both sides divisible by {CELL}"),
            )),
            NetKind::RefineNet if h != REFINE_PATCH || w != REFINE_PATCH => Err(NetError::Shape(format!(
                "RefineNet input must be {REFINE_PATCH}x{REFINE_PATCH}, got {w}x{h}"
            ))),
            _ => Ok(()),
        }
    }

    /// Raw logits of every head; no softmax is applied.
    pub fn forward(&self, input: &Tensor3<T>) -> Result<Vec<Tensor3<T>>, NetError> {
        Ok(self.trace(input)?.head_outputs())
    }

    pub(crate) fn trace(&self, input: &Tensor3<T>) -> Result<Trace<T>, NetError> {
        self.check_input(input.shape())?;
        let encoder = run_chain(&self.encoder, input.clone())?;
        let feature = encoder.acts.last().expect("non-empty chain").clone();
        let heads = self.heads.iter().map(|h| run_chain(&h.layers, feature.clone())).collect::<Result<_, _>>()?;
        Ok(Trace { encoder, heads })
    }

    /// ReLU on/off states and max-pool winners for one input. Two parameter
    /// settings with the same pattern lie on the same smooth piece of the
    /// network function.
    pub fn activation_pattern(&self, input: &Tensor3<T>) -> Result<Vec<usize>, NetError> {
        let trace = self.trace(input)?;
        let mut pattern = Vec::new();
        let chains = std::iter::once((&self.encoder, &trace.encoder)).chain(self.heads.iter().map(|h| &h.layers).zip(&trace.heads));
        for (layers, chain) in chains {
            for (i, layer) in layers.iter().enumerate() {
                match (&layer.spec.kind, &chain.caches[i]) {
                    (LayerKind::Relu, _) => pattern.extend(chain.acts[i].data.iter().map(|&v| usize::from(v > T::zero()))),
                    (LayerKind::MaxPool2x2, Cache::Argmax(a)) => pattern.extend_from_slice(a),
                    _ => {}
                }
            }
        }
        Ok(pattern)
    }

    /// Loss value alone, without the backward pass.
    pub fn loss(&self, input: &Tensor3<T>, targets: &[CellTargets]) -> Result<T, NetError> {
        if targets.len() != self.heads.len() {
            return Err(NetError::Target(format!("expected {} head targets, got {}", self.heads.len(), targets.len())));
        }
        let mut total = T::zero();
        for (logits, t) in self.forward(input)?.iter().zip(targets) {
            total = total + softmax_cross_entropy(logits, t)?.0;
        }
        Ok(total)
    }

    /// Mean softmax cross-entropy per head (live cells only), summed over
    /// heads, with gradients for every parameter.
    pub fn loss_and_grad(&self, input: &Tensor3<T>, targets: &[CellTargets]) -> Result<(T, Gradients<T>), NetError> {
        if targets.len() != self.heads.len() {
            return Err(NetError::Target(format!("expected {} head targets, got {}", self.heads.len(), targets.len())));
        }
        let trace = self.trace(input)?;
        let mut grads = Gradients::zeros_like(self);
        let mut total = T::zero();
        let mut dfeature: Option<Tensor3<T>> = None;
        let n_enc = self.encoder.len();
        let mut offset = n_enc;
        for (hi, head) in self.heads.iter().enumerate() {
            let chain = &trace.heads[hi];
            let logits = chain.acts.last().expect("head output");
            let (loss, dlogits) = softmax_cross_entropy(logits, &targets[hi])?;
            total = total + loss;
            let dx = backprop_chain(&head.layers, chain, dlogits, &mut grads.layers[offset..offset + head.layers.len()], true)
                .expect("input gradient requested");
            dfeature = Some(match dfeature {
                None => dx,
                Some(mut acc) => {
                    acc.data.iter_mut().zip(&dx.data).for_each(|(a, &b)| *a = *a + b);
                    acc
                }
            });
            offset += head.layers.len();
        }
        if let Some(df) = dfeature {
            backprop_chain(&self.encoder, &trace.encoder, df, &mut grads.layers[..n_enc], false);
        }
        Ok((total, grads))
    }
}

impl NetworkDef<f32> {
    pub fn apply_sgd(&mut self, grads: &Gradients<f32>, lr: f32) {
        for (layer, g) in self.layers_mut().zip(&grads.layers) {
            layer.weight.iter_mut().zip(&g.weight).for_each(|(w, &d)| *w -= lr * d);
            layer.bias.iter_mut().zip(&g.bias).for_each(|(b, &d)| *b -= lr * d);
        }
    }
}

pub fn build_charuconet(width_multiplier: f64) -> Result<NetworkDef<f32>, NetError> {
    Ok(NetworkDef::charuconet(Arch::from_multiplier(width_multiplier)?))
}

pub fn build_refinenet(width_multiplier: f64) -> Result<NetworkDef<f32>, NetError> {
    Ok(NetworkDef::refinenet(Arch::from_multiplier(width_multiplier)?))
}

/// Per-cell class targets of one head; `None` cells are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTargets {
    pub h: usize,
    pub w: usize,
    pub classes: Vec<Option<usize>>,
    /// Spread each target over neighbouring classes laid out on a square
    /// grid instead of using a one-hot distribution.
    pub smoothing: Option<GridSmoothing>,
}

/// Gaussian target distribution over classes arranged as a `side x side`
/// grid (class `side * row + col`), centred on the labelled class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSmoothing {
    pub side: usize,
    /// Standard deviation in grid steps.
    pub sigma: f64,
}

impl GridSmoothing {
    /// Normalized target distribution for `class`.
    pub fn distribution(&self, class: usize) -> Vec<f64> {
        let (cr, cc) = ((class / self.side) as f64, (class % self.side) as f64);
        let k = -0.5 / (self.sigma * self.sigma);
        let mut q: Vec<f64> = (0..self.side * self.side)
            .map(|i| {
                let (r, c) = ((i / self.side) as f64, (i % self.side) as f64);
                (k * ((r - cr).powi(2) + (c - cc).powi(2))).exp()
            })
            .collect();
        let z: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= z);
        q
    }
}

impl CellTargets {
    pub fn filled(h: usize, w: usize, class: Option<usize>) -> Self {
        Self { h, w, classes: vec![class; h * w], smoothing: None }
    }

    pub fn with_smoothing(mut self, smoothing: GridSmoothing) -> Self {
        self.smoothing = Some(smoothing);
        self
    }

    pub fn get(&self, y: usize, x: usize) -> Option<usize> {
        self.classes[y * self.w + x]
    }

    pub fn set(&mut self, y: usize, x: usize, class: Option<usize>) {
        self.classes[y * self.w + x] = class;
    }

    pub fn live_cells(&self) -> usize {
        self.classes.iter().filter(|c| c.is_some()).count()
    }
}

/// Parameter gradients, one entry per layer in [`NetworkDef::layers`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T = f32> {
    pub layers: Vec<LayerGrad<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(net: &NetworkDef<T>) -> Self {
        Self {
            layers: net
                .layers()
                .map(|l| LayerGrad { weight: vec![T::zero(); l.weight.len()], bias: vec![T::zero(); l.bias.len()] })
                .collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Self, scale: T) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.iter_mut().zip(&b.weight).for_each(|(x, &y)| *x = *x + scale * y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, &y)| *x = *x + scale * y);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }
}

pub(crate) struct ChainTrace<T> {
    /// `acts[0]` is the chain input, `acts[i + 1]` the output of layer `i`.
    acts: Vec<Tensor3<T>>,
    caches: Vec<Cache<T>>,
}

pub(crate) struct Trace<T> {
    encoder: ChainTrace<T>,
    heads: Vec<ChainTrace<T>>,
}

impl<T: Real> Trace<T> {
    fn head_outputs(self) -> Vec<Tensor3<T>> {
        self.heads.into_iter().map(|mut c| c.acts.pop().expect("head output")).collect()
    }
}

fn run_chain<T: Real>(layers: &[Layer<T>], input: Tensor3<T>) -> Result<ChainTrace<T>, NetError> {
    let mut acts = vec![input];
    let mut caches = Vec::with_capacity(layers.len());
    for layer in layers {
        let (out, cache) = layer.forward(acts.last().expect("input present"))?;
        acts.push(out);
        caches.push(cache);
    }
    Ok(ChainTrace { acts, caches })
}

fn backprop_chain<T: Real>(
    layers: &[Layer<T>],
    trace: &ChainTrace<T>,
    dout: Tensor3<T>,
    grads: &mut [LayerGrad<T>],
    need_input_grad: bool,
) -> Option<Tensor3<T>> {
    let mut d = dout;
    for i in (0..layers.len()).rev() {
        let need = need_input_grad || i > 0;
        let g = &mut grads[i];
        match layers[i].backward(&trace.acts[i], &trace.acts[i + 1], &trace.caches[i], &d, &mut g.weight, &mut g.bias, need) {
            Some(dx) => d = dx,
            None => return None,
        }
    }
    Some(d)
}

/// Softmax probabilities of one cell's logits.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean cross-entropy over live cells and its gradient w.r.t. the logits.
/// All-ignored targets give zero loss and zero gradient.
pub fn softmax_cross_entropy<T: Real>(logits: &Tensor3<T>, target: &CellTargets) -> Result<(T, Tensor3<T>), NetError> {
    if target.h != logits.h || target.w != logits.w {
        return Err(NetError::Target(format!(
            "target grid {}x{} does not match logits {}x{}",
            target.w, target.h, logits.w, logits.h
        )));
    }
    let mut grad = Tensor3::zeros(logits.h, logits.w, logits.c);
    let live = target.live_cells();
    if live == 0 {
        return Ok((T::zero(), grad));
    }
    let inv = T::one() / T::from_f64(live as f64);
    if let Some(sm) = target.smoothing {
        if sm.side * sm.side != logits.c || !(sm.sigma > 0.0) {
            return Err(NetError::Target(format!(
                "grid smoothing {}x{} (sigma {}) does not fit {} channels",
                sm.side, sm.side, sm.sigma, logits.c
            )));
        }
    }
    let smoothing = target.smoothing;
    let mut loss = T::zero();
    for y in 0..logits.h {
        for x in 0..logits.w {
            let Some(class) = target.get(y, x) else { continue };
            if class >= logits.c {
                return Err(NetError::Target(format!("class {class} out of range for {} channels", logits.c)));
            }
            let cell = logits.cell(y, x);
            let max = cell.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = max + cell.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
            let p = softmax(cell);
            let base = grad.idx(y, x, 0);
            match smoothing.as_ref() {
                None => {
                    loss = loss + (lse - cell[class]) * inv;
                    for (k, &pk) in p.iter().enumerate() {
                        let onehot = if k == class { T::one() } else { T::zero() };
                        grad.data[base + k] = (pk - onehot) * inv;
                    }
                }
                Some(sm) => {
                    let q = sm.distribution(class);
                    for (k, (&pk, &qk)) in p.iter().zip(&q).enumerate() {
                        let qk = T::from_f64(qk);
                        loss = loss + qk * (lse - cell[k]) * inv;
                        grad.data[base + k] = (pk - qk) * inv;
                    }
                }
            }
        }
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn charuconet_full_width_shapes() {
        let net = build_charuconet(1.0).unwrap();
        assert_eq!(net.arch.conv4, 128);
        let pools = net.encoder.iter().filter(|l| l.spec.kind == LayerKind::MaxPool2x2).count();
        assert_eq!(pools, 3);
        let outs: Vec<usize> = net.heads.iter().map(|h| h.layers.last().unwrap().spec.out_channels).collect();
        assert_eq!(outs, vec![65, 17]);
    }

    #[test]
    fn charuconet_heads_on_qvga() {
        for m in [0.125, 0.25] {
            let mut net = build_charuconet(m).unwrap();
            net.init_he_uniform(&mut ChaCha8Rng::seed_from_u64(0));
            let out = net.forward(&Tensor3::zeros(240, 320, 1)).unwrap();
            assert_eq!(out[0].shape(), (30, 40, 65));
            assert_eq!(out[1].shape(), (30, 40, 17));
        }
    }

    #[test]
    fn width_monotone_and_zero_channels_rejected() {
        assert!(build_charuconet(0.25).unwrap().param_count() < build_charuconet(1.0).unwrap().param_count());
        assert!(build_charuconet(0.001).is_err());
        assert!(build_charuconet(0.0).is_err());
        assert!(build_charuconet(1.5).is_err());
    }

    #[test]
    fn refinenet_shapes() {
        let net = build_refinenet(1.0).unwrap();
        let bottleneck = net.layers().find(|l| l.spec.name == "bottleneck").unwrap();
        assert_eq!((bottleneck.spec.in_channels, bottleneck.spec.out_channels), (128, 8));
        let out = net.forward(&Tensor3::zeros(24, 24, 1)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].data.len(), 4096);
        assert!(matches!(net.forward(&Tensor3::zeros(23, 24, 1)), Err(NetError::Shape(_))));
    }

    #[test]
    fn bad_input_sizes() {
        let net = build_charuconet(0.125).unwrap();
        assert!(net.forward(&Tensor3::zeros(20, 16, 1)).is_err());
        assert!(net.forward(&Tensor3::zeros(16, 16, 2)).is_err());
    }

    #[test]
    fn zero_weights_give_zero_logits() {
        let net = build_charuconet(0.125).unwrap();
        let x = Tensor3::from_vec(16, 16, 1, (0..256).map(|i| i as f32 / 256.0).collect());
        for out in net.forward(&x).unwrap() {
            assert!(out.data.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn uniform_logits_loss_is_ln_classes() {
        let logits = Tensor3::<f64>::zeros(2, 2, 65);
        let mut t = CellTargets::filled(2, 2, None);
        t.set(1, 0, Some(3));
        let (loss, grad) = softmax_cross_entropy(&logits, &t).unwrap();
        assert!((loss - 65f64.ln()).abs() < 1e-12);
        assert!((65f64.ln() - 4.174).abs() < 1e-3);
        assert!(grad.cell(0, 0).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn all_ignored_gives_zero_loss_and_grads() {
        let mut net = build_charuconet(0.125).unwrap().cast::<f64>();
        net.init_he_uniform(&mut ChaCha8Rng::seed_from_u64(1));
        let x = Tensor3::from_vec(16, 16, 1, (0..256).map(|i| (i % 7) as f64 / 7.0).collect());
        let t = vec![CellTargets::filled(2, 2, None), CellTargets::filled(2, 2, None)];
        let (loss, g) = net.loss_and_grad(&x, &t).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn out_of_range_target_rejected() {
        let logits = Tensor3::<f32>::zeros(1, 1, 17);
        let t = CellTargets::filled(1, 1, Some(17));
        assert!(matches!(softmax_cross_entropy(&logits, &t), Err(NetError::Target(_))));
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1.0f64, -3.0, 200.0, 0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
