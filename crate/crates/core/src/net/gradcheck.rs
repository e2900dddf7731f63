//! Central finite-difference checks of the analytic backward pass, run in
//! `f64`.

use rand::seq::index::sample;
use rand::{Rng, RngExt};

use super::layers::{Layer, LayerKind, LayerSpec};
use super::network::{softmax_cross_entropy, CellTargets, GridSmoothing, NetworkDef, CELL, REFINE_PATCH};
use super::tensor::Tensor3;
use super::NetError;

pub const GRADCHECK_EPS: f64 = 1e-4;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Denominator floor so that two near-zero gradients compare as equal.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub name: String,
    /// Number of scalar derivatives compared.
    pub checked: usize,
    /// Sampled derivatives whose finite-difference interval crossed a ReLU
    /// kink or changed a max-pool winner; the function is not differentiable
    /// there so they are excluded from the comparison.
    pub skipped: usize,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < GRADCHECK_TOLERANCE
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn random_tensor<R: Rng + ?Sized>(h: usize, w: usize, c: usize, rng: &mut R) -> Tensor3<f64> {
    Tensor3::from_vec(h, w, c, (0..h * w * c).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Values bounded away from zero and pairwise separated, so that neither a
/// ReLU kink nor a max-pool tie lies within `eps` of any input.
fn separated_tensor<R: Rng + ?Sized>(h: usize, w: usize, c: usize, rng: &mut R) -> Tensor3<f64> {
    let n = h * w * c;
    let mut values: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64 * 2.0 - 1.0).collect();
    rand::seq::SliceRandom::shuffle(values.as_mut_slice(), rng);
    for v in &mut values {
        if v.abs() < 0.05 {
            *v += 0.1f64.copysign(*v);
        }
    }
    Tensor3::from_vec(h, w, c, values)
}

/// Checks one layer under the scalar loss `sum(y * r)` for a fixed random
/// `r`, comparing parameter and input derivatives.
pub fn check_layer<R: Rng + ?Sized>(kind: LayerKind, rng: &mut R) -> Result<GradCheckReport, NetError> {
    let (h, w, cin, cout) = (4, 6, 3, 5);
    let spec = match kind {
        LayerKind::Relu | LayerKind::MaxPool2x2 => LayerSpec::new(kind, cin, cin, "layer"),
        LayerKind::Dense => LayerSpec::new(kind, h * w * cin, cout, "layer"),
        _ => LayerSpec::new(kind, cin, cout, "layer"),
    };
    let mut layer = Layer::<f64>::zeros(spec);
    layer.weight.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    layer.bias.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    let mut x = separated_tensor(h, w, cin, rng);
    let (oh, ow, oc) = layer.output_shape(x.shape())?;
    let r = random_tensor(oh, ow, oc, rng);

    let loss = |layer: &Layer<f64>, x: &Tensor3<f64>| -> f64 {
        let (y, _) = layer.forward(x).expect("shape checked");
        y.data.iter().zip(&r.data).map(|(a, b)| a * b).sum()
    };

    let (y, cache) = layer.forward(&x)?;
    let mut gw = vec![0.0; layer.weight.len()];
    let mut gb = vec![0.0; layer.bias.len()];
    let dx = layer.backward(&x, &y, &cache, &r, &mut gw, &mut gb, true).expect("input gradient requested");

    let mut report = GradCheckReport { name: format!("{kind:?}"), checked: 0, skipped: 0, max_rel_error: 0.0 };
    let mut record = |a: f64, n: f64| {
        report.checked += 1;
        report.max_rel_error = report.max_rel_error.max(relative_error(a, n));
    };
    for i in 0..layer.weight.len() {
        let orig = layer.weight[i];
        layer.weight[i] = orig + GRADCHECK_EPS;
        let plus = loss(&layer, &x);
        layer.weight[i] = orig - GRADCHECK_EPS;
        let minus = loss(&layer, &x);
        layer.weight[i] = orig;
        record(gw[i], (plus - minus) / (2.0 * GRADCHECK_EPS));
    }
    for i in 0..layer.bias.len() {
        let orig = layer.bias[i];
        layer.bias[i] = orig + GRADCHECK_EPS;
        let plus = loss(&layer, &x);
        layer.bias[i] = orig - GRADCHECK_EPS;
        let minus = loss(&layer, &x);
        layer.bias[i] = orig;
        record(gb[i], (plus - minus) / (2.0 * GRADCHECK_EPS));
    }
    for i in 0..x.data.len() {
        let orig = x.data[i];
        x.data[i] = orig + GRADCHECK_EPS;
        let plus = loss(&layer, &x);
        x.data[i] = orig - GRADCHECK_EPS;
        let minus = loss(&layer, &x);
        x.data[i] = orig;
        record(dx.data[i], (plus - minus) / (2.0 * GRADCHECK_EPS));
    }
    Ok(report)
}

/// Softmax cross-entropy with a mix of live and ignored cells, checked
/// against the logits.
pub fn check_softmax_cross_entropy<R: Rng + ?Sized>(rng: &mut R) -> Result<GradCheckReport, NetError> {
    check_cross_entropy("SoftmaxCrossEntropy", 17, None, rng)
}

/// The same check with Gaussian grid targets over a 4x4 class grid.
pub fn check_smoothed_cross_entropy<R: Rng + ?Sized>(rng: &mut R) -> Result<GradCheckReport, NetError> {
    check_cross_entropy("SoftmaxCrossEntropySmoothed", 16, Some(GridSmoothing { side: 4, sigma: 1.0 }), rng)
}

fn check_cross_entropy<R: Rng + ?Sized>(
    name: &str,
    classes: usize,
    smoothing: Option<GridSmoothing>,
    rng: &mut R,
) -> Result<GradCheckReport, NetError> {
    let mut logits = random_tensor(3, 3, classes, rng);
    logits.data.iter_mut().for_each(|v| *v *= 3.0);
    let mut targets = CellTargets::filled(3, 3, None);
    for y in 0..3 {
        for x in 0..3 {
            if rng.random_bool(0.7) {
                targets.set(y, x, Some(rng.random_range(0..classes)));
            }
        }
    }
    targets.set(0, 0, Some(0));
    targets.smoothing = smoothing;
    let (_, grad) = softmax_cross_entropy(&logits, &targets)?;
    let mut report = GradCheckReport { name: name.into(), checked: 0, skipped: 0, max_rel_error: 0.0 };
    for i in 0..logits.data.len() {
        let orig = logits.data[i];
        let mut eval = |v: f64| {
            logits.data[i] = v;
            softmax_cross_entropy(&logits, &targets).expect("valid targets").0
        };
        let numeric = (eval(orig + GRADCHECK_EPS) - eval(orig - GRADCHECK_EPS)) / (2.0 * GRADCHECK_EPS);
        logits.data[i] = orig;
        report.checked += 1;
        report.max_rel_error = report.max_rel_error.max(relative_error(grad.data[i], numeric));
    }
    Ok(report)
}

/// Random input and targets matching the network's input contract.
pub fn random_problem<R: Rng + ?Sized>(net: &NetworkDef<f64>, rng: &mut R) -> (Tensor3<f64>, Vec<CellTargets>) {
    let (h, w) = match net.kind {
        super::NetKind::CharucoNet => (2 * CELL, 3 * CELL),
        super::NetKind::RefineNet => (REFINE_PATCH, REFINE_PATCH),
    };
    let input = Tensor3::from_vec(h, w, 1, (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect());
    let out = net.forward(&input).expect("input matches contract");
    let targets = out
        .iter()
        .map(|o| {
            let mut t = CellTargets::filled(o.h, o.w, None);
            for y in 0..o.h {
                for x in 0..o.w {
                    t.set(y, x, Some(rng.random_range(0..o.c)));
                }
            }
            t
        })
        .collect();
    (input, targets)
}

/// Compares up to `per_tensor` randomly chosen entries of every weight and
/// bias tensor of the composed network.
pub fn check_network<R: Rng + ?Sized>(
    name: &str,
    net: &NetworkDef<f64>,
    input: &Tensor3<f64>,
    targets: &[CellTargets],
    per_tensor: usize,
    rng: &mut R,
) -> Result<GradCheckReport, NetError> {
    let (_, grads) = net.loss_and_grad(input, targets)?;
    let mut work = net.clone();
    let base_pattern = net.activation_pattern(input)?;
    let mut report = GradCheckReport { name: name.into(), checked: 0, skipped: 0, max_rel_error: 0.0 };
    let n_layers = work.layers().count();
    for li in 0..n_layers {
        for which in 0..2 {
            let len = {
                let l = work.layers().nth(li).expect("index in range");
                if which == 0 { l.weight.len() } else { l.bias.len() }
            };
            if len == 0 {
                continue;
            }
            for i in sample(rng, len, per_tensor.min(len)) {
                let orig = {
                    let l = net.layers().nth(li).expect("index in range");
                    if which == 0 { l.weight[i] } else { l.bias[i] }
                };
                let mut eval = |v: f64| -> Result<(f64, Vec<usize>), NetError> {
                    let l = work.layers_mut().nth(li).expect("index in range");
                    if which == 0 { l.weight[i] = v } else { l.bias[i] = v }
                    Ok((work.loss(input, targets)?, work.activation_pattern(input)?))
                };
                let (plus, plus_pattern) = eval(orig + GRADCHECK_EPS)?;
                let (minus, minus_pattern) = eval(orig - GRADCHECK_EPS)?;
                eval(orig)?;
                if plus_pattern != base_pattern || minus_pattern != base_pattern {
                    report.skipped += 1;
                    continue;
                }
                let numeric = (plus - minus) / (2.0 * GRADCHECK_EPS);
                let g = &grads.layers[li];
                let analytic = if which == 0 { g.weight[i] } else { g.bias[i] };
                report.checked += 1;
                report.max_rel_error = report.max_rel_error.max(relative_error(analytic, numeric));
            }
        }
    }
    Ok(report)
}

/// Every layer kind in isolation, the loss, and both composed networks at
/// the given width.
pub fn run_all<R: Rng + ?Sized>(width_multiplier: f64, per_tensor: usize, rng: &mut R) -> Result<Vec<GradCheckReport>, NetError> {
    let mut reports = Vec::new();
    for kind in [LayerKind::Conv3x3, LayerKind::Conv1x1, LayerKind::Relu, LayerKind::MaxPool2x2, LayerKind::Dense] {
        reports.push(check_layer(kind, rng)?);
    }
    reports.push(check_softmax_cross_entropy(rng)?);
    reports.push(check_smoothed_cross_entropy(rng)?);
    let arch = super::Arch::from_multiplier(width_multiplier)?;
    for (name, mut net) in [("ChArUcoNet", NetworkDef::<f64>::charuconet(arch)), ("RefineNet", NetworkDef::<f64>::refinenet(arch))] {
        net.init_he_uniform(rng);
        for layer in net.layers_mut() {
            layer.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
        }
        let (input, targets) = random_problem(&net, rng);
        reports.push(check_network(name, &net, &input, &targets, per_tensor, rng)?);
    }
    Ok(reports)
}
