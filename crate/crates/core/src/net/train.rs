use rand::seq::SliceRandom;
use rand::Rng;

use super::network::{CellTargets, Gradients, NetworkDef};
use super::tensor::Tensor3;
use super::NetError;

/// One input with a target grid per network head.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub input: Tensor3<f32>,
    pub targets: Vec<CellTargets>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr: f32,
    pub steps: usize,
    /// Samples per step; a batch at least as large as the dataset uses every
    /// sample on every step.
    pub batch_size: usize,
    /// Stop once the batch loss falls below this value.
    pub stop_below: Option<f32>,
    pub schedule: LrSchedule,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Decays linearly from `lr` at the first step towards zero after the
    /// last one.
    Linear,
}

impl TrainConfig {
    pub fn new(lr: f32, steps: usize, batch_size: usize) -> Self {
        Self { lr, steps, batch_size, stop_below: None, schedule: LrSchedule::Constant }
    }

    pub fn lr_at(&self, step: usize) -> f32 {
        match self.schedule {
            LrSchedule::Constant => self.lr,
            LrSchedule::Linear => self.lr * (1.0 - step as f32 / self.steps.max(1) as f32),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
}

impl TrainLog {
    pub fn initial_loss(&self) -> Option<f32> {
        self.steps.first().map(|s| s.loss)
    }

    pub fn final_loss(&self) -> Option<f32> {
        self.steps.last().map(|s| s.loss)
    }
}

/// Mean loss and gradient over a batch, accumulated in sample order.
pub fn batch_gradient(net: &NetworkDef<f32>, batch: &[&TrainSample]) -> Result<(f32, Gradients<f32>), NetError> {
    let mut acc = Gradients::zeros_like(net);
    let mut loss = 0.0f32;
    let scale = 1.0 / batch.len().max(1) as f32;
    for sample in batch {
        let (l, g) = net.loss_and_grad(&sample.input, &sample.targets)?;
        loss += l * scale;
        acc.add_scaled(&g, scale);
    }
    Ok((loss, acc))
}

/// Plain minibatch SGD. Minibatches are drawn from a reshuffled pass over
/// the samples; the loss recorded for a step is the batch loss before its
/// update.
pub fn train<R: Rng + ?Sized>(
    net: &mut NetworkDef<f32>,
    samples: &[TrainSample],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<TrainLog, NetError> {
    if !(cfg.lr >= 0.0) {
        return Err(NetError::Config(format!("learning rate must be >= 0, got {}", cfg.lr)));
    }
    if samples.is_empty() || cfg.batch_size == 0 {
        return Err(NetError::Config("training needs at least one sample and a positive batch size".into()));
    }
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut cursor = order.len();
    for step in 0..cfg.steps {
        let batch: Vec<&TrainSample> = if cfg.batch_size >= samples.len() {
            samples.iter().collect()
        } else {
            (0..cfg.batch_size)
                .map(|_| {
                    if cursor == order.len() {
                        order.shuffle(rng);
                        cursor = 0;
                    }
                    cursor += 1;
                    &samples[order[cursor - 1]]
                })
                .collect()
        };
        let (loss, grads) = batch_gradient(net, &batch)?;
        if !loss.is_finite() {
            return Err(NetError::NonFiniteLoss { step });
        }
        log.steps.push(StepRecord { step, loss });
        if cfg.stop_below.is_some_and(|t| loss < t) {
            break;
        }
        net.apply_sgd(&grads, cfg.lr_at(step));
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::build_refinenet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_samples() -> Vec<TrainSample> {
        (0..4)
            .map(|i| TrainSample {
                input: Tensor3::from_vec(24, 24, 1, (0..576).map(|p| ((p * (i + 1)) % 13) as f32 / 13.0).collect()),
                targets: vec![CellTargets::filled(1, 1, Some(i * 1000))],
            })
            .collect()
    }

    #[test]
    fn linear_schedule() {
        let cfg = TrainConfig { schedule: LrSchedule::Linear, ..TrainConfig::new(0.2, 4, 1) };
        let lrs: Vec<f32> = (0..4).map(|s| cfg.lr_at(s)).collect();
        assert_eq!(lrs, vec![0.2, 0.15, 0.1, 0.05]);
        assert_eq!(TrainConfig::new(0.2, 4, 1).lr_at(3), 0.2);
    }

    #[test]
    fn zero_lr_keeps_parameters() {
        let mut net = build_refinenet(0.125).unwrap();
        net.init_he_uniform(&mut ChaCha8Rng::seed_from_u64(1));
        let before = net.clone();
        let cfg = TrainConfig::new(0.0, 3, 2);
        train(&mut net, &toy_samples(), &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn same_seed_same_log() {
        let run = || {
            let mut net = build_refinenet(0.125).unwrap();
            net.init_he_uniform(&mut ChaCha8Rng::seed_from_u64(1));
            let cfg = TrainConfig::new(0.05, 5, 2);
            train(&mut net, &toy_samples(), &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_loss_aborts() {
        let mut net = build_refinenet(0.125).unwrap();
        net.init_he_uniform(&mut ChaCha8Rng::seed_from_u64(1));
        net.heads[0].layers[2].bias[0] = f32::NAN;
        let cfg = TrainConfig::new(0.1, 2, 4);
        let err = train(&mut net, &toy_samples(), &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap_err();
        assert!(matches!(err, NetError::NonFiniteLoss { step: 0 }));
    }
}
