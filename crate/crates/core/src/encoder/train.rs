use std::time::Instant;

use candle_core::backprop::GradStore;
use candle_core::Tensor;
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{scalar, Dropout, EncoderModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub gradient_accumulation: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub max_grad_norm: f64,
    pub weight_decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_accuracy: f64,
    pub optimizer_steps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub epochs: Vec<EpochMetrics>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
}

/// AdamW with linear decay to zero, gradient clipping and accumulation.
///
/// `batch_loss` returns the mean loss over the given training indices.
/// After every epoch `dev_accuracy` is evaluated; the weights of the best
/// epoch (earliest on ties) are restored before returning.
pub fn fit<L, E>(
    model: &mut EncoderModel,
    n_train: usize,
    settings: &TrainSettings,
    mut batch_loss: L,
    mut dev_accuracy: E,
) -> Result<FitOutcome>
where
    L: FnMut(&EncoderModel, &[usize], &mut Dropout) -> Result<Tensor>,
    E: FnMut(&EncoderModel) -> Result<f64>,
{
    if n_train == 0 {
        return Err(Error::Precondition("empty training set".into()));
    }
    if settings.batch_size == 0 || settings.gradient_accumulation == 0 || settings.max_epochs == 0 {
        return Err(Error::Config(format!(
            "batch size, accumulation and epochs must be positive: {settings:?}"
        )));
    }
    model.vocab_mut().freeze();

    let vars = model.params().vars();
    let mut opt = AdamW::new(
        vars.clone(),
        ParamsAdamW {
            lr: settings.learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: settings.weight_decay,
        },
    )?;
    let micro_per_epoch = n_train.div_ceil(settings.batch_size);
    let steps_per_epoch = micro_per_epoch.div_ceil(settings.gradient_accumulation);
    let total_steps = (steps_per_epoch * settings.max_epochs).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut dropout = Dropout::new(settings.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut step = 0usize;
    let mut epochs = Vec::new();
    let mut best: Option<(usize, f64, _)> = None;

    for epoch in 1..=settings.max_epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut pending: Option<GradStore> = None;
        let mut pending_count = 0;
        let mut epoch_steps = 0;
        let chunks: Vec<&[usize]> = order.chunks(settings.batch_size).collect();
        for (i, chunk) in chunks.iter().enumerate() {
            let loss = batch_loss(model, chunk, &mut dropout)?;
            let value = scalar(&loss)?;
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step: i,
                    loss: value,
                });
            }
            loss_sum += value as f64 * chunk.len() as f64;
            let scaled = (loss / settings.gradient_accumulation as f64)?;
            let grads = scaled.backward()?;
            match pending.as_mut() {
                None => pending = Some(grads),
                Some(acc) => acc.extend(grads)?,
            }
            pending_count += 1;
            let last = i + 1 == chunks.len();
            if pending_count == settings.gradient_accumulation || last {
                let mut grads = pending.take().expect("accumulated gradients");
                clip_gradients(&mut grads, &vars, settings.max_grad_norm)?;
                let lr = settings.learning_rate * (1.0 - step as f64 / total_steps as f64);
                opt.set_learning_rate(lr);
                opt.step(&grads)?;
                step += 1;
                epoch_steps += 1;
                pending_count = 0;
            }
        }
        let dev = dev_accuracy(model)?;
        let metrics = EpochMetrics {
            epoch,
            train_loss: loss_sum / n_train as f64,
            dev_accuracy: dev,
            optimizer_steps: epoch_steps,
            seconds: started.elapsed().as_secs_f64(),
        };
        info!(
            "epoch {epoch}: loss {:.4} dev accuracy {:.4}",
            metrics.train_loss, metrics.dev_accuracy
        );
        epochs.push(metrics);
        if best.as_ref().is_none_or(|(_, acc, _)| dev > *acc) {
            best = Some((epoch, dev, model.params().snapshot()?));
        }
    }

    let (best_epoch, best_dev_accuracy, snapshot) = best.expect("at least one epoch");
    model.params().restore(&snapshot)?;
    debug!("restored weights from epoch {best_epoch}");
    Ok(FitOutcome {
        epochs,
        best_epoch,
        best_dev_accuracy,
    })
}

fn clip_gradients(grads: &mut GradStore, vars: &[candle_core::Var], max_norm: f64) -> Result<()> {
    if max_norm <= 0.0 {
        return Ok(());
    }
    let mut sq = 0f64;
    for v in vars {
        if let Some(g) = grads.get(v.as_tensor()) {
            sq += g.sqr()?.sum_all()?.to_scalar::<f32>()? as f64;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm {
        let factor = max_norm / (norm + 1e-6);
        for v in vars {
            if let Some(g) = grads.remove(v.as_tensor()) {
                grads.insert(v.as_tensor(), (g * factor)?);
            }
        }
    }
    Ok(())
}
