use rand::seq::SliceRandom;

use super::model::{CnnModel, DropoutSource};
use super::{AdamState, CnnConfig};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::seed;

/// Geometric decay from `lr_start` at epoch 0 to `lr_end` at the last epoch.
pub fn lr_schedule(epoch: usize, config: &CnnConfig) -> f64 {
    if config.epochs <= 1 {
        return config.lr_start;
    }
    let frac = epoch.min(config.epochs - 1) as f64 / (config.epochs - 1) as f64;
    config.lr_start * (config.lr_end / config.lr_start).powf(frac)
}

#[derive(Debug, Clone)]
pub struct TrainedCnn {
    pub model: CnnModel,
    /// Mean training loss of each epoch, measured on the mini-batches as they
    /// were seen (dropout active).
    pub loss_history: Vec<f64>,
}

/// Mini-batch Adam training with per-epoch seeded shuffling.
pub fn train(
    config: &CnnConfig,
    embedding: EmbeddingMatrix,
    max_len: usize,
    num_classes: usize,
    examples: &[(Vec<usize>, usize)],
) -> Result<TrainedCnn> {
    config.validate()?;
    let mut present = vec![false; num_classes];
    for (_, y) in examples {
        if *y >= num_classes {
            return Err(Error::Invalid(format!("class {y} out of range")));
        }
        present[*y] = true;
    }
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(Error::MissingClass(format!("index {missing}")));
    }

    let mut model = CnnModel::new(config.clone(), embedding, max_len, num_classes)?;
    let mut adam = AdamState::new(&model.params);
    let mut active = vec![true; model.params.len()];
    active[0] = config.embedding_trainable;

    let mut shuffle_rng = seed::rng(seed::derive(config.seed, &["cnn", "shuffle"], &[]));
    let mut dropout_rng = seed::rng(seed::derive(config.seed, &["cnn", "dropout"], &[]));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut batch = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        let lr = lr_schedule(epoch, config);
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| examples[i].clone()));
            let (loss, grads) = model.backward(&batch, &mut DropoutSource::Sample(&mut dropout_rng))?;
            epoch_loss += loss * chunk.len() as f64;
            adam.step(&mut model.params, &grads, lr, &active);
        }
        if !model.is_finite() {
            return Err(Error::Invalid(format!("non-finite parameters after epoch {epoch}")));
        }
        history.push(epoch_loss / examples.len() as f64);
    }
    Ok(TrainedCnn {
        model,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_endpoints_and_midpoint() {
        let cfg = CnnConfig {
            epochs: 3,
            ..CnnConfig::default()
        };
        assert_eq!(lr_schedule(0, &cfg), 0.005);
        assert!((lr_schedule(2, &cfg) - 0.0001).abs() < 1e-18);
        assert!((lr_schedule(1, &cfg) - (0.005f64 * 0.0001).sqrt()).abs() < 1e-15);
        let single = CnnConfig {
            epochs: 1,
            ..CnnConfig::default()
        };
        assert_eq!(lr_schedule(0, &single), 0.005);
    }

    #[test]
    fn schedule_is_nonincreasing() {
        let cfg = CnnConfig::default();
        let lrs: Vec<f64> = (0..cfg.epochs).map(|e| lr_schedule(e, &cfg)).collect();
        assert!(lrs.windows(2).all(|w| w[1] <= w[0]));
        assert!((lrs[cfg.epochs - 1] - 0.0001).abs() < 1e-15);
    }
}
