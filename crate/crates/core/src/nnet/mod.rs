//! Sentence CNN: embedding lookup, parallel convolution/max-pool branches, a
//! fully connected ReLU layer whose output is the "CNN code", dropout and a
//! softmax head. Hand-written backpropagation, Adam and a geometric learning
//! rate schedule.

mod adam;
mod model;
mod train;

pub use adam::AdamState;
pub use model::{
    extract_cnn_codes, forward, loss, softmax, CnnModel, DropoutSource, Forward, Gradients, Tensor,
};
pub use train::{lr_schedule, train, TrainedCnn};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub fc_size: usize,
    /// Keep probability of the dropout layer after the fully connected layer.
    pub dropout_keep: f64,
    pub l2_lambda: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub embedding_trainable: bool,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            filter_widths: vec![3, 4, 5],
            filters_per_width: 128,
            fc_size: 384,
            dropout_keep: 0.5,
            l2_lambda: 1e-3,
            lr_start: 0.005,
            lr_end: 0.0001,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            embedding_trainable: true,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_owned()));
        if self.filter_widths.is_empty() || self.filter_widths.contains(&0) {
            return fail("filter widths must be nonempty and >= 1");
        }
        if self.filters_per_width == 0 || self.fc_size == 0 {
            return fail("filters_per_width and fc_size must be positive");
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return fail("dropout_keep must lie in (0, 1]");
        }
        if !(self.l2_lambda >= 0.0) {
            return fail("l2_lambda must be nonnegative");
        }
        if !(self.lr_end > 0.0 && self.lr_end <= self.lr_start) {
            return fail("learning rates must satisfy 0 < lr_end <= lr_start");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return fail("epochs and batch_size must be positive");
        }
        Ok(())
    }

    pub fn max_width(&self) -> usize {
        self.filter_widths.iter().copied().max().unwrap_or(1)
    }
}
