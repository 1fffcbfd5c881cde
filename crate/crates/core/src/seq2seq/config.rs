use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Lstm,
    Gru,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionKind {
    /// `v^T tanh(W_k h_j + W_q s + b)`
    #[default]
    Additive,
    /// `s^T W h_j`
    Multiplicative,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Sgd,
    Adam,
}

/// Architecture and training budget. Everything the parameter layout
/// depends on lives here, so a config plus a flat parameter vector fully
/// describes a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub cell_kind: CellKind,
    pub attention: AttentionKind,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub hidden_units: usize,
    pub embedding_dim: usize,
    pub vocabulary_size: usize,
    pub max_epochs: usize,
    /// Optional cap on optimizer steps, checked after every batch.
    pub max_steps: Option<u64>,
    /// Upper bounds of the input-length buckets used to form batches.
    pub bucket_spec: Vec<usize>,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate when validation loss fails to improve.
    pub lr_decay: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    pub grad_clip: f64,
    /// Parameters start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    /// Validation runs every this many epochs and yields one checkpoint.
    pub eval_interval: usize,
    /// Stop after this many evaluations without improvement.
    pub patience: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            cell_kind: CellKind::Lstm,
            attention: AttentionKind::Additive,
            encoder_layers: 1,
            decoder_layers: 2,
            hidden_units: 256,
            embedding_dim: 512,
            vocabulary_size: 0,
            max_epochs: 30,
            max_steps: None,
            bucket_spec: vec![10, 20, 30, 40, 50, 60, 80, 100],
            batch_size: 32,
            optimizer: Optimizer::Sgd,
            learning_rate: 1.0,
            lr_decay: 0.5,
            grad_clip: 5.0,
            init_scale: 0.1,
            eval_interval: 1,
            patience: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid model config: {0}")]
pub struct ConfigError(pub String);

impl ModelConfig {
    /// The architecture that won the original hyperparameter search.
    pub fn full_size(vocabulary_size: usize) -> ModelConfig {
        ModelConfig {
            vocabulary_size,
            ..ModelConfig::default()
        }
    }

    /// Small architecture for tests and desk-scale experiments.
    pub fn tiny(vocabulary_size: usize, units: usize) -> ModelConfig {
        ModelConfig {
            decoder_layers: 1,
            hidden_units: units,
            embedding_dim: units,
            vocabulary_size,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: &str| Err(ConfigError(String::from(m)));
        if self.encoder_layers == 0 || self.decoder_layers == 0 {
            return err("layer counts must be positive");
        }
        if self.hidden_units == 0 || self.embedding_dim == 0 {
            return err("hidden_units and embedding_dim must be positive");
        }
        if self.vocabulary_size < 4 {
            return err("vocabulary_size must cover the three specials and at least one token");
        }
        if self.batch_size == 0 || self.eval_interval == 0 {
            return err("batch_size and eval_interval must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return err("learning_rate must be finite and non-negative");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return err("lr_decay must be in (0, 1]");
        }
        if !(self.grad_clip >= 0.0) || !(self.init_scale >= 0.0) {
            return err("grad_clip and init_scale must be non-negative");
        }
        if self.bucket_spec.windows(2).any(|w| w[0] >= w[1]) || self.bucket_spec.contains(&0) {
            return err("bucket_spec must be strictly increasing and positive");
        }
        Ok(())
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = match self.cell_kind {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        };
        write!(
            f,
            "{cell} enc{}x{} dec{}x{} emb{}",
            self.encoder_layers, self.hidden_units, self.decoder_layers, self.hidden_units, self.embedding_dim
        )
    }
}

/// Ten architectures over cell kind, layer counts (1, 2, 4), units
/// (256, 512) and embedding size (256, 512). The first entry is the
/// full-size default.
pub fn default_grid(vocabulary_size: usize) -> Vec<ModelConfig> {
    use CellKind::{Gru, Lstm};
    let shapes: [(CellKind, usize, usize, usize, usize); 10] = [
        (Lstm, 1, 2, 256, 512),
        (Lstm, 1, 1, 256, 256),
        (Lstm, 2, 2, 256, 256),
        (Lstm, 1, 2, 512, 512),
        (Lstm, 2, 4, 256, 512),
        (Lstm, 4, 4, 256, 256),
        (Gru, 1, 1, 256, 256),
        (Gru, 1, 2, 256, 512),
        (Gru, 2, 2, 512, 512),
        (Gru, 2, 4, 256, 256),
    ];
    shapes
        .iter()
        .map(|&(cell_kind, enc, dec, units, emb)| ModelConfig {
            cell_kind,
            encoder_layers: enc,
            decoder_layers: dec,
            hidden_units: units,
            embedding_dim: emb,
            vocabulary_size,
            ..ModelConfig::default()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(ModelConfig::full_size(100).validate().is_ok());
        assert!(ModelConfig::default().validate().is_err());
        let grid = default_grid(100);
        assert_eq!(grid.len(), 10);
        assert_eq!(grid[0], ModelConfig::full_size(100));
        let mut c = ModelConfig::tiny(10, 8);
        c.bucket_spec = vec![10, 10];
        assert!(c.validate().is_err());
    }
}
