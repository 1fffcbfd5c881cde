//! Attention encoder-decoder over abstracted token ids: a stacked
//! bidirectional recurrent encoder, a recurrent decoder with input feeding
//! and attention, trained by teacher-forced negative log likelihood.

mod cell;
mod config;
pub mod gradcheck;
mod linalg;
mod model;
mod train;

pub use cell::CellState;
pub use config::{default_grid, AttentionKind, CellKind, ConfigError, ModelConfig, Optimizer};
pub use model::{weighted_average, DecoderState, EncoderStates, ModelError, ParamGroup, Seq2SeqModel, StepOutput, Stepper};
pub use train::{
    encode_split, grid_search, select_best, train, Checkpoint, EncodedPair, EpochReport, GridResult, TrainError,
};
