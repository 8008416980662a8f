//! Small encoder-decoder transformer for code→pseudocode, trained from
//! scratch in f64 on the CPU.

pub mod config;
pub mod gradcheck;
pub mod io;
pub mod model;
pub mod tensor;
pub mod train;
pub mod vocab;

use thiserror::Error;

pub use config::{ModelConfig, TrainConfig};
pub use gradcheck::{grad_check, grad_check_entries, GradEntry};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model};
pub use model::{attention, forward, Mask, ModelParams};
pub use tensor::Mat;
pub use train::{train, translate, Example, TrainReport, TrainedModel};
pub use vocab::{build_vocab, Vocab};

#[derive(Debug, Error)]
pub enum TinyError {
    #[error("config: {0}")]
    Config(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("sequence is empty after tokenization")]
    EmptySequence,
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("sequence of {len} tokens exceeds max_len {max_len}")]
    TooLong { len: usize, max_len: usize },
    #[error("token id {id} outside vocabulary of {vocab_size}")]
    IdOutOfRange { id: usize, vocab_size: usize },
    #[error("training diverged: non-finite loss at epoch {epoch}, step {step}")]
    Divergence { epoch: usize, step: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
