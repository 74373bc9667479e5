//! Classifiers: the bidirectional LSTM with pooled readout and three heads,
//! its trainer and checkpoint format, the logistic-regression baseline, and
//! the alignment prior correction.

pub mod baseline;
pub mod checkpoint;
pub mod lstm;
pub mod network;
pub mod neutral;
pub mod train;

pub use baseline::{train_baseline, BaselineConfig, LogisticRegression};
pub use checkpoint::{AdamState, Checkpoint, CheckpointMeta};
pub use lstm::{bilstm_forward, lstm_cell, CellParams};
pub use network::{argmax, attention_pool, cross_entropy, loss, multi_pool, softmax, Logits, Network, NetworkSpec, Readout, Targets};
pub use neutral::{neutral_correction, NeutralCorrector};
pub use train::{train, train_step, EpochRecord, TrainConfig, TrainOutcome};
