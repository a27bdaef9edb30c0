//! Compact attention encoder-decoder trained from scratch.
//!
//! The architecture: bidirectional multi-layer long short-term memory
//! encoder, single-layer decoder initialized by concatenating the top
//! layer's final forward and backward states, additive attention
//! `e = v . tanh(Wq s + Wk h)`, and an output projection over the
//! concatenated decoder state and context. All gradients are derived by
//! hand and checked against finite differences in the test suite.

mod checkpoint;
mod config;
mod decode;
mod net;
mod params;
mod train;
mod vocab;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::ModelConfig;
pub use decode::greedy_decode;
pub use net::{backward, forward, Batch, Cache, ForwardOut, Mode};
pub use params::{Params, Scalar};
pub use train::{clip_global_norm, train, MetricsRecord, Trainer};
pub use vocab::{Vocab, EOS, PAD, SOS, UNK_ID};
