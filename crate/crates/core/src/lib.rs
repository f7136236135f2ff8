//! Temporal graph embeddings for fraud detection on continuous-time dynamic
//! graphs: a small autodiff core, a temporal neighbor index, four embedding
//! rules (attention, sum, mean, convolution), link-prediction pretraining,
//! downstream node classification, static baselines and a synthetic
//! fraud-graph generator.

pub mod baselines;
pub mod config;
pub mod embed;
pub mod error;
pub mod eval;
pub mod numerics;
pub mod pipeline;
pub mod synth;
pub mod tgraph;
pub mod train;

pub use error::{Error, Result};
