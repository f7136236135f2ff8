//! Temporal graph embedding modules: attention, sum, mean and convolution
//! aggregation over time-ordered neighborhoods, with a learnable time
//! encoding.

mod attention;
pub mod checkpoint;
mod config;
mod embedder;
mod time;

pub use attention::{multi_head_attention, AttentionOutput, AttentionWeights};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC};
pub use config::{EmbedConfig, EmbedKind};
pub use embedder::{Embedder, GraphView};
pub(crate) use embedder::check_layout;
pub use time::TimeEncoder;
