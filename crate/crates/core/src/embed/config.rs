use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tgraph::NeighborMode;

/// Neighborhood aggregation rule of a temporal embedding layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EmbedKind {
    Attn,
    Sum,
    Mean,
    Conv,
}

impl EmbedKind {
    pub const ALL: [EmbedKind; 4] = [EmbedKind::Attn, EmbedKind::Sum, EmbedKind::Mean, EmbedKind::Conv];

    pub fn as_str(self) -> &'static str {
        match self {
            EmbedKind::Attn => "attn",
            EmbedKind::Sum => "sum",
            EmbedKind::Mean => "mean",
            EmbedKind::Conv => "conv",
        }
    }
}

impl fmt::Display for EmbedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmbedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attn" => Ok(EmbedKind::Attn),
            "sum" => Ok(EmbedKind::Sum),
            "mean" => Ok(EmbedKind::Mean),
            "conv" => Ok(EmbedKind::Conv),
            other => Err(Error::config(format!(
                "unknown embedding kind `{other}` (expected attn, sum, mean or conv)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbedConfig {
    pub kind: EmbedKind,
    pub layers: usize,
    pub heads: usize,
    /// Cap on temporal neighbors per node and layer.
    pub neighbors: usize,
    pub hidden: usize,
    pub time_dim: usize,
    pub mode: NeighborMode,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            kind: EmbedKind::Mean,
            layers: 1,
            heads: 2,
            neighbors: 10,
            hidden: 128,
            time_dim: 32,
            mode: NeighborMode::Undirected,
        }
    }
}

impl EmbedConfig {
    pub fn with_kind(kind: EmbedKind) -> Self {
        Self { kind, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::config("layers must be at least 1"));
        }
        if self.neighbors == 0 {
            return Err(Error::config("neighbor cap must be at least 1"));
        }
        if self.hidden == 0 || self.time_dim == 0 {
            return Err(Error::config("hidden and time dimensions must be positive"));
        }
        if self.kind == EmbedKind::Attn && (self.heads == 0 || self.hidden % self.heads != 0) {
            return Err(Error::config(format!(
                "hidden dim {} not divisible by {} attention heads",
                self.hidden, self.heads
            )));
        }
        Ok(())
    }
}
