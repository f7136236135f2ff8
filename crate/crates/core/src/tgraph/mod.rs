//! Continuous-time dynamic graph storage, temporal neighbor lookup and the
//! canonical dataset files.

mod dataset;
mod index;
mod io;

pub use dataset::{
    chronological_batches, DatasetBundle, Label, Metadata, NodeId, NodeTable, Split, TemporalEdge,
};
pub use index::{Cutoff, NeighborIndex, NeighborMode, TemporalNeighbor};
pub use io::{format_g, load_dataset, save_dataset, EDGES_FILE, NODES_FILE};
