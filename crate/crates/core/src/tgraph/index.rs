use super::dataset::{NodeId, TemporalEdge};
use crate::error::{Error, Result};

/// Which endpoint(s) an edge is filed under.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum NeighborMode {
    /// Under `src`, pointing at `dst`.
    DirectedOut,
    /// Under `dst`, pointing at `src`.
    DirectedIn,
    /// Under both endpoints.
    #[default]
    Undirected,
}

impl NeighborMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NeighborMode::DirectedOut => "out",
            NeighborMode::DirectedIn => "in",
            NeighborMode::Undirected => "undirected",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "out" => Some(NeighborMode::DirectedOut),
            "in" => Some(NeighborMode::DirectedIn),
            "undirected" => Some(NeighborMode::Undirected),
            _ => None,
        }
    }
}

/// Time cutoff used by [`NeighborIndex::neighbors_before`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Cutoff {
    /// Only events with `t_j < t`.
    #[default]
    Strict,
    /// Events with `t_j <= t`. Lets an edge see itself; kept for leakage tests.
    Inclusive,
}

/// One entry of a node's temporal adjacency list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemporalNeighbor {
    pub node: NodeId,
    /// Position of the edge in the log.
    pub edge: usize,
    pub t: f64,
}

/// Per-node adjacency lists sorted by time, ties in edge-log order.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborIndex {
    lists: Vec<Vec<TemporalNeighbor>>,
    mode: NeighborMode,
    cutoff: Cutoff,
}

impl NeighborIndex {
    pub fn build(node_count: usize, edges: &[TemporalEdge], mode: NeighborMode) -> Result<Self> {
        let mut lists = vec![Vec::new(); node_count];
        let mut prev = f64::NEG_INFINITY;
        for (pos, e) in edges.iter().enumerate() {
            if !(e.t >= prev) {
                return Err(Error::contract(format!(
                    "edge log not sorted at position {pos}: t={} after {prev}",
                    e.t
                )));
            }
            prev = e.t;
            if e.src >= node_count || e.dst >= node_count {
                return Err(Error::contract(format!(
                    "edge {pos} ({} -> {}) outside 0..{node_count}",
                    e.src, e.dst
                )));
            }
            let out = TemporalNeighbor { node: e.dst, edge: pos, t: e.t };
            let inc = TemporalNeighbor { node: e.src, edge: pos, t: e.t };
            match mode {
                NeighborMode::DirectedOut => lists[e.src].push(out),
                NeighborMode::DirectedIn => lists[e.dst].push(inc),
                NeighborMode::Undirected => {
                    lists[e.src].push(out);
                    if e.src != e.dst {
                        lists[e.dst].push(inc);
                    }
                }
            }
        }
        Ok(Self {
            lists,
            mode,
            cutoff: Cutoff::Strict,
        })
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn mode(&self) -> NeighborMode {
        self.mode
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn node_count(&self) -> usize {
        self.lists.len()
    }

    /// Full time-sorted list of node `i`.
    pub fn neighbors(&self, i: NodeId) -> Result<&[TemporalNeighbor]> {
        self.lists
            .get(i)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::contract(format!("unknown node {i} (index has {})", self.lists.len())))
    }

    /// Up to `k` neighbors of `i` with `t_j` before `t`, most recent first.
    pub fn neighbors_before(&self, i: NodeId, t: f64, k: usize) -> Result<Vec<TemporalNeighbor>> {
        if k == 0 {
            return Err(Error::contract("neighbor count K must be at least 1"));
        }
        let list = self.neighbors(i)?;
        let end = match self.cutoff {
            Cutoff::Strict => list.partition_point(|n| n.t < t),
            Cutoff::Inclusive => list.partition_point(|n| n.t <= t),
        };
        let start = end.saturating_sub(k);
        Ok(list[start..end].iter().rev().copied().collect())
    }
}
