use crate::error::{Error, Result};

pub type NodeId = usize;

/// One timestamped interaction `src -> dst` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub t: f64,
    pub feat: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Unlabeled,
    Normal,
    Fraud,
}

impl Label {
    pub fn code(self) -> i8 {
        match self {
            Label::Unlabeled => -1,
            Label::Normal => 0,
            Label::Fraud => 1,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            -1 => Some(Label::Unlabeled),
            0 => Some(Label::Normal),
            1 => Some(Label::Fraud),
            _ => None,
        }
    }

    /// `0.0` / `1.0` for labeled nodes.
    pub fn target(self) -> Option<f64> {
        match self {
            Label::Unlabeled => None,
            Label::Normal => Some(0.0),
            Label::Fraud => Some(1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
    Background,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
            Split::Background => "bg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "valid" => Some(Split::Valid),
            "test" => Some(Split::Test),
            "bg" => Some(Split::Background),
            _ => None,
        }
    }
}

/// Per-node static features, labels and split assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeTable {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<Label>,
    splits: Vec<Split>,
}

impl NodeTable {
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<Label>, splits: Vec<Split>) -> Result<Self> {
        let n = labels.len();
        if splits.len() != n || features.len() != n * dim {
            return Err(Error::contract(format!(
                "node table sizes disagree: {} labels, {} splits, {} feature values for dim {dim}",
                n,
                splits.len(),
                features.len()
            )));
        }
        for (i, (&label, &split)) in labels.iter().zip(&splits).enumerate() {
            check_label_split(label, split).map_err(|msg| Error::contract(format!("node {i}: {msg}")))?;
        }
        Ok(Self {
            dim,
            features,
            labels,
            splits,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature(&self, i: NodeId) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn label(&self, i: NodeId) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn split(&self, i: NodeId) -> Split {
        self.splits[i]
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    /// Labeled nodes of one split, ascending by id.
    pub fn nodes_in(&self, split: Split) -> Vec<NodeId> {
        (0..self.len())
            .filter(|&i| self.splits[i] == split && self.labels[i] != Label::Unlabeled)
            .collect()
    }
}

pub(crate) fn check_label_split(label: Label, split: Split) -> std::result::Result<(), String> {
    match (label, split) {
        (Label::Unlabeled, Split::Background) => Ok(()),
        (Label::Unlabeled, s) => Err(format!("unlabeled node in split `{}`", s.as_str())),
        (_, Split::Background) => Err("labeled node in background split".to_string()),
        _ => Ok(()),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metadata {
    pub name: String,
    pub seed: Option<u64>,
}

/// Nodes, time-sorted edge log and declared dimensions of one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle {
    nodes: NodeTable,
    edges: Vec<TemporalEdge>,
    edge_dim: usize,
    meta: Metadata,
}

impl DatasetBundle {
    pub fn new(nodes: NodeTable, edges: Vec<TemporalEdge>, edge_dim: usize, meta: Metadata) -> Result<Self> {
        let n = nodes.len();
        let mut prev = f64::NEG_INFINITY;
        for (k, e) in edges.iter().enumerate() {
            if e.src >= n || e.dst >= n {
                return Err(Error::contract(format!(
                    "edge {k} ({} -> {}) references a node outside 0..{n}",
                    e.src, e.dst
                )));
            }
            if !e.t.is_finite() {
                return Err(Error::contract(format!("edge {k} has non-finite time {}", e.t)));
            }
            if e.t < prev {
                return Err(Error::contract(format!(
                    "edge log not sorted by time at edge {k} ({} after {prev})",
                    e.t
                )));
            }
            if e.feat.len() != edge_dim {
                return Err(Error::contract(format!(
                    "edge {k} has {} features, expected {edge_dim}",
                    e.feat.len()
                )));
            }
            prev = e.t;
        }
        Ok(Self {
            nodes,
            edges,
            edge_dim,
            meta,
        })
    }

    pub fn nodes(&self) -> &NodeTable {
        &self.nodes
    }

    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_dim(&self) -> usize {
        self.nodes.dim()
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    pub fn meta(&self) -> &Metadata {
        &self.meta
    }

    /// Same bundle with a different edge log (validated again).
    pub fn with_edges(&self, edges: Vec<TemporalEdge>) -> Result<Self> {
        Self::new(self.nodes.clone(), edges, self.edge_dim, self.meta.clone())
    }
}

/// Splits the edge log into consecutive slices of `batch_size` edges.
pub fn chronological_batches(
    edges: &[TemporalEdge],
    batch_size: usize,
) -> Result<std::slice::Chunks<'_, TemporalEdge>> {
    if batch_size == 0 {
        return Err(Error::contract("batch size must be at least 1"));
    }
    Ok(edges.chunks(batch_size))
}
