//! Static baselines trained on the time-collapsed graph: a feature-only
//! MLP, a two-layer GCN and a two-layer GraphSAGE with mean aggregation.

use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{evaluate, AucReport};
use crate::numerics::{glorot_uniform, BoundParams, ParamSet, Segments, Tape, Tensor, Var};
use crate::tgraph::{DatasetBundle, NodeId};
use crate::train::{train_classifier, Decoder, DownstreamConfig, EpochRecord, NodeModel, RowClassifier};

/// Node features plus the undirected, deduplicated, timestamp-free adjacency.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticGraph {
    features: Tensor,
    /// Sorted neighbor lists without self-loops.
    neighbors: Vec<Vec<NodeId>>,
}

/// Sparse `[n x n]` operator as gather-scale-scatter triples.
#[derive(Clone, Debug)]
struct Propagation {
    sources: Rc<Vec<usize>>,
    weights: Rc<Vec<f64>>,
    targets: Rc<Segments>,
}

impl Propagation {
    fn apply(&self, tape: &mut Tape, h: Var) -> Result<Var> {
        let rows = tape.gather_rows(h, self.sources.clone())?;
        let rows = tape.scale_rows(rows, self.weights.clone())?;
        tape.segment_sum(rows, self.targets.clone())
    }
}

impl StaticGraph {
    pub fn new(features: Tensor, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let n = features.rows();
        let mut sets = vec![BTreeSet::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::contract(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if a != b {
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        Ok(Self {
            features,
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.neighbors[i]
    }

    /// Entries `(i, j, w)` of `D^-1/2 (A + I) D^-1/2`, row-major.
    pub fn normalized_adjacency(&self) -> Vec<(NodeId, NodeId, f64)> {
        let degree: Vec<f64> = self.neighbors.iter().map(|n| (n.len() + 1) as f64).collect();
        let mut out = Vec::new();
        for (i, ns) in self.neighbors.iter().enumerate() {
            let mut row: Vec<NodeId> = ns.clone();
            row.push(i);
            row.sort_unstable();
            out.extend(row.into_iter().map(|j| (i, j, 1.0 / (degree[i] * degree[j]).sqrt())));
        }
        out
    }

    fn gcn_operator(&self) -> Result<Propagation> {
        let entries = self.normalized_adjacency();
        let targets = Segments::new(entries.iter().map(|e| e.0).collect(), self.node_count())?;
        Ok(Propagation {
            sources: Rc::new(entries.iter().map(|e| e.1).collect()),
            weights: Rc::new(entries.iter().map(|e| e.2).collect()),
            targets: Rc::new(targets),
        })
    }

    /// Row-normalized neighbor mean, zero for isolated nodes.
    fn mean_operator(&self) -> Result<Propagation> {
        let (mut ids, mut sources, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for (i, ns) in self.neighbors.iter().enumerate() {
            for &j in ns {
                ids.push(i);
                sources.push(j);
                weights.push(1.0 / ns.len() as f64);
            }
        }
        Ok(Propagation {
            sources: Rc::new(sources),
            weights: Rc::new(weights),
            targets: Rc::new(Segments::new(ids, self.node_count())?),
        })
    }
}

/// Drops timestamps, directions and duplicate edges.
pub fn collapse(bundle: &DatasetBundle) -> Result<StaticGraph> {
    let nodes = bundle.nodes();
    let features = Tensor::matrix(nodes.len(), nodes.dim(), nodes.features().to_vec())?;
    StaticGraph::new(features, bundle.edges().iter().map(|e| (e.src, e.dst)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Mlp,
    Gcn,
    Sage,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Mlp, BaselineKind::Gcn, BaselineKind::Sage];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Mlp => "mlp",
            BaselineKind::Gcn => "gcn",
            BaselineKind::Sage => "sage",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown baseline `{s}` (expected mlp, gcn or sage)")))
    }
}

/// Two-layer GCN or GraphSAGE over a static graph.
#[derive(Clone, Debug)]
pub struct GraphModel<'a> {
    kind: BaselineKind,
    graph: &'a StaticGraph,
    operator: Propagation,
    params: ParamSet,
}

impl<'a> GraphModel<'a> {
    pub fn new<R: Rng + ?Sized>(kind: BaselineKind, graph: &'a StaticGraph, hidden: usize, rng: &mut R) -> Result<Self> {
        let d = graph.features.cols();
        let mut params = ParamSet::new();
        let operator = match kind {
            BaselineKind::Gcn => {
                params.insert("gcn.w1", glorot_uniform(rng, d, hidden))?;
                params.insert("gcn.b1", Tensor::zeros(&[1, hidden]))?;
                params.insert("gcn.w2", glorot_uniform(rng, hidden, 1))?;
                params.insert("gcn.b2", Tensor::zeros(&[1, 1]))?;
                graph.gcn_operator()?
            }
            BaselineKind::Sage => {
                params.insert("sage.w1", glorot_uniform(rng, 2 * d, hidden))?;
                params.insert("sage.b1", Tensor::zeros(&[1, hidden]))?;
                params.insert("sage.w2", glorot_uniform(rng, 2 * hidden, 1))?;
                params.insert("sage.b2", Tensor::zeros(&[1, 1]))?;
                graph.mean_operator()?
            }
            BaselineKind::Mlp => return Err(Error::config("mlp is not a graph model")),
        };
        Ok(Self {
            kind,
            graph,
            operator,
            params,
        })
    }

    fn layer(&self, tape: &mut Tape, bound: &BoundParams, h: Var, layer: usize) -> Result<Var> {
        let p = |part: &str| bound.var(&format!("{}.{part}{layer}", self.kind.as_str()));
        let mixed = match self.kind {
            BaselineKind::Gcn => {
                let hw = tape.matmul(h, p("w")?)?;
                self.operator.apply(tape, hw)?
            }
            _ => {
                let agg = self.operator.apply(tape, h)?;
                let joined = tape.concat(&[h, agg])?;
                tape.matmul(joined, p("w")?)?
            }
        };
        tape.add_row(mixed, p("b")?)
    }

    /// `[nodes x 1]` logits for every node.
    pub fn logits(&self, tape: &mut Tape, bound: &BoundParams) -> Result<Var> {
        let x = tape.constant(self.graph.features.clone());
        let h = self.layer(tape, bound, x, 1)?;
        let h = tape.relu(h);
        self.layer(tape, bound, h, 2)
    }
}

impl NodeModel for GraphModel<'_> {
    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    fn forward(&self, tape: &mut Tape, bound: &BoundParams, nodes: &[NodeId]) -> Result<Var> {
        let z = self.logits(tape, bound)?;
        let z = tape.gather_rows(z, Rc::new(nodes.to_vec()))?;
        Ok(tape.sigmoid(z))
    }
}

#[derive(Clone, Debug)]
pub struct BaselineRun {
    pub report: AucReport,
    pub trace: Vec<EpochRecord>,
    /// Final probability per node.
    pub scores: Vec<f64>,
}

/// Trains one baseline on `bundle` with the downstream hyperparameters.
///
/// The mlp uses `cfg.hidden` as its hidden stack; gcn and sage use its first width.
pub fn train_baseline(kind: BaselineKind, bundle: &DatasetBundle, cfg: &DownstreamConfig) -> Result<BaselineRun> {
    cfg.validate()?;
    let graph = collapse(bundle)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (trace, scores) = match kind {
        BaselineKind::Mlp => {
            let decoder = Decoder::new(graph.features.cols(), &cfg.hidden, &mut rng)?;
            let mut model = RowClassifier {
                decoder,
                inputs: &graph.features,
            };
            let trace = train_classifier(&mut model, bundle.nodes(), cfg)?;
            (trace, model.predict()?)
        }
        _ => {
            let hidden = cfg.hidden.first().copied().unwrap_or(64);
            let mut model = GraphModel::new(kind, &graph, hidden, &mut rng)?;
            let trace = train_classifier(&mut model, bundle.nodes(), cfg)?;
            (trace, model.predict()?)
        }
    };
    let report = evaluate(kind.as_str(), &scores, bundle.nodes())?;
    Ok(BaselineRun { report, trace, scores })
}
