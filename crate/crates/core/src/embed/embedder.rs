use std::path::Path;
use std::rc::Rc;

use rand::Rng;

use super::attention::{attend, AttnVars};
use super::checkpoint::Checkpoint;
use super::config::{EmbedConfig, EmbedKind};
use super::time::{encode_on_tape, initial_omega, TimeEncoder};
use crate::error::{Error, Result};
use crate::numerics::{glorot_uniform, BoundParams, ParamSet, Segments, Tape, Tensor, Var};
use crate::tgraph::{NeighborIndex, NeighborMode, NodeId, NodeTable, TemporalEdge};

/// Read-only graph state an embedding query runs against.
#[derive(Clone, Copy, Debug)]
pub struct GraphView<'a> {
    pub index: &'a NeighborIndex,
    pub nodes: &'a NodeTable,
    pub edges: &'a [TemporalEdge],
}

/// Learnable temporal embedding module: configuration plus parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedder {
    config: EmbedConfig,
    node_dim: usize,
    edge_dim: usize,
    params: ParamSet,
}

fn layer_name(layer: usize, part: &str) -> String {
    format!("l{layer}.{part}")
}

impl Embedder {
    pub fn new<R: Rng + ?Sized>(config: EmbedConfig, node_dim: usize, edge_dim: usize, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (d_h, d_t) = (config.hidden, config.time_dim);
        let mut params = ParamSet::new();
        params.insert("time.omega", Tensor::row(initial_omega(d_t)))?;
        params.insert("time.phase", Tensor::zeros(&[1, d_t]))?;
        for layer in 1..=config.layers {
            let d_in = if layer == 1 { node_dim } else { d_h };
            let row = d_in + edge_dim + d_t;
            let mut w = |part: &str, fan_in: usize, fan_out: usize| {
                params.insert(layer_name(layer, part), glorot_uniform(rng, fan_in, fan_out))
            };
            match config.kind {
                EmbedKind::Sum | EmbedKind::Mean => {
                    w("w1", row, d_h)?;
                    w("w2", d_in + d_h, d_h)?;
                }
                EmbedKind::Conv => {
                    w("w1", row, d_h)?;
                    w("conv", d_h, d_h)?;
                    w("combine", d_in + d_h, d_h)?;
                }
                EmbedKind::Attn => {
                    w("query", d_in + d_t, d_h)?;
                    w("key", row, d_h)?;
                    w("value", row, d_h)?;
                    w("output", d_h, d_h)?;
                    w("mlp1", d_in + d_h, d_h)?;
                    w("mlp2", d_h, d_h)?;
                    params.insert(layer_name(layer, "mlp1_bias"), Tensor::zeros(&[1, d_h]))?;
                    params.insert(layer_name(layer, "mlp2_bias"), Tensor::zeros(&[1, d_h]))?;
                }
            }
        }
        Ok(Self {
            config,
            node_dim,
            edge_dim,
            params,
        })
    }

    pub fn config(&self) -> &EmbedConfig {
        &self.config
    }

    pub fn node_dim(&self) -> usize {
        self.node_dim
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn time_encoder(&self) -> Result<TimeEncoder> {
        Ok(TimeEncoder {
            omega: self.params.get("time.omega")?.data().to_vec(),
            phase: self.params.get("time.phase")?.data().to_vec(),
        })
    }

    /// `z_i(t)` for every `(node, time)` query, as a `[queries x hidden]` tape value.
    pub fn embed_batch(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        graph: GraphView<'_>,
        queries: &[(NodeId, f64)],
    ) -> Result<Var> {
        if graph.nodes.dim() != self.node_dim {
            return Err(Error::Dimension {
                op: "embed",
                lhs: vec![graph.nodes.dim()],
                rhs: vec![self.node_dim],
            });
        }
        self.states(tape, bound, graph, queries, self.config.layers)
    }

    /// Embedding of a single node at time `t`, without gradients.
    pub fn embed(&self, graph: GraphView<'_>, node: NodeId, t: f64) -> Result<Vec<f64>> {
        Ok(self.embed_many(graph, &[(node, t)])?.into_data())
    }

    /// `[queries x hidden]` embeddings without gradients.
    pub fn embed_many(&self, graph: GraphView<'_>, queries: &[(NodeId, f64)]) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.bind_constants(&mut tape);
        let z = self.embed_batch(&mut tape, &bound, graph, queries)?;
        Ok(tape.value(z).clone())
    }

    fn bind_constants(&self, tape: &mut Tape) -> BoundParams {
        // Leaves are cheap, and nothing calls backward on this tape.
        self.params.bind(tape)
    }

    fn states(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        graph: GraphView<'_>,
        queries: &[(NodeId, f64)],
        layer: usize,
    ) -> Result<Var> {
        if layer == 0 {
            let mut data = Vec::with_capacity(queries.len() * self.node_dim);
            for &(i, _) in queries {
                if i >= graph.nodes.len() {
                    return Err(Error::contract(format!("unknown node {i}")));
                }
                data.extend_from_slice(graph.nodes.feature(i));
            }
            return Ok(tape.constant(Tensor::matrix(queries.len(), self.node_dim, data)?));
        }

        let mut sizes = Vec::with_capacity(queries.len());
        let mut nb_queries = Vec::new();
        let mut edge_feats = Vec::new();
        let mut deltas = Vec::new();
        for &(i, t) in queries {
            let nbs = graph.index.neighbors_before(i, t, self.config.neighbors)?;
            sizes.push(nbs.len());
            for n in nbs {
                nb_queries.push((n.node, t));
                edge_feats.extend_from_slice(&graph.edges[n.edge].feat);
                deltas.push(t - n.t);
            }
        }
        let segments = Rc::new(Segments::from_sizes(&sizes));

        let prev = self.states(tape, bound, graph, queries, layer - 1)?;
        let nb_prev = self.states(tape, bound, graph, &nb_queries, layer - 1)?;
        let omega = bound.var("time.omega")?;
        let phase = bound.var("time.phase")?;
        let codes = encode_on_tape(tape, omega, phase, deltas)?;
        let feats = tape.constant(Tensor::matrix(nb_queries.len(), self.edge_dim, edge_feats)?);
        let rows = tape.concat(&[nb_prev, feats, codes])?;

        let p = |part: &str| bound.var(&layer_name(layer, part));
        match self.config.kind {
            EmbedKind::Sum | EmbedKind::Mean => {
                let pooled = if self.config.kind == EmbedKind::Sum {
                    tape.segment_sum(rows, segments)?
                } else {
                    tape.segment_mean(rows, segments)?
                };
                let msg = tape.matmul(pooled, p("w1")?)?;
                let agg = tape.relu(msg);
                let joined = tape.concat(&[prev, agg])?;
                tape.matmul(joined, p("w2")?)
            }
            EmbedKind::Conv => {
                let pooled = tape.segment_sum(rows, segments)?;
                let msg = tape.matmul(pooled, p("w1")?)?;
                let mixed = tape.matmul(msg, p("conv")?)?;
                let agg = tape.relu(mixed);
                let joined = tape.concat(&[prev, agg])?;
                tape.matmul(joined, p("combine")?)
            }
            EmbedKind::Attn => {
                let zero_lag = encode_on_tape(tape, omega, phase, vec![0.0; queries.len()])?;
                let query_in = tape.concat(&[prev, zero_lag])?;
                let vars = AttnVars {
                    query: p("query")?,
                    key: p("key")?,
                    value: p("value")?,
                    output: p("output")?,
                };
                let (agg, _) = attend(tape, vars, self.config.heads, query_in, rows, rows, segments)?;
                let joined = tape.concat(&[prev, agg])?;
                let h = tape.matmul(joined, p("mlp1")?)?;
                let h = tape.add_row(h, p("mlp1_bias")?)?;
                let h = tape.relu(h);
                let h = tape.matmul(h, p("mlp2")?)?;
                tape.add_row(h, p("mlp2_bias")?)
            }
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = &self.config;
        let config = [
            ("model", "embedder".to_string()),
            ("kind", c.kind.to_string()),
            ("layers", c.layers.to_string()),
            ("heads", c.heads.to_string()),
            ("neighbors", c.neighbors.to_string()),
            ("hidden", c.hidden.to_string()),
            ("time_dim", c.time_dim.to_string()),
            ("mode", c.mode.as_str().to_string()),
            ("node_dim", self.node_dim.to_string()),
            ("edge_dim", self.edge_dim.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Checkpoint {
            config,
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let get = |key: &str| {
            ckpt.config_value(key)
                .ok_or_else(|| Error::config(format!("checkpoint lacks `{key}`")))
        };
        let num = |key: &str| -> Result<usize> {
            get(key)?
                .parse()
                .map_err(|_| Error::config(format!("checkpoint `{key}` is not an integer")))
        };
        if get("model")? != "embedder" {
            return Err(Error::config("checkpoint does not hold an embedder"));
        }
        let config = EmbedConfig {
            kind: get("kind")?.parse()?,
            layers: num("layers")?,
            heads: num("heads")?,
            neighbors: num("neighbors")?,
            hidden: num("hidden")?,
            time_dim: num("time_dim")?,
            mode: NeighborMode::parse(get("mode")?)
                .ok_or_else(|| Error::config("checkpoint has unknown neighbor mode"))?,
        };
        let (node_dim, edge_dim) = (num("node_dim")?, num("edge_dim")?);
        let template = Self::new(config, node_dim, edge_dim, &mut rand::rngs::mock::StepRng::new(0, 1))?;
        check_layout(&template.params, &ckpt.params)?;
        Ok(Self {
            params: ckpt.params.clone(),
            ..template
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

/// Names and shapes of `got` must match `expected` exactly.
pub(crate) fn check_layout(expected: &ParamSet, got: &ParamSet) -> Result<()> {
    let a: Vec<_> = expected.iter().map(|(n, t)| (n, t.shape())).collect();
    let b: Vec<_> = got.iter().map(|(n, t)| (n, t.shape())).collect();
    if a != b {
        return Err(Error::config(format!(
            "checkpoint tensors {:?} do not match expected layout {:?}",
            b.iter().map(|(n, _)| *n).collect::<Vec<_>>(),
            a.iter().map(|(n, _)| *n).collect::<Vec<_>>()
        )));
    }
    Ok(())
}
