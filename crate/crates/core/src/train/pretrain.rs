use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::link_loss_on_tape;
use crate::embed::{Embedder, GraphView};
use crate::error::{Error, Result};
use crate::numerics::{Adam, AdamConfig, BoundParams, Tape, Var};
use crate::tgraph::{chronological_batches, DatasetBundle, NeighborIndex, NodeId, TemporalEdge};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub negatives: usize,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 200,
            lr: 1e-4,
            epochs: 10,
            negatives: 1,
            seed: 42,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.negatives == 0 {
            return Err(Error::config("pretrain batch_size and negatives must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("pretrain lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Uniform node id in `[0, node_count)`.
pub fn sample_negative<R: Rng + ?Sized>(rng: &mut R, node_count: usize) -> Result<NodeId> {
    if node_count == 0 {
        return Err(Error::contract("cannot sample a negative from an empty node set"));
    }
    Ok(rng.gen_range(0..node_count))
}

/// Link-prediction loss of one chronological batch, built on `tape`.
fn batch_loss(
    tape: &mut Tape,
    embedder: &Embedder,
    bound: &BoundParams,
    graph: GraphView<'_>,
    batch: &[TemporalEdge],
    negatives: &[Vec<NodeId>],
) -> Result<Var> {
    let b = batch.len();
    let mut queries: Vec<(NodeId, f64)> = Vec::with_capacity(b * (2 + negatives.len()));
    queries.extend(batch.iter().map(|e| (e.src, e.t)));
    queries.extend(batch.iter().map(|e| (e.dst, e.t)));
    for negs in negatives {
        queries.extend(negs.iter().zip(batch).map(|(&k, e)| (k, e.t)));
    }
    let z = embedder.embed_batch(tape, bound, graph, &queries)?;
    let mut block = |k: usize| tape.gather_rows(z, Rc::new((k * b..(k + 1) * b).collect()));
    let zu = block(0)?;
    let zi = block(1)?;
    let zk = (0..negatives.len()).map(|k| block(k + 2)).collect::<Result<Vec<_>>>()?;
    link_loss_on_tape(tape, zu, zi, &zk)
}

/// Trains `embedder` in place by link prediction; returns the mean loss of each epoch.
pub fn pretrain(bundle: &DatasetBundle, embedder: &mut Embedder, cfg: &PretrainConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let index = NeighborIndex::build(bundle.node_count(), bundle.edges(), embedder.config().mode)?;
    let graph = GraphView {
        index: &index,
        nodes: bundle.nodes(),
        edges: bundle.edges(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(AdamConfig::with_lr(cfg.lr), embedder.params());
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        for batch in chronological_batches(bundle.edges(), cfg.batch_size)? {
            let negatives = (0..cfg.negatives)
                .map(|_| {
                    batch
                        .iter()
                        .map(|_| sample_negative(&mut rng, bundle.node_count()))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let mut tape = Tape::new();
            let bound = embedder.params().bind(&mut tape);
            let loss = batch_loss(&mut tape, embedder, &bound, graph, batch, &negatives)?;
            let value = tape.value(loss).item()?;
            if !value.is_finite() {
                return Err(Error::Numeric(format!("pretrain loss {value} in epoch {epoch}")));
            }
            tape.backward(loss)?;
            adam.step(embedder.params_mut(), &bound.grads(&tape))?;
            total += value * batch.len() as f64;
        }
        let mean = if bundle.edges().is_empty() {
            0.0
        } else {
            total / bundle.edges().len() as f64
        };
        trace.push(mean);
    }
    Ok(trace)
}
