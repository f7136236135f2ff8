use std::path::Path;
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::bce_on_tape;
use crate::embed::{check_layout, Checkpoint};
use crate::error::{Error, Result};
use crate::eval::ScoredNodeSet;
use crate::numerics::{glorot_uniform, Adam, AdamConfig, BoundParams, ParamSet, Tape, Tensor, Var};
use crate::tgraph::{NodeId, NodeTable, Split};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DownstreamConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for DownstreamConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            lr: 3e-4,
            epochs: 100,
            hidden: vec![64],
            seed: 42,
        }
    }
}

impl DownstreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("downstream batch_size must be at least 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("decoder hidden widths must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("downstream lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// One line of a training trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub phase: String,
    pub epoch: usize,
    pub loss: f64,
    pub valid_auc: Option<f64>,
}

/// Anything that scores nodes with a probability and can be trained by BCE.
pub trait NodeModel {
    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;
    fn node_count(&self) -> usize;
    /// `[nodes x 1]` probabilities of the listed nodes.
    fn forward(&self, tape: &mut Tape, bound: &BoundParams, nodes: &[NodeId]) -> Result<Var>;

    /// Probability for every node, without gradients.
    fn predict(&self) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let bound = self.params().bind(&mut tape);
        let all: Vec<NodeId> = (0..self.node_count()).collect();
        let p = self.forward(&mut tape, &bound, &all)?;
        Ok(tape.value(p).data().to_vec())
    }
}

/// MLP mapping an input row to a fraud probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoder {
    dims: Vec<usize>,
    params: ParamSet,
}

fn weight(k: usize) -> String {
    format!("dec.w{k}")
}

fn bias(k: usize) -> String {
    format!("dec.b{k}")
}

impl Decoder {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut params = ParamSet::new();
        for k in 0..dims.len() - 1 {
            params.insert(weight(k), glorot_uniform(rng, dims[k], dims[k + 1]))?;
            params.insert(bias(k), Tensor::zeros(&[1, dims[k + 1]]))?;
        }
        Ok(Self { dims, params })
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Pre-sigmoid scores `[rows x 1]`.
    pub fn logits(&self, tape: &mut Tape, bound: &BoundParams, x: Var) -> Result<Var> {
        let layers = self.dims.len() - 1;
        let mut h = x;
        for k in 0..layers {
            h = tape.matmul(h, bound.var(&weight(k))?)?;
            h = tape.add_row(h, bound.var(&bias(k))?)?;
            if k + 1 < layers {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }

    pub fn forward(&self, tape: &mut Tape, bound: &BoundParams, x: Var) -> Result<Var> {
        let z = self.logits(tape, bound, x)?;
        Ok(tape.sigmoid(z))
    }

    /// Probability for every row of `inputs`.
    pub fn predict(&self, inputs: &Tensor) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let x = tape.constant(inputs.clone());
        let p = self.forward(&mut tape, &bound, x)?;
        Ok(tape.value(p).data().to_vec())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let dims: Vec<String> = self.dims.iter().map(usize::to_string).collect();
        Checkpoint {
            config: vec![
                ("model".into(), "decoder".into()),
                ("dims".into(), dims.join(",")),
            ],
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.config_value("model") != Some("decoder") {
            return Err(Error::config("checkpoint does not hold a decoder"));
        }
        let dims = ckpt
            .config_value("dims")
            .unwrap_or("")
            .split(',')
            .map(str::parse)
            .collect::<std::result::Result<Vec<usize>, _>>()
            .map_err(|_| Error::config("decoder checkpoint has malformed `dims`"))?;
        if dims.len() < 2 || dims.last() != Some(&1) {
            return Err(Error::config("decoder checkpoint has malformed `dims`"));
        }
        let template = Self::new(dims[0], &dims[1..dims.len() - 1], &mut rand::rngs::mock::StepRng::new(0, 1))?;
        check_layout(&template.params, &ckpt.params)?;
        Ok(Self {
            dims,
            params: ckpt.params.clone(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

/// A decoder applied to fixed per-node input rows.
pub struct RowClassifier<'a> {
    pub decoder: Decoder,
    pub inputs: &'a Tensor,
}

impl NodeModel for RowClassifier<'_> {
    fn params(&self) -> &ParamSet {
        &self.decoder.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.decoder.params
    }

    fn node_count(&self) -> usize {
        self.inputs.rows()
    }

    fn forward(&self, tape: &mut Tape, bound: &BoundParams, nodes: &[NodeId]) -> Result<Var> {
        let x = tape.constant(self.inputs.clone());
        let x = tape.gather_rows(x, Rc::new(nodes.to_vec()))?;
        self.decoder.forward(tape, bound, x)
    }

    fn predict(&self) -> Result<Vec<f64>> {
        self.decoder.predict(self.inputs)
    }
}

/// AUC of `scores` on one split, or `None` when the split lacks a class.
pub fn split_auc(scores: &[f64], nodes: &NodeTable, split: Split) -> Result<Option<f64>> {
    match ScoredNodeSet::from_scores(scores, nodes)?.auc_on(split) {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Mini-batch BCE training of `model` on the train split, recording valid AUC per epoch.
///
/// Only train-split nodes ever enter the loss.
pub fn train_classifier<M: NodeModel>(model: &mut M, nodes: &NodeTable, cfg: &DownstreamConfig) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    if model.node_count() != nodes.len() {
        return Err(Error::contract(format!(
            "model covers {} nodes, table has {}",
            model.node_count(),
            nodes.len()
        )));
    }
    let mut train = nodes.nodes_in(Split::Train);
    if train.is_empty() {
        return Err(Error::contract("no labeled train nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(AdamConfig::with_lr(cfg.lr), model.params());
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        train.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in train.chunks(cfg.batch_size) {
            let targets: Vec<f64> = batch
                .iter()
                .map(|&i| nodes.label(i).target().expect("train nodes are labeled"))
                .collect();
            let mut tape = Tape::new();
            let bound = model.params().bind(&mut tape);
            let p = model.forward(&mut tape, &bound, batch)?;
            let loss = bce_on_tape(&mut tape, p, Rc::new(targets))?;
            let value = tape.value(loss).item()?;
            if !value.is_finite() {
                return Err(Error::Numeric(format!("downstream loss {value} in epoch {epoch}")));
            }
            tape.backward(loss)?;
            adam.step(model.params_mut(), &bound.grads(&tape))?;
            total += value * batch.len() as f64;
        }
        let valid_auc = split_auc(&model.predict()?, nodes, Split::Valid)?;
        trace.push(EpochRecord {
            phase: "downstream".into(),
            epoch,
            loss: total / train.len() as f64,
            valid_auc,
        });
    }
    Ok(trace)
}

/// Trains a fresh decoder on frozen per-node embeddings.
pub fn train_downstream(embeddings: &Tensor, nodes: &NodeTable, cfg: &DownstreamConfig) -> Result<(Decoder, Vec<EpochRecord>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let decoder = Decoder::new(embeddings.cols(), &cfg.hidden, &mut rng)?;
    let mut model = RowClassifier {
        decoder,
        inputs: embeddings,
    };
    let trace = train_classifier(&mut model, nodes, cfg)?;
    Ok((model.decoder, trace))
}
