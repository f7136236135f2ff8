//! Test-only oracles and fixtures, independent of the library's tape and index.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempograd::embed::{EmbedConfig, EmbedKind};
use tempograd::numerics::ParamSet;
use tempograd::tgraph::{DatasetBundle, Label, Metadata, NodeTable, Split, TemporalEdge};

pub fn small_config(kind: EmbedKind, layers: usize) -> EmbedConfig {
    EmbedConfig {
        kind,
        layers,
        heads: 2,
        neighbors: 4,
        hidden: 6,
        time_dim: 4,
        ..EmbedConfig::default()
    }
}

/// Random graph with integer timestamps (so ties are common).
pub fn random_bundle(seed: u64, nodes: usize, edges: usize, node_dim: usize, edge_dim: usize) -> DatasetBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = (0..nodes * node_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let labels = (0..nodes)
        .map(|i| if i % 3 == 0 { Label::Fraud } else { Label::Normal })
        .collect();
    let splits = (0..nodes).map(|i| [Split::Train, Split::Valid, Split::Test][i % 3]).collect();
    let table = NodeTable::new(node_dim, features, labels, splits).unwrap();
    let mut times: Vec<f64> = (0..edges).map(|_| f64::from(rng.gen_range(0..12u32))).collect();
    times.sort_by(f64::total_cmp);
    let log = times
        .into_iter()
        .map(|t| TemporalEdge {
            src: rng.gen_range(0..nodes),
            dst: rng.gen_range(0..nodes),
            t,
            feat: (0..edge_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        })
        .collect();
    DatasetBundle::new(table, log, edge_dim, Metadata::default()).unwrap()
}

/// Every distinct edge time, midpoints between them, and points outside the range.
pub fn query_times(bundle: &DatasetBundle) -> Vec<f64> {
    let mut ts: Vec<f64> = bundle.edges().iter().map(|e| e.t).collect();
    ts.dedup();
    let mut out = vec![-1.0];
    for w in ts.windows(2) {
        out.push((w[0] + w[1]) / 2.0);
    }
    out.extend(&ts);
    out.push(ts.last().copied().unwrap_or(0.0) + 1.0);
    out
}

fn mat(p: &ParamSet, name: &str) -> (Vec<f64>, usize, usize) {
    let t = p.get(name).unwrap();
    (t.data().to_vec(), t.shape()[0], t.shape()[1])
}

fn vecmat(x: &[f64], w: &(Vec<f64>, usize, usize)) -> Vec<f64> {
    let (data, rows, cols) = w;
    assert_eq!(x.len(), *rows);
    let mut out = vec![0.0; *cols];
    for (r, &xv) in x.iter().enumerate() {
        for c in 0..*cols {
            out[c] += xv * data[r * cols + c];
        }
    }
    out
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

fn add(a: Vec<f64>, b: &[f64]) -> Vec<f64> {
    a.into_iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Direct evaluation of `z_i(t)` that rescans the whole edge log for every
/// neighbor lookup (undirected, strict `t_j < t`, most recent `K`).
pub struct Reference<'a> {
    pub config: &'a EmbedConfig,
    pub params: &'a ParamSet,
    pub bundle: &'a DatasetBundle,
}

impl Reference<'_> {
    fn neighbors(&self, i: usize, t: f64) -> Vec<(usize, usize, f64)> {
        let mut found: Vec<(usize, usize, f64)> = Vec::new();
        for (pos, e) in self.bundle.edges().iter().enumerate() {
            if e.t >= t {
                continue;
            }
            if e.src == i {
                found.push((e.dst, pos, e.t));
            } else if e.dst == i {
                found.push((e.src, pos, e.t));
            }
        }
        found.sort_by(|a, b| b.2.total_cmp(&a.2).then(b.1.cmp(&a.1)));
        found.truncate(self.config.neighbors);
        found
    }

    fn phi(&self, dt: f64) -> Vec<f64> {
        let omega = self.params.get("time.omega").unwrap().data();
        let phase = self.params.get("time.phase").unwrap().data();
        omega.iter().zip(phase).map(|(w, b)| (w * dt + b).cos()).collect()
    }

    pub fn embed(&self, i: usize, t: f64) -> Vec<f64> {
        self.state(i, t, self.config.layers)
    }

    fn state(&self, i: usize, t: f64, layer: usize) -> Vec<f64> {
        if layer == 0 {
            return self.bundle.nodes().feature(i).to_vec();
        }
        let prev = self.state(i, t, layer - 1);
        let rows: Vec<Vec<f64>> = self
            .neighbors(i, t)
            .into_iter()
            .map(|(j, pos, tj)| {
                let mut row = self.state(j, t, layer - 1);
                row.extend(&self.bundle.edges()[pos].feat);
                row.extend(self.phi(t - tj));
                row
            })
            .collect();
        let p = |part: &str| mat(self.params, &format!("l{layer}.{part}"));
        let d_h = self.config.hidden;
        match self.config.kind {
            EmbedKind::Sum | EmbedKind::Mean | EmbedKind::Conv => {
                let w1 = p("w1");
                let mut agg = vec![0.0; d_h];
                for row in &rows {
                    agg = add(agg, &vecmat(row, &w1));
                }
                if self.config.kind == EmbedKind::Mean && !rows.is_empty() {
                    agg.iter_mut().for_each(|v| *v /= rows.len() as f64);
                }
                let (agg, combine) = if self.config.kind == EmbedKind::Conv {
                    (relu(vecmat(&agg, &p("conv"))), p("combine"))
                } else {
                    (relu(agg), p("w2"))
                };
                let mut joined = prev;
                joined.extend(agg);
                vecmat(&joined, &combine)
            }
            EmbedKind::Attn => {
                let heads = self.config.heads;
                let width = d_h / heads;
                let mut q_in = prev.clone();
                q_in.extend(self.phi(0.0));
                let q = vecmat(&q_in, &p("query"));
                let keys: Vec<Vec<f64>> = rows.iter().map(|r| vecmat(r, &p("key"))).collect();
                let values: Vec<Vec<f64>> = rows.iter().map(|r| vecmat(r, &p("value"))).collect();
                let mut attended = vec![0.0; d_h];
                for h in 0..heads {
                    let cols = h * width..(h + 1) * width;
                    let scores: Vec<f64> = keys
                        .iter()
                        .map(|k| cols.clone().map(|c| q[c] * k[c]).sum::<f64>() / (width as f64).sqrt())
                        .collect();
                    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
                    let total: f64 = exps.iter().sum();
                    for (e, v) in exps.iter().zip(&values) {
                        for c in cols.clone() {
                            attended[c] += e / total * v[c];
                        }
                    }
                }
                let agg = vecmat(&attended, &p("output"));
                let mut joined = prev;
                joined.extend(agg);
                let b1 = self.params.get(&format!("l{layer}.mlp1_bias")).unwrap().data().to_vec();
                let b2 = self.params.get(&format!("l{layer}.mlp2_bias")).unwrap().data().to_vec();
                let hidden = relu(add(vecmat(&joined, &p("mlp1")), &b1));
                add(vecmat(&hidden, &p("mlp2")), &b2)
            }
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Features whose first coordinate is `+-(1 + |noise|)` by class; the rest is noise.
/// Labels alternate fraud/normal, splits cycle train/train/valid/test.
pub fn separable_table(seed: u64, nodes: usize, dim: usize) -> NodeTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<Label> = (0..nodes)
        .map(|i| if i % 2 == 0 { Label::Fraud } else { Label::Normal })
        .collect();
    let mut features = Vec::with_capacity(nodes * dim);
    for l in &labels {
        let sign = if *l == Label::Fraud { 1.0 } else { -1.0 };
        features.push(sign * (1.0 + rng.gen_range(0.0..1.0)));
        features.extend((1..dim).map(|_| rng.gen_range(-1.0..1.0)));
    }
    let splits = (0..nodes)
        .map(|i| [Split::Train, Split::Train, Split::Valid, Split::Test][(i / 2) % 4])
        .collect();
    NodeTable::new(dim, features, labels, splits).unwrap()
}
