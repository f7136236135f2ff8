//! Synthetic fraud graphs whose label signal lives only in edge timing.
//!
//! Every node emits a slow stream of edges to members of its own community.
//! Per-node activity is gamma-distributed, so raw degree overlaps heavily
//! between classes. Fraud nodes additionally fire one burst of edges inside a
//! short window to random nodes anywhere in the graph, after which the
//! account is closed: no later edge touches it. Node features are standard
//! normal for everyone.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tgraph::{DatasetBundle, Label, Metadata, NodeTable, Split, TemporalEdge};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_nodes: usize,
    pub fraud_rate: f64,
    pub communities: usize,
    pub node_dim: usize,
    pub edge_dim: usize,
    /// Expected number of background edges a node emits over the horizon.
    pub normal_rate: f64,
    /// Gamma shape of the per-node activity multiplier (mean 1).
    pub activity_shape: f64,
    pub burst_size: usize,
    pub burst_window: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_nodes: 2000,
            fraud_rate: 0.1,
            communities: 10,
            node_dim: 16,
            edge_dim: 4,
            normal_rate: 5.0,
            activity_shape: 1.0,
            burst_size: 5,
            burst_window: 5.0,
            horizon: 10_000.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::config(msg));
        if !(self.fraud_rate > 0.0 && self.fraud_rate < 1.0) {
            return fail(format!("fraud_rate must lie in (0, 1), got {}", self.fraud_rate));
        }
        if self.communities == 0 || self.n_nodes < self.communities {
            return fail(format!(
                "need n_nodes >= communities >= 1, got {} nodes and {} communities",
                self.n_nodes, self.communities
            ));
        }
        if self.n_nodes < 2 {
            return fail("need at least two nodes".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return fail(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.burst_window >= 0.0 && self.burst_window <= self.horizon) {
            return fail(format!(
                "burst_window {} does not fit in horizon {}",
                self.burst_window, self.horizon
            ));
        }
        if !(self.normal_rate >= 0.0 && self.normal_rate.is_finite()) {
            return fail(format!("normal_rate must be non-negative, got {}", self.normal_rate));
        }
        if !(self.activity_shape > 0.0 && self.activity_shape.is_finite()) {
            return fail(format!("activity_shape must be positive, got {}", self.activity_shape));
        }
        Ok(())
    }

    pub fn fraud_count(&self) -> usize {
        (self.n_nodes as f64 * self.fraud_rate).round() as usize
    }
}

/// Standard normal sample rounded to `f32`, so datasets survive the text format.
fn normal32(rng: &mut ChaCha8Rng) -> f64 {
    let x: f64 = rng.sample(StandardNormal);
    x as f32 as f64
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal32(rng)).collect()
}

/// Uniform member of `pool` other than `avoid` whose account is open at `t`.
fn pick_open(rng: &mut ChaCha8Rng, pool: &[usize], avoid: usize, t: f64, closed_at: &[f64]) -> Option<usize> {
    let open: Vec<usize> = pool.iter().copied().filter(|&j| j != avoid && t <= closed_at[j]).collect();
    if open.is_empty() {
        None
    } else {
        Some(open[rng.gen_range(0..open.len())])
    }
}

/// 70/15/15 split of one class, rounding valid and test to the nearest count.
fn stratify(rng: &mut ChaCha8Rng, mut members: Vec<usize>, splits: &mut [Split]) {
    members.shuffle(rng);
    let n = members.len() as f64;
    let train = (n * 0.70).round() as usize;
    let valid = (n * 0.15).round() as usize;
    for (k, &i) in members.iter().enumerate() {
        splits[i] = if k < train {
            Split::Train
        } else if k < train + valid {
            Split::Valid
        } else {
            Split::Test
        };
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<DatasetBundle> {
    cfg.validate()?;
    let n = cfg.n_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let fraud_count = cfg.fraud_count();
    let mut labels = vec![Label::Normal; n];
    for &i in &order[..fraud_count] {
        labels[i] = Label::Fraud;
    }

    order.shuffle(&mut rng);
    let mut community = vec![0; n];
    let mut members = vec![Vec::new(); cfg.communities];
    for (k, &i) in order.iter().enumerate() {
        community[i] = k % cfg.communities;
        members[k % cfg.communities].push(i);
    }
    for m in &mut members {
        m.sort_unstable();
    }

    let features: Vec<f64> = (0..n).flat_map(|_| normal_vec(&mut rng, cfg.node_dim)).collect();

    // Fraud accounts stream normally until their burst, then close.
    let mut onset = vec![f64::INFINITY; n];
    let mut closed_at = vec![f64::INFINITY; n];
    for u in 0..n {
        if labels[u] == Label::Fraud {
            onset[u] = rng.gen_range(0.0..=cfg.horizon - cfg.burst_window);
            closed_at[u] = onset[u] + cfg.burst_window;
        }
    }

    let activity = Gamma::new(cfg.activity_shape, 1.0 / cfg.activity_shape)
        .map_err(|e| Error::config(format!("activity_shape: {e}")))?;
    let all: Vec<usize> = (0..n).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        let active_until = onset[u].min(cfg.horizon);
        let rate = cfg.normal_rate * activity.sample(&mut rng) * active_until / cfg.horizon;
        let count = if rate > 0.0 {
            Poisson::new(rate)
                .map_err(|e| Error::config(format!("normal_rate: {e}")))?
                .sample(&mut rng) as usize
        } else {
            0
        };
        for _ in 0..count {
            let t = rng.gen_range(0.0..active_until);
            if let Some(dst) = pick_open(&mut rng, &members[community[u]], u, t, &closed_at) {
                edges.push(TemporalEdge { src: u, dst, t, feat: normal_vec(&mut rng, cfg.edge_dim) });
            }
        }
        if labels[u] == Label::Fraud {
            for _ in 0..cfg.burst_size {
                let t = onset[u] + rng.gen_range(0.0..=cfg.burst_window);
                if let Some(dst) = pick_open(&mut rng, &all, u, t, &closed_at) {
                    edges.push(TemporalEdge { src: u, dst, t, feat: normal_vec(&mut rng, cfg.edge_dim) });
                }
            }
        }
    }
    edges.sort_by(|a, b| a.t.total_cmp(&b.t));

    let mut splits = vec![Split::Train; n];
    let (fraud, normal): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| labels[i] == Label::Fraud);
    stratify(&mut rng, fraud, &mut splits);
    stratify(&mut rng, normal, &mut splits);

    let nodes = NodeTable::new(cfg.node_dim, features, labels, splits)?;
    let meta = Metadata { name: "synth".into(), seed: Some(cfg.seed) };
    DatasetBundle::new(nodes, edges, cfg.edge_dim, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig { n_nodes: 400, seed, ..SynthConfig::default() }
    }

    #[test]
    fn same_seed_same_bundle() {
        let a = generate(&small(3)).unwrap();
        let b = generate(&small(3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate(&small(4)).unwrap());
    }

    #[test]
    fn fraud_count_and_stratification() {
        for seed in 0..3 {
            let cfg = SynthConfig { seed, ..SynthConfig::default() };
            let b = generate(&cfg).unwrap();
            let fraud = b.nodes().labels().iter().filter(|&&l| l == Label::Fraud).count();
            assert_eq!(fraud, 200);
            for split in [Split::Train, Split::Valid, Split::Test] {
                let ids = b.nodes().nodes_in(split);
                let f = ids.iter().filter(|&&i| b.nodes().label(i) == Label::Fraud).count();
                let rate = f as f64 / ids.len() as f64;
                assert!((rate - cfg.fraud_rate).abs() <= 0.02, "{split:?}: {rate}");
            }
        }
    }

    #[test]
    fn fraud_nodes_emit_their_burst() {
        let cfg = small(9);
        let b = generate(&cfg).unwrap();
        let mut out = vec![0usize; cfg.n_nodes];
        for e in b.edges() {
            out[e.src] += 1;
        }
        for i in 0..cfg.n_nodes {
            if b.nodes().label(i) == Label::Fraud {
                assert!(out[i] >= cfg.burst_size);
            }
        }
        assert!(b.edges().windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn normal_edges_stay_inside_communities() {
        let cfg = SynthConfig { fraud_rate: 0.01, n_nodes: 300, burst_size: 0, ..SynthConfig::default() };
        let b = generate(&cfg).unwrap();
        // Recover communities as connected components; there must be at least as many as configured.
        let mut parent: Vec<usize> = (0..cfg.n_nodes).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for e in b.edges() {
            let (a, c) = (find(&mut parent, e.src), find(&mut parent, e.dst));
            parent[a] = c;
        }
        let roots: std::collections::HashSet<usize> = (0..cfg.n_nodes).map(|i| find(&mut parent, i)).collect();
        assert!(roots.len() >= cfg.communities);
    }

    #[test]
    fn feature_means_do_not_separate_classes() {
        let b = generate(&SynthConfig::default()).unwrap();
        let nodes = b.nodes();
        let d = nodes.dim();
        let mean = |label: Label| {
            let ids: Vec<usize> = (0..nodes.len()).filter(|&i| nodes.label(i) == label).collect();
            let mut m = vec![0.0; d];
            for &i in &ids {
                for (a, x) in m.iter_mut().zip(nodes.feature(i)) {
                    *a += x / ids.len() as f64;
                }
            }
            (m, ids.len() as f64)
        };
        let (mf, nf) = mean(Label::Fraud);
        let (mn, nn) = mean(Label::Normal);
        let sigma = (1.0 / nf + 1.0 / nn).sqrt();
        for k in 0..d {
            assert!((mf[k] - mn[k]).abs() < 3.0 * sigma, "coordinate {k}");
        }
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let bad = [
            SynthConfig { burst_window: 2e4, ..SynthConfig::default() },
            SynthConfig { fraud_rate: 0.0, ..SynthConfig::default() },
            SynthConfig { fraud_rate: 1.0, ..SynthConfig::default() },
            SynthConfig { n_nodes: 5, ..SynthConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(generate(&cfg), Err(Error::Config(_))), "{cfg:?}");
        }
    }
}
