use crate::embed::{Embedder, GraphView};
use crate::error::Result;
use crate::numerics::Tensor;
use crate::tgraph::{NodeId, TemporalEdge};

/// Queries per tape when embedding every node.
const CHUNK: usize = 256;

/// Half the smallest positive gap between consecutive timestamps, or 1.0
/// when the log has no such gap.
pub fn final_time_epsilon(edges: &[TemporalEdge]) -> f64 {
    let gap = edges
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .filter(|&g| g > 0.0)
        .fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        gap / 2.0
    } else {
        1.0
    }
}

/// Query time just after each node's last incident event; nodes without
/// events use the last event of the whole log.
pub fn final_times(node_count: usize, edges: &[TemporalEdge]) -> Vec<f64> {
    let eps = final_time_epsilon(edges);
    let global = edges.last().map_or(0.0, |e| e.t);
    let mut last: Vec<Option<f64>> = vec![None; node_count];
    for e in edges {
        last[e.src] = Some(e.t);
        last[e.dst] = Some(e.t);
    }
    last.into_iter().map(|t| t.unwrap_or(global) + eps).collect()
}

pub fn final_time_embedding(embedder: &Embedder, graph: GraphView<'_>, node: NodeId) -> Result<Vec<f64>> {
    let t = final_times(graph.nodes.len(), graph.edges)[node];
    embedder.embed(graph, node, t)
}

/// `[nodes x hidden]` final-time embeddings of every node.
pub fn final_time_embeddings(embedder: &Embedder, graph: GraphView<'_>) -> Result<Tensor> {
    let times = final_times(graph.nodes.len(), graph.edges);
    let queries: Vec<(NodeId, f64)> = times.into_iter().enumerate().collect();
    let hidden = embedder.config().hidden;
    let mut data = Vec::with_capacity(queries.len() * hidden);
    for chunk in queries.chunks(CHUNK) {
        data.extend(embedder.embed_many(graph, chunk)?.into_data());
    }
    Tensor::matrix(queries.len(), hidden, data)
}
