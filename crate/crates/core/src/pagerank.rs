//! Source selection by PageRank on the transposed graph.
//!
//! Ranking the transpose favours vertices that reach many others, which keeps
//! the shortest-path tree large.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::VertexId;

pub const DAMPING: f64 = 0.85;
pub const MAX_ITERATIONS: usize = 50;
pub const TOLERANCE: f64 = 1e-9;

/// PageRank scores on the transpose of the given edge set, keyed by vertex in
/// ascending id order.
pub fn transposed_pagerank(
    edges: impl IntoIterator<Item = (VertexId, VertexId)>,
) -> Vec<(VertexId, f64)> {
    let edges: Vec<(VertexId, VertexId)> = edges.into_iter().collect();
    let ids: Vec<VertexId> = edges
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = ids.len();
    if n == 0 {
        return Vec::new();
    }
    let index = |v: VertexId| ids.binary_search(&v).expect("vertex indexed");

    // Transposed edge v -> u for every original u -> v.
    let mut out_degree = vec![0usize; n];
    let mut transposed: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
    for &(u, v) in &edges {
        let (from, to) = (index(v), index(u));
        out_degree[from] += 1;
        transposed.push((from, to));
    }

    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_ITERATIONS {
        let dangling: f64 = (0..n).filter(|&i| out_degree[i] == 0).map(|i| rank[i]).sum();
        let base = (1.0 - DAMPING) / nf + DAMPING * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for &(from, to) in &transposed {
            next[to] += DAMPING * rank[from] / out_degree[from] as f64;
        }
        let change: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if change < TOLERANCE {
            break;
        }
    }
    ids.into_iter().zip(rank).collect()
}

/// The `k` highest-ranked vertices, best first; ties go to the smaller id.
pub fn select_sources(
    edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    k: usize,
) -> Result<Vec<VertexId>> {
    let mut scored = transposed_pagerank(edges);
    if k > scored.len() {
        return Err(Error::NotEnoughVertices {
            requested: k,
            available: scored.len(),
        });
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(k).map(|(v, _)| v).collect())
}
