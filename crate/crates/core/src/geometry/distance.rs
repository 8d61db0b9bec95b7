//! Exact shortest-path distances, cached densely at construction.

use crate::error::{Error, Result};
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct HeapItem {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance via reversed comparison; ties break on node id.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adjacency: &[Vec<(usize, f64, f64)>], source: usize, out: &mut [f64]) {
    out.fill(f64::INFINITY);
    out[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapItem { dist, node }) = heap.pop() {
        if dist > out[node] {
            continue;
        }
        for &(next, len, _) in &adjacency[node] {
            let cand = dist + len;
            if cand < out[next] {
                out[next] = cand;
                heap.push(HeapItem {
                    dist: cand,
                    node: next,
                });
            }
        }
    }
}

pub fn all_pairs(adjacency: &[Vec<(usize, f64, f64)>]) -> Result<Vec<f64>> {
    let len = adjacency.len();
    let mut dist = vec![0.0; len * len];
    dist.par_chunks_mut(len)
        .enumerate()
        .for_each(|(source, row)| dijkstra(adjacency, source, row));
    if dist.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvariantViolated {
            check: "distance".into(),
            detail: "model graph is disconnected".into(),
        });
    }
    Ok(dist)
}
