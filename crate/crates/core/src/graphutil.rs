//! Small shared graph helpers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.vertex == other.vertex
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties by vertex for determinism
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Single-source shortest paths over a nonnegative weighted adjacency list.
pub fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(HeapEntry { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(HeapEntry {
                    dist: nd,
                    vertex: w,
                });
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_path_on_weighted_triangle() {
        let adj = vec![
            vec![(1, 1.0), (2, 5.0)],
            vec![(0, 1.0), (2, 1.5)],
            vec![(0, 5.0), (1, 1.5)],
        ];
        let d = dijkstra(&adj, 0);
        assert_eq!(d, vec![0.0, 1.0, 2.5]);
    }
}
