//! Minimum-degree fill-reducing ordering on an explicit elimination graph.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

/// Computes a minimum-degree elimination order for a symmetric pattern.
///
/// `adjacency[i]` lists the off-diagonal neighbours of node `i`; it need not
/// be symmetric or duplicate free. Ties are broken by the smaller index, so
/// the result is deterministic. Returns `perm` with `perm[k]` = node
/// eliminated at step `k`.
pub fn minimum_degree(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut graph: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, neighbours) in adjacency.iter().enumerate() {
        for &j in neighbours {
            if i != j {
                graph[i].insert(j);
                graph[j].insert(i);
            }
        }
    }

    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|i| Reverse((graph[i].len(), i))).collect();
    let mut perm = Vec::with_capacity(n);

    while let Some(Reverse((degree, node))) = heap.pop() {
        if eliminated[node] || degree != graph[node].len() {
            continue;
        }
        eliminated[node] = true;
        perm.push(node);

        let neighbours: Vec<usize> = core::mem::take(&mut graph[node]).into_iter().collect();
        for &a in &neighbours {
            graph[a].remove(&node);
        }
        // eliminating `node` turns its neighbourhood into a clique
        for (t, &a) in neighbours.iter().enumerate() {
            for &b in &neighbours[t + 1..] {
                graph[a].insert(b);
                graph[b].insert(a);
            }
        }
        for &a in &neighbours {
            heap.push(Reverse((graph[a].len(), a)));
        }
    }
    perm
}

/// Inverse of a permutation: `inverse[perm[k]] = k`.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}
