//! Shortest-time paths over the link graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::network::{LinkId, Network, NodeId};

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: NodeId,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, ties broken by node id for determinism
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `from` to `to` with per-link costs indexed by link id.
/// Returns the link sequence, empty when `from == to`, `None` when
/// unreachable.
pub fn shortest_path(
    network: &Network,
    from: NodeId,
    to: NodeId,
    cost: &[f64],
) -> Option<Vec<LinkId>> {
    let n = network.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut via: Vec<Option<LinkId>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[from.index()] = 0.0;
    heap.push(Entry {
        cost: 0.0,
        node: from,
    });
    while let Some(Entry { cost: d, node }) = heap.pop() {
        if node == to {
            break;
        }
        if d > dist[node.index()] {
            continue;
        }
        for &l in &network.out_links[node.index()] {
            let next = network.link(l).downstream_node;
            let nd = d + cost[l.index()];
            if nd < dist[next.index()] {
                dist[next.index()] = nd;
                via[next.index()] = Some(l);
                heap.push(Entry {
                    cost: nd,
                    node: next,
                });
            }
        }
    }
    if !dist[to.index()].is_finite() {
        return None;
    }
    let mut path = Vec::new();
    let mut cur = to;
    while cur != from {
        let l = via[cur.index()]?;
        path.push(l);
        cur = network.link(l).upstream_node;
    }
    path.reverse();
    Some(path)
}

pub fn path_cost(path: &[LinkId], cost: &[f64]) -> f64 {
    path.iter().map(|l| cost[l.index()]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_grid, GridSpec};

    #[test]
    fn path_is_connected_and_free_flow_optimal_on_grid() {
        let net = build_grid(&GridSpec::standard()).unwrap();
        let cost: Vec<f64> = net.links.iter().map(|l| l.free_flow_time_s()).collect();
        for a in &net.zones {
            for b in &net.zones {
                let p = shortest_path(&net, a.node, b.node, &cost).unwrap();
                if a.id == b.id {
                    assert!(p.is_empty());
                    continue;
                }
                assert_eq!(net.link(p[0]).upstream_node, a.node);
                assert_eq!(net.link(*p.last().unwrap()).downstream_node, b.node);
                for w in p.windows(2) {
                    assert_eq!(net.link(w[0]).downstream_node, net.link(w[1]).upstream_node);
                }
            }
        }
    }
}
