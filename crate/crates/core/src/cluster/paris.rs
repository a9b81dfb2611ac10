//! Agglomerative hierarchical clustering driven by the node-pair sampling
//! distance, built with a nearest-neighbor chain over cluster-level
//! adjacency maps.
//!
//! The distance between clusters `a` and `b` is
//! `d(a, b) = p(a) * p(b) / p(a, b)` where `p(x)` is the cluster's weighted
//! degree normalized by the total weight and `p(a, b)` the normalized
//! inter-cluster weight. On a merge, degrees and inter-cluster weights add.
//! The distance is reducible (the merged value is a mediant of the parts),
//! which is what makes the chain algorithm exact.

use rustc_hash::FxHashMap;

use super::{Dendrogram, Merge};
use crate::error::{Error, Result};
use crate::graph::{component_count, WeightedGraph};

/// Builds the full dendrogram of a connected graph. Directed input is
/// symmetrized by summing the two edge directions. Merge heights are the
/// cluster distances at merge time.
pub fn paris_dendrogram(graph: &WeightedGraph) -> Result<Dendrogram> {
    let g = if graph.is_directed() {
        graph.symmetrized()
    } else {
        graph.clone()
    };
    let n = g.node_count();
    if n == 0 {
        return Err(Error::Graph("cannot cluster an empty graph".into()));
    }
    let components = component_count(&g);
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let leaves: Vec<String> = g.nodes().to_vec();
    if n == 1 {
        return Dendrogram::new(leaves, Vec::new());
    }

    let total_ids = 2 * n - 1;
    let mut weight = vec![0.0f64; total_ids];
    let mut adj: Vec<FxHashMap<u32, f64>> = vec![FxHashMap::default(); total_ids];
    for &(u, v, w) in g.edges() {
        weight[u as usize] += w;
        weight[v as usize] += w;
        *adj[u as usize].entry(v).or_default() += w;
        *adj[v as usize].entry(u).or_default() += w;
    }
    let w_total: f64 = weight[..n].iter().sum();
    let mut active = vec![true; total_ids];

    let dist = |wa: f64, wb: f64, wab: f64| wa * wb / (w_total * wab);

    let mut merges: Vec<Merge> = Vec::with_capacity(n - 1);
    let mut chain: Vec<u32> = Vec::new();
    let mut cursor: usize = 0;
    let mut next_id = n as u32;

    while merges.len() < n - 1 {
        if chain.is_empty() {
            while !active[cursor] {
                cursor += 1;
            }
            chain.push(cursor as u32);
        }
        let c = *chain.last().unwrap();

        // nearest active neighbor, ties toward the smaller cluster id
        let mut best: Option<(f64, u32)> = None;
        for (&x, &w_cx) in &adj[c as usize] {
            let d = dist(weight[c as usize], weight[x as usize], w_cx);
            best = match best {
                Some((bd, bx)) if bd < d || (bd == d && bx < x) => Some((bd, bx)),
                _ => Some((d, x)),
            };
        }
        let (d_min, nearest) =
            best.expect("connected graph: every unfinished cluster has a neighbor");

        let reciprocal = if chain.len() >= 2 {
            let prev = chain[chain.len() - 2];
            let w_cp = adj[c as usize][&prev];
            let d_prev = dist(weight[c as usize], weight[prev as usize], w_cp);
            // prev is included in the scan, so d_prev >= d_min; equality
            // means prev ties for nearest and the pair is mergeable.
            if d_prev <= d_min {
                Some((prev, d_prev))
            } else {
                None
            }
        } else {
            None
        };

        match reciprocal {
            Some((prev, height)) => {
                chain.pop();
                chain.pop();
                let id = next_id;
                next_id += 1;

                weight[id as usize] = weight[c as usize] + weight[prev as usize];
                let mut big = std::mem::take(&mut adj[c as usize]);
                let mut small = std::mem::take(&mut adj[prev as usize]);
                if small.len() > big.len() {
                    std::mem::swap(&mut big, &mut small);
                }
                for (x, w) in small {
                    if x != c && x != prev {
                        *big.entry(x).or_default() += w;
                    }
                }
                big.remove(&c);
                big.remove(&prev);
                for &x in big.keys() {
                    let ax = &mut adj[x as usize];
                    ax.remove(&c);
                    ax.remove(&prev);
                }
                for (&x, &w) in &big {
                    adj[x as usize].insert(id, w);
                }
                adj[id as usize] = big;
                active[c as usize] = false;
                active[prev as usize] = false;

                merges.push(Merge {
                    left: c.min(prev),
                    right: c.max(prev),
                    height,
                    id,
                });
            }
            None => chain.push(nearest),
        }
    }

    Dendrogram::new(leaves, merges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::cut_k;
    use crate::graph::WeightedGraph;

    fn graph(directed: bool, edges: &[(&str, &str, u64)]) -> WeightedGraph {
        WeightedGraph::from_weighted_edges(directed, edges.iter().copied())
    }

    fn two_triangles_with_bridge() -> WeightedGraph {
        graph(
            false,
            &[
                ("a0", "a1", 1),
                ("a1", "a2", 1),
                ("a0", "a2", 1),
                ("b0", "b1", 1),
                ("b1", "b2", 1),
                ("b0", "b2", 1),
                ("a2", "b0", 1),
            ],
        )
    }

    #[test]
    fn triangles_merge_before_bridge() {
        // Hand-run of the distance recurrence: within-triangle distances are
        // 4/14 and 6/14, the bridge distance never drops below 12/28, and the
        // final merge happens at 3.5. The two k=2 communities are the triangles.
        let g = two_triangles_with_bridge();
        let dendro = paris_dendrogram(&g).unwrap();
        assert_eq!(dendro.merges().len(), 5);
        let top = dendro.merges().last().unwrap();
        assert!(
            (top.height - 3.5).abs() < 1e-12,
            "bridge merge height was {}",
            top.height
        );

        let partition = cut_k(&dendro, 2).unwrap();
        let c = |n: &str| partition.community_of(n).unwrap();
        assert_eq!(c("a0"), c("a1"));
        assert_eq!(c("a0"), c("a2"));
        assert_eq!(c("b0"), c("b1"));
        assert_eq!(c("b0"), c("b2"));
        assert_ne!(c("a0"), c("b0"));
    }

    #[test]
    fn single_edge_one_merge() {
        let g = graph(false, &[("x", "y", 3)]);
        let dendro = paris_dendrogram(&g).unwrap();
        assert_eq!(dendro.merges().len(), 1);
        assert_eq!(dendro.leaves().len(), 2);
    }

    #[test]
    fn star_has_three_merges() {
        let g = graph(
            false,
            &[("hub", "l1", 1), ("hub", "l2", 1), ("hub", "l3", 1)],
        );
        let dendro = paris_dendrogram(&g).unwrap();
        assert_eq!(dendro.merges().len(), 3);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = graph(false, &[("a", "b", 1), ("x", "y", 1)]);
        match paris_dendrogram(&g) {
            Err(Error::Disconnected { components }) => assert_eq!(components, 2),
            other => panic!("expected disconnected error, got {other:?}"),
        }
    }

    #[test]
    fn merge_sequence_invariant_under_weight_scaling() {
        let g = two_triangles_with_bridge();
        let scaled = graph(
            false,
            &[
                ("a0", "a1", 7),
                ("a1", "a2", 7),
                ("a0", "a2", 7),
                ("b0", "b1", 7),
                ("b1", "b2", 7),
                ("b0", "b2", 7),
                ("a2", "b0", 7),
            ],
        );
        let d1 = paris_dendrogram(&g).unwrap();
        let d2 = paris_dendrogram(&scaled).unwrap();
        for (m1, m2) in d1.merges().iter().zip(d2.merges()) {
            assert_eq!((m1.left, m1.right, m1.id), (m2.left, m2.right, m2.id));
            assert!((m1.height - m2.height).abs() < 1e-12);
        }
    }

    #[test]
    fn directed_input_is_symmetrized() {
        let g = graph(true, &[("a", "b", 2), ("b", "a", 1), ("b", "c", 1)]);
        let dendro = paris_dendrogram(&g).unwrap();
        assert_eq!(dendro.merges().len(), 2);
        // a-b carries weight 3 vs b-c weight 1: a,b merge first
        let first = &dendro.merges()[0];
        let names: Vec<&str> = [first.left, first.right]
            .iter()
            .map(|&i| dendro.leaves()[i as usize].as_str())
            .collect();
        assert_eq!(names, vec!["a", "b"]);
    }

    #[test]
    fn single_node_graph() {
        let g = WeightedGraph::from_weighted_edges(false, std::iter::empty());
        assert!(paris_dendrogram(&g).is_err()); // empty graph

        // a 1-node graph can only be produced through restriction; simulate
        // with from_tsv of a header-only file plus a lone self-referencing
        // node is impossible, so cover n=1 via the public dendrogram ctor.
        let d = Dendrogram::new(vec!["solo".to_string()], vec![]).unwrap();
        assert_eq!(d.leaves().len(), 1);
    }
}
