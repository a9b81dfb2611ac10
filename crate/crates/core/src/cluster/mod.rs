//! Hierarchical community structure: dendrograms, cuts, modularity, and the
//! escalating partition-selection rule.

mod paris;

pub use paris::paris_dendrogram;

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// One agglomerative merge. `left` and `right` are cluster ids (leaf indices
/// or earlier merge ids), `id` is the cluster the merge creates.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub left: u32,
    pub right: u32,
    pub height: f64,
    pub id: u32,
}

/// Full merge tree. Leaves are node ids; leaf `i` is cluster `i` and merge
/// `t` creates cluster `n + t`. Merges are kept in canonical order: sorted
/// by height with chronological order breaking ties, which guarantees every
/// child cluster exists before the merge that consumes it.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    leaves: Vec<String>,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn new(leaves: Vec<String>, mut merges: Vec<Merge>) -> Result<Self> {
        let n = leaves.len();
        if n > 0 && merges.len() != n - 1 {
            return Err(Error::InvalidInput(format!(
                "dendrogram with {n} leaves needs {} merges, got {}",
                n - 1,
                merges.len()
            )));
        }
        merges.sort_by(|a, b| {
            a.height
                .partial_cmp(&b.height)
                .unwrap()
                .then(a.id.cmp(&b.id))
        });
        let d = Dendrogram { leaves, merges };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let n = self.leaves.len() as u32;
        let total = n + self.merges.len() as u32;
        let mut used = vec![false; total as usize];
        let mut created = vec![false; total as usize];
        for i in 0..n {
            created[i as usize] = true;
        }
        for m in &self.merges {
            for child in [m.left, m.right] {
                if child >= total || !created[child as usize] {
                    return Err(Error::InvalidInput(format!(
                        "merge {} references cluster {child} before it exists",
                        m.id
                    )));
                }
                if used[child as usize] {
                    return Err(Error::InvalidInput(format!(
                        "cluster {child} is a child of two merges"
                    )));
                }
                used[child as usize] = true;
            }
            if m.id < n || m.id >= total || created[m.id as usize] {
                return Err(Error::InvalidInput(format!("bad merge id {}", m.id)));
            }
            created[m.id as usize] = true;
        }
        Ok(())
    }

    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Serializes as `#leaf` comment lines followed by one
    /// `child_a<TAB>child_b<TAB>height<TAB>new_id` line per merge.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, leaf) in self.leaves.iter().enumerate() {
            out.push_str(&format!("#leaf\t{i}\t{leaf}\n"));
        }
        for m in &self.merges {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                m.left, m.right, m.height, m.id
            ));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut leaves: Vec<(usize, String)> = Vec::new();
        let mut merges = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#leaf\t") {
                let mut parts = rest.split('\t');
                let idx: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| {
                    Error::Format(format!("dendrogram line {}: bad leaf", no + 1))
                })?;
                let id = parts.next().ok_or_else(|| {
                    Error::Format(format!("dendrogram line {}: bad leaf", no + 1))
                })?;
                leaves.push((idx, id.to_string()));
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 4 {
                return Err(Error::Format(format!(
                    "dendrogram line {}: expected 4 fields",
                    no + 1
                )));
            }
            merges.push(Merge {
                left: parts[0]
                    .parse()
                    .map_err(|_| Error::Format(format!("line {}", no + 1)))?,
                right: parts[1]
                    .parse()
                    .map_err(|_| Error::Format(format!("line {}", no + 1)))?,
                height: parts[2]
                    .parse()
                    .map_err(|_| Error::Format(format!("line {}", no + 1)))?,
                id: parts[3]
                    .parse()
                    .map_err(|_| Error::Format(format!("line {}", no + 1)))?,
            });
        }
        leaves.sort_by_key(|(i, _)| *i);
        Dendrogram::new(leaves.into_iter().map(|(_, id)| id).collect(), merges)
    }
}

/// Node-to-community assignment. Community ids are dense, assigned in order
/// of each community's first node (sorted by node id).
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: BTreeMap<String, u32>,
    n_communities: u32,
}

impl Partition {
    /// Builds from (node, label) pairs with arbitrary labels, renumbering
    /// communities densely.
    pub fn from_labeled<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (String, S)>,
        S: Into<String>,
    {
        let sorted: BTreeMap<String, String> =
            pairs.into_iter().map(|(n, l)| (n, l.into())).collect();
        let mut label_ids: BTreeMap<String, u32> = BTreeMap::new();
        let mut assignment = BTreeMap::new();
        let mut next = 0u32;
        for (node, label) in sorted {
            let id = *label_ids.entry(label).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            assignment.insert(node, id);
        }
        Partition {
            assignment,
            n_communities: next,
        }
    }

    pub fn n_communities(&self) -> u32 {
        self.n_communities
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn community_of(&self, node: &str) -> Option<u32> {
        self.assignment.get(node).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.assignment.iter().map(|(n, &c)| (n.as_str(), c))
    }

    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_communities as usize];
        for &c in self.assignment.values() {
            sizes[c as usize] += 1;
        }
        sizes
    }

    pub fn members(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.n_communities as usize];
        for (n, &c) in &self.assignment {
            out[c as usize].push(n.as_str());
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (node, c) in &self.assignment {
            out.push_str(&format!("{node}\t{c}\n"));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (node, c) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!(
                    "partition line {}: expected node<TAB>community",
                    no + 1
                ))
            })?;
            pairs.push((node.to_string(), c.to_string()));
        }
        Ok(Partition::from_labeled(pairs))
    }
}

/// Cuts the dendrogram into exactly `k` communities by undoing the `k - 1`
/// highest merges.
pub fn cut_k(dendrogram: &Dendrogram, k: u32) -> Result<Partition> {
    let n = dendrogram.leaves.len() as u32;
    if k < 1 || k > n {
        return Err(Error::InvalidInput(format!("k = {k} outside 1..={n}")));
    }
    let total = n + dendrogram.merges.len() as u32;
    let mut parent: Vec<u32> = (0..total).collect();
    for m in dendrogram.merges.iter().take((n - k) as usize) {
        parent[m.left as usize] = m.id;
        parent[m.right as usize] = m.id;
    }
    let find = |mut x: u32, parent: &[u32]| {
        while parent[x as usize] != x {
            x = parent[x as usize];
        }
        x
    };
    let mut community_ids: FxHashMap<u32, u32> = FxHashMap::default();
    let mut assignment = BTreeMap::new();
    // assign dense ids in order of first appearance over sorted node ids
    let mut order: Vec<usize> = (0..n as usize).collect();
    order.sort_by(|&a, &b| dendrogram.leaves[a].cmp(&dendrogram.leaves[b]));
    let mut next = 0u32;
    for i in order {
        let root = find(i as u32, &parent);
        let c = *community_ids.entry(root).or_insert_with(|| {
            let c = next;
            next += 1;
            c
        });
        assignment.insert(dendrogram.leaves[i].clone(), c);
    }
    debug_assert_eq!(next, k);
    Ok(Partition {
        assignment,
        n_communities: next,
    })
}

/// Newman weighted modularity on the symmetrized graph.
pub fn modularity(graph: &WeightedGraph, partition: &Partition) -> Result<f64> {
    let g = if graph.is_directed() {
        graph.symmetrized()
    } else {
        graph.clone()
    };
    if g.node_count() == 0 {
        return Err(Error::Graph("modularity of an empty graph".into()));
    }
    let mut community: Vec<u32> = Vec::with_capacity(g.node_count());
    for node in g.nodes() {
        match partition.community_of(node) {
            Some(c) => community.push(c),
            None => {
                return Err(Error::InvalidInput(format!(
                    "partition does not cover graph node {node}"
                )))
            }
        }
    }
    let ncomm = partition.n_communities as usize;
    let mut intra = vec![0.0f64; ncomm];
    let mut degree = vec![0.0f64; ncomm];
    let mut w = 0.0f64;
    for &(u, v, weight) in g.edges() {
        let (cu, cv) = (
            community[u as usize] as usize,
            community[v as usize] as usize,
        );
        w += weight;
        degree[cu] += weight;
        degree[cv] += weight;
        if cu == cv {
            intra[cu] += weight;
        }
    }
    if w == 0.0 {
        return Err(Error::Graph("modularity of a graph with no edges".into()));
    }
    let two_w = 2.0 * w;
    let q = (0..ncomm)
        .map(|c| intra[c] / w - (degree[c] / two_w) * (degree[c] / two_w))
        .sum();
    Ok(q)
}

/// Picks a partition by comparing cuts at k in {2..5}, keeping the highest
/// modularity (ties toward fewer communities), and escalating through the
/// next five k values whenever the winner leaves more than `dominance` of
/// the nodes in a single community. Stops when dominance is broken or k
/// reaches the node count, returning the last evaluated winner.
pub fn select_partition(
    graph: &WeightedGraph,
    dendrogram: &Dendrogram,
    dominance: f64,
) -> Result<Partition> {
    let n = dendrogram.leaves.len() as u32;
    if n == 0 {
        return Err(Error::Graph(
            "cannot select a partition of an empty graph".into(),
        ));
    }
    if n == 1 {
        return cut_k(dendrogram, 1);
    }
    let mut window_start = 2u32;
    loop {
        let window_end = if window_start == 2 {
            5
        } else {
            window_start + 4
        };
        let mut best: Option<(f64, u32, Partition)> = None;
        for k in window_start..=window_end.min(n) {
            let p = cut_k(dendrogram, k)?;
            let q = modularity(graph, &p)?;
            let better = match &best {
                None => true,
                Some((bq, _, _)) => q > *bq,
            };
            if better {
                best = Some((q, k, p));
            }
        }
        let (_, _, partition) = best.ok_or_else(|| {
            Error::InvalidInput(format!(
                "no cut available at k >= {window_start} for n = {n}"
            ))
        })?;
        let largest = partition.community_sizes().into_iter().max().unwrap_or(0);
        let frac = largest as f64 / n as f64;
        if frac <= dominance || window_end >= n {
            return Ok(partition);
        }
        window_start = window_end + 1;
    }
}
