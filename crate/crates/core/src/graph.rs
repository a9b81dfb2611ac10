//! Sparse weighted user graphs: the directed retweet network and the
//! undirected URL co-sharing network, plus pruning and component extraction.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::geolocate::UserGeo;
use crate::ingest::TweetEvent;
use crate::lowcred::normalize_url;

/// Sparse weighted graph over user-id nodes. Undirected edges are stored
/// once with endpoints in ascending index order; weights are at least 1 and
/// self-loops are never stored.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    directed: bool,
    nodes: Vec<String>,
    index: FxHashMap<String, u32>,
    /// Sorted by (src, dst).
    edges: Vec<(u32, u32, f64)>,
}

impl WeightedGraph {
    pub fn empty(directed: bool) -> Self {
        WeightedGraph {
            directed,
            nodes: Vec::new(),
            index: FxHashMap::default(),
            edges: Vec::new(),
        }
    }

    /// Builds a graph from (source, target, weight) triples. Parallel edges
    /// accumulate; self-loops are dropped; undirected endpoints are stored
    /// canonically. Node order is sorted for determinism.
    pub fn from_weighted_edges<'a, I>(directed: bool, iter: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str, u64)>,
    {
        let mut counts: FxHashMap<(String, String), u64> = FxHashMap::default();
        let mut node_set: BTreeSet<String> = BTreeSet::new();
        for (u, v, w) in iter {
            if u == v || w == 0 {
                continue;
            }
            node_set.insert(u.to_string());
            node_set.insert(v.to_string());
            let key = if !directed && v < u {
                (v.to_string(), u.to_string())
            } else {
                (u.to_string(), v.to_string())
            };
            *counts.entry(key).or_default() += w;
        }
        let nodes: Vec<String> = node_set.into_iter().collect();
        let index: FxHashMap<String, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        let mut edges: Vec<(u32, u32, f64)> = counts
            .into_iter()
            .map(|((u, v), w)| {
                let (iu, iv) = (index[&u], index[&v]);
                if !directed && iv < iu {
                    (iv, iu, w as f64)
                } else {
                    (iu, iv, w as f64)
                }
            })
            .collect();
        edges.sort_unstable_by_key(|a| (a.0, a.1));
        WeightedGraph {
            directed,
            nodes,
            index,
            edges,
        }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_id(&self, idx: u32) -> &str {
        &self.nodes[idx as usize]
    }

    pub fn node_index(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn node_set(&self) -> HashSet<String> {
        self.nodes.iter().cloned().collect()
    }

    /// Edges as stored: sorted, canonical endpoints for undirected graphs.
    pub fn edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    /// Sum of stored edge weights.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    /// Out-adjacency lists sorted by neighbor index. For undirected graphs
    /// each edge appears in both endpoint lists.
    pub fn out_adjacency(&self) -> Vec<Vec<(u32, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(u, v, w) in &self.edges {
            adj[u as usize].push((v, w));
            if !self.directed {
                adj[v as usize].push((u, w));
            }
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(v, _)| v);
        }
        adj
    }

    /// Weighted in-degree per node (equals the symmetric degree for
    /// undirected graphs).
    pub fn weighted_in_degree(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.nodes.len()];
        for &(u, v, w) in &self.edges {
            deg[v as usize] += w;
            if !self.directed {
                deg[u as usize] += w;
            }
        }
        deg
    }

    /// Undirected view: directed edge weights are summed per unordered pair.
    pub fn symmetrized(&self) -> WeightedGraph {
        if !self.directed {
            return self.clone();
        }
        let mut sums: FxHashMap<(u32, u32), f64> = FxHashMap::default();
        for &(u, v, w) in &self.edges {
            let key = if v < u { (v, u) } else { (u, v) };
            *sums.entry(key).or_default() += w;
        }
        let mut edges: Vec<(u32, u32, f64)> =
            sums.into_iter().map(|((u, v), w)| (u, v, w)).collect();
        edges.sort_unstable_by_key(|a| (a.0, a.1));
        WeightedGraph {
            directed: false,
            nodes: self.nodes.clone(),
            index: self.index.clone(),
            edges,
        }
    }

    /// Restricts to the given node indices, dropping isolated-node labels
    /// that are not in the set and re-indexing.
    fn restrict(&self, keep: &FxHashSet<u32>) -> WeightedGraph {
        let mut nodes: Vec<String> = keep
            .iter()
            .map(|&i| self.nodes[i as usize].clone())
            .collect();
        nodes.sort_unstable();
        let index: FxHashMap<String, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        let mut edges: Vec<(u32, u32, f64)> = self
            .edges
            .iter()
            .filter(|(u, v, _)| keep.contains(u) && keep.contains(v))
            .map(|&(u, v, w)| {
                let iu = index[&self.nodes[u as usize]];
                let iv = index[&self.nodes[v as usize]];
                if !self.directed && iv < iu {
                    (iv, iu, w)
                } else {
                    (iu, iv, w)
                }
            })
            .collect();
        edges.sort_unstable_by_key(|a| (a.0, a.1));
        WeightedGraph {
            directed: self.directed,
            nodes,
            index,
            edges,
        }
    }

    /// Serializes to the edge-list format: a `#directed`/`#undirected`
    /// header followed by `u<TAB>v<TAB>weight` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.directed {
            "#directed\n"
        } else {
            "#undirected\n"
        });
        for &(u, v, w) in &self.edges {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                self.nodes[u as usize], self.nodes[v as usize], w
            ));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<WeightedGraph> {
        let mut directed: Option<bool> = None;
        let mut triples: Vec<(String, String, u64)> = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                match rest.trim() {
                    "directed" => directed = Some(true),
                    "undirected" => directed = Some(false),
                    _ => {} // other comments (e.g. config digest)
                }
                continue;
            }
            let mut parts = line.split('\t');
            let (u, v, w) = (parts.next(), parts.next(), parts.next());
            match (u, v, w) {
                (Some(u), Some(v), Some(w)) => {
                    let weight: f64 = w.parse().map_err(|_| {
                        Error::Format(format!("edge list line {}: bad weight {w:?}", no + 1))
                    })?;
                    triples.push((u.to_string(), v.to_string(), weight.round() as u64));
                }
                _ => {
                    return Err(Error::Format(format!(
                        "edge list line {}: expected 3 fields",
                        no + 1
                    )))
                }
            }
        }
        let directed = directed.ok_or_else(|| {
            Error::Format("edge list missing #directed/#undirected header".into())
        })?;
        Ok(WeightedGraph::from_weighted_edges(
            directed,
            triples.iter().map(|(u, v, w)| (u.as_str(), v.as_str(), *w)),
        ))
    }
}

/// Builds the directed retweet graph for one country: edge `i -> j` counts
/// how often user `i` retweeted user `j`, both geolocated to `country`, over
/// events in the country's dominant language. Self-retweets are dropped.
pub fn build_rt_graph(
    events: &[TweetEvent],
    country: &str,
    lang: &str,
    user_geo: &UserGeo,
) -> WeightedGraph {
    let triples = events.iter().filter_map(|ev| {
        let target = ev.retweeted_user_id.as_deref()?;
        if ev.lang != lang || target == ev.user_id {
            return None;
        }
        if user_geo.country_of(&ev.user_id) != Some(country)
            || user_geo.country_of(target) != Some(country)
        {
            return None;
        }
        Some((ev.user_id.as_str(), target, 1u64))
    });
    WeightedGraph::from_weighted_edges(true, triples)
}

/// Builds the undirected co-sharing graph for one country: edge weight is
/// the number of distinct normalized URLs shared by both endpoints.
pub fn build_co_graph(
    events: &[TweetEvent],
    country: &str,
    lang: &str,
    user_geo: &UserGeo,
) -> WeightedGraph {
    // url -> set of sharing users (within country + language scope)
    let mut sharers: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for ev in events {
        if ev.lang != lang || user_geo.country_of(&ev.user_id) != Some(country) {
            continue;
        }
        for raw in &ev.urls {
            if let Ok(key) = normalize_url(raw) {
                sharers.entry(key).or_default().insert(ev.user_id.as_str());
            }
        }
    }
    let mut pair_counts: FxHashMap<(&str, &str), u64> = FxHashMap::default();
    for users in sharers.values() {
        let list: Vec<&str> = users.iter().copied().collect();
        for i in 0..list.len() {
            for j in (i + 1)..list.len() {
                *pair_counts.entry((list[i], list[j])).or_default() += 1;
            }
        }
    }
    WeightedGraph::from_weighted_edges(false, pair_counts.into_iter().map(|((u, v), w)| (u, v, w)))
}

/// Removes edges below the kind-specific weight threshold (directed graphs
/// use `min_weight_rt`, undirected use `min_weight_co`), then removes the
/// nodes left isolated.
pub fn prune(graph: &WeightedGraph, min_weight_rt: u64, min_weight_co: u64) -> WeightedGraph {
    let threshold = if graph.directed {
        min_weight_rt
    } else {
        min_weight_co
    } as f64;
    let mut keep: FxHashSet<u32> = FxHashSet::default();
    for &(u, v, w) in &graph.edges {
        if w >= threshold {
            keep.insert(u);
            keep.insert(v);
        }
    }
    let restricted = graph.restrict(&keep);
    WeightedGraph {
        edges: restricted
            .edges
            .iter()
            .filter(|e| e.2 >= threshold)
            .copied()
            .collect(),
        ..restricted
    }
}

/// Largest weakly connected component; ties break toward the component
/// containing the smallest node id. An empty graph maps to itself.
pub fn giant_component(graph: &WeightedGraph) -> WeightedGraph {
    if graph.node_count() == 0 {
        return graph.clone();
    }
    let n = graph.node_count();
    let mut uf = UnionFind::new(n);
    for &(u, v, _) in &graph.edges {
        uf.union(u as usize, v as usize);
    }
    // component root -> (size, min node index)
    let mut stats: FxHashMap<usize, (usize, usize)> = FxHashMap::default();
    for i in 0..n {
        let root = uf.find(i);
        let entry = stats.entry(root).or_insert((0, i));
        entry.0 += 1;
        // nodes are visited in ascending index order, so the first seen is the minimum
    }
    let (&best_root, _) = stats
        .iter()
        .max_by(|(_, (sa, ma)), (_, (sb, mb))| sa.cmp(sb).then(mb.cmp(ma)))
        .expect("nonempty graph has a component");
    let keep: FxHashSet<u32> = (0..n)
        .filter(|&i| uf.find(i) == best_root)
        .map(|i| i as u32)
        .collect();
    graph.restrict(&keep)
}

/// Number of weakly connected components.
pub fn component_count(graph: &WeightedGraph) -> usize {
    let n = graph.node_count();
    let mut uf = UnionFind::new(n);
    for &(u, v, _) in &graph.edges {
        uf.union(u as usize, v as usize);
    }
    let mut roots: FxHashSet<usize> = FxHashSet::default();
    for i in 0..n {
        roots.insert(uf.find(i));
    }
    roots.len()
}

/// Overlap coefficient |A ∩ B| / min(|A|, |B|). Errors on empty sets.
pub fn overlap_coefficient(set_a: &HashSet<String>, set_b: &HashSet<String>) -> Result<f64> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(Error::InvalidInput(
            "overlap coefficient of an empty set".into(),
        ));
    }
    let (small, large) = if set_a.len() <= set_b.len() {
        (set_a, set_b)
    } else {
        (set_b, set_a)
    };
    let inter = small.iter().filter(|x| large.contains(*x)).count();
    Ok(inter as f64 / small.len() as f64)
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
