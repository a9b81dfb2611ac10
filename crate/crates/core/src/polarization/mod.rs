//! Polarization metrics: random-walk controversy between a designated side
//! and the rest of the network, and normalized mutual information between
//! two partitions of (mostly) the same users.

mod rwc;

pub use rwc::{default_k_absorb, rwc_exact, rwc_montecarlo};

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::cluster::Partition;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Two-sided split of a graph's nodes.
#[derive(Debug, Clone)]
pub struct Bipartition {
    side_x: BTreeSet<String>,
    side_y: BTreeSet<String>,
}

impl Bipartition {
    /// Splits a graph's nodes into the given X side and the remainder.
    /// Members of `x` that are not graph nodes are ignored.
    pub fn from_side_x<'a, I: IntoIterator<Item = &'a str>>(graph: &WeightedGraph, x: I) -> Self {
        let wanted: BTreeSet<&str> = x.into_iter().collect();
        let mut side_x = BTreeSet::new();
        let mut side_y = BTreeSet::new();
        for node in graph.nodes() {
            if wanted.contains(node.as_str()) {
                side_x.insert(node.clone());
            } else {
                side_y.insert(node.clone());
            }
        }
        Bipartition { side_x, side_y }
    }

    pub fn side_x(&self) -> &BTreeSet<String> {
        &self.side_x
    }

    pub fn side_y(&self) -> &BTreeSet<String> {
        &self.side_y
    }
}

/// How a random-walk controversy value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwcMethod {
    Exact,
    MonteCarlo,
}

impl RwcMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RwcMethod::Exact => "exact",
            RwcMethod::MonteCarlo => "montecarlo",
        }
    }
}

/// Random-walk controversy score with its absorption probabilities.
/// `p_ab` is the probability that a walk started on side `a` is absorbed on
/// side `b`; rows are complementary (`p_ax + p_ay = 1`).
#[derive(Debug, Clone)]
pub struct RwcResult {
    pub rwc: f64,
    pub p_xx: f64,
    pub p_xy: f64,
    pub p_yx: f64,
    pub p_yy: f64,
    pub method: RwcMethod,
    pub n_walks: Option<u64>,
    pub stderr: Option<f64>,
}

/// Normalized mutual information between two partitions, computed on the
/// intersection of their node sets with natural-log entropies and the
/// arithmetic-mean normalization `2 I / (H_a + H_b)`.
///
/// Defined as 1 when both entropies are zero (two trivial partitions agree)
/// and 0 when exactly one is zero.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    let mut table: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut marg_a: BTreeMap<u32, u64> = BTreeMap::new();
    let mut marg_b: BTreeMap<u32, u64> = BTreeMap::new();
    let mut n = 0u64;
    for (node, ca) in a.iter() {
        if let Some(cb) = b.community_of(node) {
            *table.entry((ca, cb)).or_default() += 1;
            *marg_a.entry(ca).or_default() += 1;
            *marg_b.entry(cb).or_default() += 1;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InvalidInput("partitions share no nodes".into()));
    }
    let nf = n as f64;
    // summation runs over label-free sorted count sequences so that NMI is
    // bit-identical under community relabeling
    let entropy = |marg: &BTreeMap<u32, u64>| -> f64 {
        let mut counts: Vec<u64> = marg.values().copied().collect();
        counts.sort_unstable();
        counts
            .iter()
            .map(|&c| {
                let p = c as f64 / nf;
                -p * p.ln()
            })
            .sum()
    };
    let h_a = entropy(&marg_a);
    let h_b = entropy(&marg_b);
    match (h_a <= 0.0, h_b <= 0.0) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let mut cells: Vec<(u64, u64, u64)> = table
        .iter()
        .map(|(&(ca, cb), &c)| (c, marg_a[&ca], marg_b[&cb]))
        .collect();
    cells.sort_unstable();
    let mut info = 0.0;
    for (c, na, nb) in cells {
        let p = c as f64 / nf;
        let pa = na as f64 / nf;
        let pb = nb as f64 / nf;
        info += p * (p / (pa * pb)).ln();
    }
    Ok((2.0 * info / (h_a + h_b)).clamp(0.0, 1.0))
}
