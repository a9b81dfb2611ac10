//! Random Walk Controversy over the retweet digraph.
//!
//! Each side's absorbing set is its top-k nodes by weighted in-degree. A
//! walk starts at a uniformly random non-absorbing node of one side,
//! follows out-edges with probability proportional to weight, and ends when
//! it steps onto any absorbing node. Dangling nodes restart the walk
//! uniformly within its starting side, which keeps each row of absorption
//! probabilities summing to one without a damping parameter.
//!
//! `RWC = P_XX * P_YY - P_XY * P_YX`. Only the cross-side absorption
//! probabilities are solved for; own-side probabilities are their exact
//! complements, so a fully disconnected bipartition yields exactly 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{Bipartition, RwcMethod, RwcResult};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Default absorbing-set size: max(10, ceil(2% of the side)).
pub fn default_k_absorb(side_size: usize) -> usize {
    10usize.max((side_size as f64 * 0.02).ceil() as usize)
}

const SIDE_X: usize = 0;
const SIDE_Y: usize = 1;

struct Setup {
    /// side of each node
    side: Vec<usize>,
    /// 0 = transient, 1 = absorbing in X, 2 = absorbing in Y
    absorb: Vec<u8>,
    /// node indices per side, ascending
    side_nodes: [Vec<u32>; 2],
    /// transient node indices, ascending
    transient: Vec<u32>,
    /// CSR out-adjacency with per-node cumulative weights
    offsets: Vec<usize>,
    targets: Vec<u32>,
    cum: Vec<f64>,
    out_total: Vec<f64>,
}

fn build_setup(graph: &WeightedGraph, split: &Bipartition, k_absorb: usize) -> Result<Setup> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::Graph("rwc of an empty graph".into()));
    }
    if k_absorb == 0 {
        return Err(Error::InvalidInput("k_absorb must be at least 1".into()));
    }
    let mut side = vec![usize::MAX; n];
    for name in split.side_x() {
        if let Some(i) = graph.node_index(name) {
            side[i as usize] = SIDE_X;
        }
    }
    for name in split.side_y() {
        if let Some(i) = graph.node_index(name) {
            side[i as usize] = SIDE_Y;
        }
    }
    if side.contains(&usize::MAX) {
        return Err(Error::InvalidInput(
            "bipartition does not cover the graph".into(),
        ));
    }

    let in_deg = graph.weighted_in_degree();
    let mut side_nodes: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    for i in 0..n {
        side_nodes[side[i]].push(i as u32);
    }
    let mut absorb = vec![0u8; n];
    for (s, nodes) in side_nodes.iter().enumerate() {
        if nodes.is_empty() {
            return Err(Error::InvalidInput(format!(
                "side {} has no nodes, so no absorbing candidates",
                if s == SIDE_X { "X" } else { "Y" }
            )));
        }
        let mut ranked = nodes.clone();
        ranked.sort_by(|&a, &b| {
            in_deg[b as usize]
                .total_cmp(&in_deg[a as usize])
                .then(a.cmp(&b))
        });
        for &node in ranked.iter().take(k_absorb) {
            absorb[node as usize] = if s == SIDE_X { 1 } else { 2 };
        }
    }
    let transient: Vec<u32> = (0..n as u32).filter(|&i| absorb[i as usize] == 0).collect();
    for s in [SIDE_X, SIDE_Y] {
        if !transient.iter().any(|&i| side[i as usize] == s) {
            return Err(Error::InvalidInput(format!(
                "side {} has no non-absorbing start nodes",
                if s == SIDE_X { "X" } else { "Y" }
            )));
        }
    }

    // CSR with cumulative weights for O(log deg) sampling; out_adjacency
    // already walks undirected edges in both directions
    let adj = graph.out_adjacency();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::new();
    let mut cum = Vec::new();
    let mut out_total = vec![0.0f64; n];
    offsets.push(0);
    for (i, list) in adj.iter().enumerate() {
        let mut acc = 0.0;
        for &(v, w) in list {
            acc += w;
            targets.push(v);
            cum.push(acc);
        }
        out_total[i] = acc;
        offsets.push(targets.len());
    }

    Ok(Setup {
        side,
        absorb,
        side_nodes,
        transient,
        offsets,
        targets,
        cum,
        out_total,
    })
}

impl Setup {
    fn starts(&self, s: usize) -> Vec<u32> {
        self.transient
            .iter()
            .copied()
            .filter(|&i| self.side[i as usize] == s)
            .collect()
    }
}

/// Exact absorption probabilities via the absorbing-chain linear system,
/// solved once per starting side (the dangling-restart rule depends on
/// where the walk started).
pub fn rwc_exact(graph: &WeightedGraph, split: &Bipartition, k_absorb: usize) -> Result<RwcResult> {
    let setup = build_setup(graph, split, k_absorb)?;
    let p_xy = exact_cross_probability(&setup, SIDE_X)?;
    let p_yx = exact_cross_probability(&setup, SIDE_Y)?;
    let (p_xx, p_yy) = (1.0 - p_xy, 1.0 - p_yx);
    Ok(RwcResult {
        rwc: p_xx * p_yy - p_xy * p_yx,
        p_xx,
        p_xy,
        p_yx,
        p_yy,
        method: RwcMethod::Exact,
        n_walks: None,
        stderr: None,
    })
}

fn exact_cross_probability(setup: &Setup, start_side: usize) -> Result<f64> {
    let cross_class: u8 = if start_side == SIDE_X { 2 } else { 1 };
    let nt = setup.transient.len();
    let mut row_of = vec![usize::MAX; setup.side.len()];
    for (r, &node) in setup.transient.iter().enumerate() {
        row_of[node as usize] = r;
    }

    // A = I - Q, rhs = probability of stepping straight into the cross side's
    // absorbing set
    let mut a = vec![0.0f64; nt * nt];
    let mut rhs = vec![0.0f64; nt];
    for r in 0..nt {
        a[r * nt + r] = 1.0;
    }
    let restart = &setup.side_nodes[start_side];
    let restart_p = 1.0 / restart.len() as f64;
    for (r, &node) in setup.transient.iter().enumerate() {
        let i = node as usize;
        let total = setup.out_total[i];
        if total > 0.0 {
            let (lo, hi) = (setup.offsets[i], setup.offsets[i + 1]);
            let mut prev = 0.0;
            for e in lo..hi {
                let w = setup.cum[e] - prev;
                prev = setup.cum[e];
                let p = w / total;
                let v = setup.targets[e] as usize;
                match setup.absorb[v] {
                    0 => a[r * nt + row_of[v]] -= p,
                    c if c == cross_class => rhs[r] += p,
                    _ => {} // own-side absorption
                }
            }
        } else {
            // dangling: uniform restart within the starting side
            for &v in restart {
                let v = v as usize;
                if setup.absorb[v] == 0 {
                    a[r * nt + row_of[v]] -= restart_p;
                }
                // absorbing restarts land on the starting side, never cross
            }
        }
    }

    let h = solve_dense(a, rhs, nt)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (r, &node) in setup.transient.iter().enumerate() {
        if setup.side[node as usize] == start_side {
            sum += h[r];
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Gaussian elimination with partial pivoting; errors on a singular system
/// (some transient region cannot reach absorption).
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in (col + 1)..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-12 {
            return Err(Error::Numerical("singular absorbing-chain system".into()));
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let f = a[r * n + col] / d;
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0f64; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in (r + 1)..n {
            s -= a[r * n + c] * x[c];
        }
        x[r] = s / a[r * n + r];
    }
    Ok(x)
}

const MAX_WALK_STEPS: u64 = 10_000_000;

/// Monte Carlo estimate of the same probabilities: `n_walks` simulated
/// walks per starting side, deterministic given the seed. The standard
/// error combines the two independent binomial estimates.
pub fn rwc_montecarlo(
    graph: &WeightedGraph,
    split: &Bipartition,
    k_absorb: usize,
    n_walks: u64,
    seed: u64,
) -> Result<RwcResult> {
    if n_walks == 0 {
        return Err(Error::InvalidInput("n_walks must be at least 1".into()));
    }
    let setup = build_setup(graph, split, k_absorb)?;
    let p_xy = simulate_side(&setup, SIDE_X, n_walks, seed)?;
    let p_yx = simulate_side(&setup, SIDE_Y, n_walks, seed)?;
    let (p_xx, p_yy) = (1.0 - p_xy, 1.0 - p_yx);
    let var = (p_xy * p_xx + p_yx * p_yy) / n_walks as f64;
    Ok(RwcResult {
        rwc: p_xx * p_yy - p_xy * p_yx,
        p_xx,
        p_xy,
        p_yx,
        p_yy,
        method: RwcMethod::MonteCarlo,
        n_walks: Some(n_walks),
        stderr: Some(var.sqrt()),
    })
}

fn simulate_side(setup: &Setup, start_side: usize, n_walks: u64, seed: u64) -> Result<f64> {
    let cross_class: u8 = if start_side == SIDE_X { 2 } else { 1 };
    let starts = setup.starts(start_side);
    let restart = &setup.side_nodes[start_side];
    let side_salt = if start_side == SIDE_X {
        0x5eed_0001
    } else {
        0x5eed_0002
    };
    let mut cross = 0u64;
    for walk in 0..n_walks {
        let mut rng = ChaCha20Rng::seed_from_u64(mix64(seed ^ side_salt).wrapping_add(mix64(walk)));
        let mut node = starts[rng.random_range(0..starts.len())] as usize;
        let mut steps = 0u64;
        loop {
            steps += 1;
            if steps > MAX_WALK_STEPS {
                return Err(Error::Numerical(
                    "random walk failed to absorb; graph may lack paths to absorbing nodes".into(),
                ));
            }
            let total = setup.out_total[node];
            let next = if total > 0.0 {
                let (lo, hi) = (setup.offsets[node], setup.offsets[node + 1]);
                let r = rng.random::<f64>() * total;
                let slice = &setup.cum[lo..hi];
                let pos = slice.partition_point(|&c| c <= r).min(slice.len() - 1);
                setup.targets[lo + pos] as usize
            } else {
                restart[rng.random_range(0..restart.len())] as usize
            };
            match setup.absorb[next] {
                0 => node = next,
                c => {
                    if c == cross_class {
                        cross += 1;
                    }
                    break;
                }
            }
        }
    }
    Ok(cross as f64 / n_walks as f64)
}

fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
