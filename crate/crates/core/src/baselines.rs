//! Stochastic and centrality baselines: Independent Cascade spread,
//! IC-greedy selection, the IC score, and weighted PageRank.
//!
//! Every IC run draws a live/blocked flag for each directed arc `u -> v` (in
//! adjacency order) from its own ChaCha8 stream, so run `r` sees the same
//! coin flips whatever the seed set or the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_IC_P: f64 = 0.2;
pub const DEFAULT_IC_RUNS: usize = 500;
pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_PR_TOL: f64 = 1e-9;
pub const DEFAULT_PR_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcConfig {
    pub p: f64,
    pub runs: usize,
    pub master_seed: u64,
}

impl IcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!(
                "spread probability {} not in [0, 1]",
                self.p
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParameter("IC needs at least one run".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadEstimate {
    pub mean_spread: f64,
    pub std_err: f64,
    pub runs: usize,
}

/// Round `i` of IC-greedy draws its realizations from this seed.
fn round_seed(master: u64, round: usize) -> u64 {
    master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(round as u64 + 1))
}

/// One sampled cascade graph: `live[a]` for arc `a` in adjacency order.
struct LiveArcs {
    live: Vec<bool>,
}

impl LiveArcs {
    fn draw(offsets: &[usize], p: f64, seed: u64, run: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run as u64);
        let arcs = *offsets.last().unwrap_or(&0);
        LiveArcs {
            live: (0..arcs).map(|_| rng.gen::<f64>() < p).collect(),
        }
    }
}

fn arc_offsets(g: &Graph) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(g.node_count() + 1);
    offsets.push(0);
    for v in 0..g.node_count() {
        offsets.push(offsets[v] + g.neighbors(v).len());
    }
    offsets
}

/// Marks every node reachable from `sources` over live arcs, skipping nodes
/// already marked. Returns the number of newly marked nodes.
fn flood(
    g: &Graph,
    offsets: &[usize],
    arcs: &LiveArcs,
    sources: &[usize],
    active: &mut [bool],
    stack: &mut Vec<usize>,
) -> usize {
    let mut count = 0;
    for &s in sources {
        if !active[s] {
            active[s] = true;
            count += 1;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for (i, &(v, _)) in g.neighbors(u).iter().enumerate() {
            if !active[v] && arcs.live[offsets[u] + i] {
                active[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count
}

fn check_seeds(g: &Graph, seeds: &[usize]) -> Result<()> {
    seeds.iter().try_for_each(|&s| g.check_node(s))
}

/// Activated-node counts of every run, in run order.
fn cascade_counts(g: &Graph, seeds: &[usize], cfg: &IcConfig) -> Vec<usize> {
    let offsets = arc_offsets(g);
    (0..cfg.runs)
        .into_par_iter()
        .map(|r| {
            let arcs = LiveArcs::draw(&offsets, cfg.p, cfg.master_seed, r);
            let mut active = vec![false; g.node_count()];
            flood(g, &offsets, &arcs, seeds, &mut active, &mut Vec::new())
        })
        .collect()
}

/// Monte-Carlo estimate of the expected number of activated nodes.
pub fn ic_spread(g: &Graph, seeds: &[usize], cfg: &IcConfig) -> Result<SpreadEstimate> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    check_seeds(g, seeds)?;
    let counts = cascade_counts(g, seeds, cfg);
    let sum: u64 = counts.iter().map(|&c| c as u64).sum();
    let sum_sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    let runs = cfg.runs as f64;
    let mean = sum as f64 / runs;
    let std_err = if cfg.runs > 1 {
        let var = (sum_sq as f64 - runs * mean * mean) / (runs - 1.0);
        (var.max(0.0) / runs).sqrt()
    } else {
        0.0
    };
    Ok(SpreadEstimate {
        mean_spread: mean,
        std_err,
        runs: cfg.runs,
    })
}

/// Mean fraction of nodes left unreached. An empty seed set scores 1.
pub fn ic_score(g: &Graph, seeds: &[usize], cfg: &IcConfig) -> Result<f64> {
    cfg.validate()?;
    check_seeds(g, seeds)?;
    if seeds.is_empty() {
        return Ok(1.0);
    }
    let reached: u64 = cascade_counts(g, seeds, cfg).iter().map(|&c| c as u64).sum();
    let total = g.node_count() as u64 * cfg.runs as u64;
    Ok((total - reached) as f64 / total as f64)
}

/// Greedy IC seed selection.
///
/// Round `i` samples `cfg.runs` cascade realizations once and scores every
/// candidate on the same realizations; the candidate with the largest total
/// number of newly reached nodes wins, smallest id on ties.
pub fn ic_greedy_select(g: &Graph, budget: usize, cfg: &IcConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let n = g.node_count();
    if budget > n {
        return Err(Error::Budget {
            requested: budget,
            available: n,
        });
    }
    let offsets = arc_offsets(g);
    let mut seeds: Vec<usize> = Vec::with_capacity(budget);
    let mut is_seed = vec![false; n];
    for round in 0..budget {
        let seed = round_seed(cfg.master_seed, round);
        let worlds: Vec<(LiveArcs, Vec<bool>)> = (0..cfg.runs)
            .into_par_iter()
            .map(|r| {
                let arcs = LiveArcs::draw(&offsets, cfg.p, seed, r);
                let mut base = vec![false; n];
                flood(g, &offsets, &arcs, &seeds, &mut base, &mut Vec::new());
                (arcs, base)
            })
            .collect();
        let gains: Vec<u64> = (0..n)
            .into_par_iter()
            .map(|v| {
                if is_seed[v] {
                    return 0;
                }
                let mut stack = Vec::new();
                worlds
                    .iter()
                    .map(|(arcs, base)| {
                        if base[v] {
                            return 0;
                        }
                        let mut active = base.clone();
                        flood(g, &offsets, arcs, &[v], &mut active, &mut stack) as u64
                    })
                    .sum()
            })
            .collect();
        let best = (0..n)
            .filter(|&v| !is_seed[v])
            .max_by(|&a, &b| gains[a].cmp(&gains[b]).then(b.cmp(&a)))
            .expect("budget <= n leaves a candidate");
        is_seed[best] = true;
        seeds.push(best);
    }
    Ok(seeds)
}

/// PageRank by power iteration from the uniform vector.
pub fn pagerank(g: &Graph, damping: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = g.node_count();
    pagerank_from(g, damping, tol, max_iter, vec![1.0 / n as f64; n])
}

/// PageRank by power iteration from `init` (normalized to sum 1).
///
/// Edge weights are transition weights; dangling nodes spread uniformly.
/// Stops when the L1 change of an iteration drops below `tol`.
pub fn pagerank_from(g: &Graph, damping: f64, tol: f64, max_iter: usize, init: Vec<f64>) -> Result<Vec<f64>> {
    let n = g.node_count();
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::InvalidParameter(format!("damping {damping} not in (0, 1)")));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParameter(
            "pagerank needs tol > 0 and max_iter > 0".into(),
        ));
    }
    if init.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: init.len(),
        });
    }
    let total: f64 = init.iter().sum();
    if !(total > 0.0) || init.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "initial vector must be non-negative with positive sum".into(),
        ));
    }
    let degree: Vec<f64> = (0..n).map(|v| g.weighted_degree(v)).collect();
    let mut x: Vec<f64> = init.into_iter().map(|v| v / total).collect();
    let teleport = (1.0 - damping) / n as f64;
    for _ in 0..max_iter {
        let dangling: f64 = (0..n).filter(|&v| degree[v] == 0.0).map(|v| x[v]).sum();
        let base = teleport + damping * dangling / n as f64;
        let mut next = vec![base; n];
        for u in 0..n {
            if degree[u] == 0.0 {
                continue;
            }
            let share = damping * x[u] / degree[u];
            for &(v, w) in g.neighbors(u) {
                next[v] += share * w;
            }
        }
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if change < tol {
            let s: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= s);
            return Ok(x);
        }
    }
    Err(Error::NoConvergence(max_iter))
}

/// Indices of the `count` largest scores, smallest index on ties.
pub fn top_n(scores: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(count);
    order
}
