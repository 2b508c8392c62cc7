#![allow(dead_code)]

use gbfim::graph::Graph;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected graph: a random recursive tree plus `extra` chords.
/// Weights are drawn from `weights` (a degenerate range gives unit weights).
pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: usize, weights: (f64, f64)) -> Graph {
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let weight = |rng: &mut ChaCha8Rng| {
        if weights.0 == weights.1 {
            weights.0
        } else {
            rng.gen_range(weights.0..weights.1)
        }
    };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        seen.insert((u, v));
        edges.push((u, v, weight(rng)));
    }
    let mut tries = 0;
    let mut added = 0;
    while added < extra && tries < 20 * extra + 20 {
        tries += 1;
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let (u, v) = (a.min(b), a.max(b));
        if u != v && seen.insert((u, v)) {
            edges.push((u, v, weight(rng)));
            added += 1;
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Random graph that may be disconnected: each pair is linked with probability `p`.
pub fn random_erdos(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v, rng.gen_range(0.1..3.0)));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Dense D - A assembled straight from the edge list.
pub fn dense_laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut l = DMatrix::zeros(n, n);
    for e in g.edges() {
        l[(e.u, e.v)] -= e.w;
        l[(e.v, e.u)] -= e.w;
        l[(e.u, e.u)] += e.w;
        l[(e.v, e.v)] += e.w;
    }
    l
}

/// Number of connected components by union-find over the edge list.
pub fn component_count(g: &Graph) -> usize {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let n = g.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut count = n;
    for e in g.edges() {
        let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

/// `exp(a)` by scaling and squaring of a degree-30 Taylor polynomial.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let b = a * scale;
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Posterior variance `K_vv - k_v^T K_W^{-1} k_v` for every node, solved with
/// a pivoted LU factorization of the explicitly assembled kernel block.
pub fn direct_variance(k: &DMatrix<f64>, w: &[usize]) -> DVector<f64> {
    let n = k.nrows();
    if w.is_empty() {
        return k.diagonal();
    }
    let kw = DMatrix::from_fn(w.len(), w.len(), |i, j| k[(w[i], w[j])]);
    let lu = kw.lu();
    DVector::from_fn(n, |v, _| {
        if w.contains(&v) {
            return 0.0;
        }
        let kv = DVector::from_fn(w.len(), |i, _| k[(w[i], v)]);
        let c = lu.solve(&kv).expect("sampling block is invertible");
        k[(v, v)] - kv.dot(&c)
    })
}

/// Smallest id among the entries within relative `rtol` of the maximum.
pub fn argmax_smallest_id(values: &[f64], excluded: &[usize], rtol: f64) -> usize {
    let best = values
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded.contains(i))
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    (0..values.len())
        .find(|i| !excluded.contains(i) && values[*i] >= best - rtol * best.abs())
        .unwrap()
}
