//! Random d-regular graphs with per-edge latency.
//!
//! Construction is the pairing (configuration) model: `n*d` stubs are
//! shuffled and paired. Self-loops and parallel edges are then removed with
//! random double-edge switches, which keep every degree at `d`. Plain
//! rejection of non-simple pairings stops working beyond d ~ 10, since the
//! chance of a simple pairing falls like `exp(-(d^2 - 1) / 4)`.

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("no {degree}-regular graph on {nodes} nodes (need n >= d + 1 and n*d even)")]
    Infeasible { nodes: usize, degree: usize },
    #[error("could not produce a connected {degree}-regular graph on {nodes} nodes")]
    Disconnected { nodes: usize, degree: usize },
}

/// Per-link one-way latency, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatencyModel {
    Uniform { min: f64, max: f64 },
    Fixed(f64),
}

impl Default for LatencyModel {
    /// Uniform between 0 and 20 ms.
    fn default() -> Self {
        LatencyModel::Uniform { min: 0.0, max: 0.020 }
    }
}

impl LatencyModel {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            LatencyModel::Fixed(l) => l,
            LatencyModel::Uniform { min, max } if max > min => rng.gen_range(min..max),
            LatencyModel::Uniform { min, .. } => min,
        }
    }
}

/// Undirected graph in compressed sparse row form, rows sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    latency: Vec<f64>,
}

impl WeightedGraph {
    /// Build from an undirected edge list `(u, v, latency)`.
    pub fn from_edges(nodes: usize, edges: &[(u32, u32, f64)]) -> Self {
        let mut degree = vec![0usize; nodes];
        for &(u, v, _) in edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut rows: Vec<(u32, f64)> = vec![(0, 0.0); total];
        let mut fill = offsets.clone();
        for &(u, v, l) in edges {
            rows[fill[u as usize]] = (v, l);
            fill[u as usize] += 1;
            rows[fill[v as usize]] = (u, l);
            fill[v as usize] += 1;
        }
        for u in 0..nodes {
            rows[offsets[u]..offsets[u + 1]].sort_by_key(|&(t, _)| t);
        }
        let (targets, latency) = rows.into_iter().unzip();
        Self {
            offsets,
            targets,
            latency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbours(&self, u: u32) -> &[u32] {
        let u = u as usize;
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: u32) -> usize {
        self.neighbours(u).len()
    }

    /// Latency of edge `u-v`, if present.
    pub fn latency(&self, u: u32, v: u32) -> Option<f64> {
        let start = self.offsets[u as usize];
        self.neighbours(u)
            .binary_search(&v)
            .ok()
            .map(|i| self.latency[start + i])
    }

    /// Each undirected edge once, as `(u, v, latency)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.node_count() as u32).flat_map(move |u| {
            let start = self.offsets[u as usize];
            self.neighbours(u)
                .iter()
                .enumerate()
                .filter(move |(_, &v)| u < v)
                .map(move |(i, &v)| (u, v, self.latency[start + i]))
        })
    }

    /// Connected after deleting the nodes flagged in `removed`? Vacuously
    /// true when nothing remains.
    pub fn is_connected_without(&self, removed: &[bool]) -> bool {
        let n = self.node_count();
        let Some(start) = (0..n).find(|&u| !removed.get(u).copied().unwrap_or(false)) else {
            return true;
        };
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([start as u32]);
        seen[start] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbours(u) {
                let vi = v as usize;
                if !seen[vi] && !removed.get(vi).copied().unwrap_or(false) {
                    seen[vi] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        let alive = (0..n).filter(|&u| !removed.get(u).copied().unwrap_or(false)).count();
        reached == alive
    }

    pub fn is_connected(&self) -> bool {
        self.is_connected_without(&[])
    }
}

fn key(u: u32, v: u32) -> u64 {
    let (a, b) = if u <= v { (u, v) } else { (v, u) };
    ((a as u64) << 32) | b as u64
}

/// One attempt at a simple d-regular multigraph repair. `None` if the
/// switch budget ran out.
fn pair_and_repair(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(u32, u32)>> {
    let mut stubs: Vec<u32> = (0..n as u32).flat_map(|u| std::iter::repeat_n(u, d)).collect();
    stubs.shuffle(rng);
    let mut edges: Vec<(u32, u32)> = stubs.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    let m = edges.len();
    if m == 0 {
        return Some(edges);
    }

    let mut mult: HashMap<u64, u32> = HashMap::with_capacity(m);
    for &(u, v) in &edges {
        *mult.entry(key(u, v)).or_default() += 1;
    }
    let is_bad = |e: (u32, u32), mult: &HashMap<u64, u32>| e.0 == e.1 || mult[&key(e.0, e.1)] > 1;
    let mut bad: Vec<usize> = (0..m).filter(|&i| is_bad(edges[i], &mult)).collect();

    let budget = 1000 * (bad.len() + 10) + 100 * m;
    let mut tries = 0;
    while let Some(&i) = bad.last() {
        if !is_bad(edges[i], &mult) {
            bad.pop();
            continue;
        }
        tries += 1;
        if tries > budget {
            return None;
        }
        let j = rng.gen_range(0..m);
        if j == i {
            continue;
        }
        let (a, b) = edges[i];
        let (c, e) = edges[j];
        let (x, y) = if rng.gen::<bool>() { ((a, c), (b, e)) } else { ((a, e), (b, c)) };
        if x.0 == x.1 || y.0 == y.1 || key(x.0, x.1) == key(y.0, y.1) {
            continue;
        }
        if mult.get(&key(x.0, x.1)).copied().unwrap_or(0) > 0
            || mult.get(&key(y.0, y.1)).copied().unwrap_or(0) > 0
        {
            continue;
        }
        for old in [(a, b), (c, e)] {
            let k = key(old.0, old.1);
            let c = mult.get_mut(&k).unwrap();
            *c -= 1;
            if *c == 0 {
                mult.remove(&k);
            }
        }
        mult.insert(key(x.0, x.1), 1);
        mult.insert(key(y.0, y.1), 1);
        edges[i] = x;
        edges[j] = y;
        // j may have been one of the bad edges; it is good now, and the
        // stale entry is skipped when reached.
    }
    Some(edges)
}

fn perturb(seed: u64, attempt: u64) -> u64 {
    seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Random connected d-regular graph with latencies from `latency`.
/// Deterministic in `(n, d, seed, latency)`.
pub fn generate_regular_graph(
    nodes: usize,
    degree: usize,
    seed: u64,
    latency: LatencyModel,
) -> Result<WeightedGraph, GraphError> {
    if nodes == 0 || nodes < degree + 1 || (nodes * degree) % 2 == 1 || (degree == 0 && nodes > 1) {
        return Err(GraphError::Infeasible { nodes, degree });
    }
    for attempt in 0..64u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(perturb(seed, attempt));
        let Some(mut pairs) = pair_and_repair(nodes, degree, &mut rng) else {
            continue;
        };
        for p in &mut pairs {
            if p.0 > p.1 {
                *p = (p.1, p.0);
            }
        }
        pairs.sort_unstable();
        let edges: Vec<(u32, u32, f64)> = pairs
            .into_iter()
            .map(|(u, v)| (u, v, latency.sample(&mut rng)))
            .collect();
        let graph = WeightedGraph::from_edges(nodes, &edges);
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(GraphError::Disconnected { nodes, degree })
}
