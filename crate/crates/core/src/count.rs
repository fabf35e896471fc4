//! Transversal counting: exact branch-and-prune over adjacency bit rows
//! and a seeded sampling estimator for instances past the exact guard.

use crate::bitset::Bitset;
use crate::model::{Mode, MultipartiteGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

/// Exact counting is guarded at this many parts.
pub const MAX_COUNT_PARTS: usize = 12;
/// Exact counting is guarded at this part size.
pub const MAX_COUNT_PART_SIZE: usize = 256;
/// The naive reference counter walks every tuple, so it gets a small cap.
const NAIVE_CAP: f64 = 1e8;

#[derive(Debug, Clone)]
pub enum CountError {
    Guard(String),
    BadInput(String),
}

impl std::fmt::Display for CountError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CountError::Guard(msg) => write!(f, "instance exceeds a guard: {}", msg),
            CountError::BadInput(msg) => write!(f, "bad input: {}", msg),
        }
    }
}

impl std::error::Error for CountError {}

#[derive(Debug, Clone, PartialEq)]
pub enum CountValue {
    Exact(u128),
    Estimate { estimate: f64, se: f64, samples: u64 },
}

#[derive(Debug, Clone)]
pub struct CountResult {
    pub value: CountValue,
    pub mode: Mode,
    pub nodes_visited: u64,
    pub elapsed: Duration,
}

impl CountResult {
    pub fn to_json_string(&self) -> String {
        let body = match &self.value {
            CountValue::Exact(c) => {
                let count = if *c <= u64::MAX as u128 {
                    serde_json::json!(*c as u64)
                } else {
                    serde_json::json!(c.to_string())
                };
                serde_json::json!({
                    "count": count,
                    "mode": self.mode.as_str(),
                    "nodes": self.nodes_visited,
                    "ms": self.elapsed.as_millis() as u64,
                })
            }
            CountValue::Estimate { estimate, se, samples } => serde_json::json!({
                "estimate": estimate,
                "se": se,
                "samples": samples,
            }),
        };
        let mut s = serde_json::to_string_pretty(&body).expect("count serializes");
        s.push('\n');
        s
    }
}

struct Search<'a> {
    g: &'a MultipartiteGraph,
    mode: Mode,
    order: &'a [usize],
    nodes: u64,
    total: u128,
}

impl Search<'_> {
    fn restrict(&self, cand: &mut Bitset, p: usize, u: usize, part: usize) {
        match self.mode {
            Mode::IndependentTransversal => cand.and_not_in_place(self.g.neighbors(p, u, part)),
            Mode::TransversalClique => cand.and_in_place(self.g.neighbors(p, u, part)),
        }
    }

    fn recurse(&mut self, depth: usize, chosen: &mut Vec<(usize, usize)>) {
        self.nodes += 1;
        let part = self.order[depth];
        let mut cand = Bitset::full(self.g.parts().size(part));
        for &(p, u) in chosen.iter() {
            self.restrict(&mut cand, p, u, part);
        }
        if cand.is_empty() {
            return;
        }
        if depth + 1 == self.order.len() {
            self.total += cand.count_ones() as u128;
            return;
        }
        for v in cand.iter_ones() {
            chosen.push((part, v));
            self.recurse(depth + 1, chosen);
            chosen.pop();
        }
    }
}

fn check_guard(g: &MultipartiteGraph) -> Result<(), CountError> {
    let k = g.k();
    if k > MAX_COUNT_PARTS {
        return Err(CountError::Guard(format!(
            "exact counting handles at most {} parts, got {}",
            MAX_COUNT_PARTS, k
        )));
    }
    for i in 0..k {
        let n = g.parts().size(i);
        if n > MAX_COUNT_PART_SIZE {
            return Err(CountError::Guard(format!(
                "exact counting handles parts up to {} vertices, part {} has {}",
                MAX_COUNT_PART_SIZE,
                i + 1,
                n
            )));
        }
    }
    Ok(())
}

/// Exact transversal count by depth-first search. Parts are visited in
/// ascending size; the candidate row of the current part is cut down by
/// every chosen vertex (complement rows are never materialized), branches
/// die on an empty row, and the last part contributes a popcount. With
/// `jobs > 1` the first part is split across that many threads.
pub fn count_exact(g: &MultipartiteGraph, mode: Mode, jobs: usize) -> Result<CountResult, CountError> {
    check_guard(g)?;
    let start = Instant::now();
    let k = g.k();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&i| g.parts().size(i));
    let first = order[0];
    let n0 = g.parts().size(first);
    let jobs = jobs.max(1).min(n0);

    let (total, nodes) = if jobs == 1 {
        let mut s = Search { g, mode, order: &order, nodes: 0, total: 0 };
        s.recurse(0, &mut Vec::with_capacity(k));
        (s.total, s.nodes)
    } else {
        let chunk = n0.div_ceil(jobs);
        let results = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs)
                .map(|t| {
                    let lo = t * chunk;
                    let hi = ((t + 1) * chunk).min(n0);
                    let order = &order;
                    scope.spawn(move || {
                        let mut s = Search { g, mode, order, nodes: 0, total: 0 };
                        let mut chosen = Vec::with_capacity(k);
                        for v in lo..hi {
                            chosen.push((first, v));
                            s.recurse(1, &mut chosen);
                            chosen.pop();
                        }
                        (s.total, s.nodes)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect::<Vec<_>>()
        });
        let total = results.iter().map(|r| r.0).sum();
        // the serial walk visits one root node before splitting
        let nodes = 1 + results.iter().map(|r| r.1).sum::<u64>();
        (total, nodes)
    };

    Ok(CountResult {
        value: CountValue::Exact(total),
        mode,
        nodes_visited: nodes,
        elapsed: start.elapsed(),
    })
}

fn tuple_ok(g: &MultipartiteGraph, mode: Mode, chosen: &[usize]) -> bool {
    let k = g.k();
    for i in 0..k {
        for j in (i + 1)..k {
            let joined = g.has_edge(i, chosen[i], j, chosen[j]);
            let want = matches!(mode, Mode::TransversalClique);
            if joined != want {
                return false;
            }
        }
    }
    true
}

/// Monte Carlo estimate: draws one uniform vertex per part, `samples`
/// times, and scales the hit rate by the product of the part sizes. The
/// reported standard error is the binomial one.
pub fn count_sample(
    g: &MultipartiteGraph,
    samples: u64,
    seed: u64,
    mode: Mode,
) -> Result<CountResult, CountError> {
    if samples == 0 {
        return Err(CountError::BadInput("need at least one sample".into()));
    }
    let start = Instant::now();
    let k = g.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![0usize; k];
    let mut hits = 0u64;
    for _ in 0..samples {
        for (i, slot) in chosen.iter_mut().enumerate() {
            *slot = rng.random_range(0..g.parts().size(i));
        }
        if tuple_ok(g, mode, &chosen) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let prod = g.parts().product_f64();
    Ok(CountResult {
        value: CountValue::Estimate {
            estimate: p * prod,
            se: prod * (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
        },
        mode,
        nodes_visited: samples,
        elapsed: start.elapsed(),
    })
}

/// Reference counter that walks every tuple. Capped well below the exact
/// counter since it does no pruning.
pub fn count_naive(g: &MultipartiteGraph, mode: Mode) -> Result<u128, CountError> {
    if g.parts().product_f64() > NAIVE_CAP {
        return Err(CountError::Guard(format!(
            "naive counting is capped at {} tuples",
            NAIVE_CAP
        )));
    }
    let k = g.k();
    let mut chosen = vec![0usize; k];
    let mut total = 0u128;
    loop {
        if tuple_ok(g, mode, &chosen) {
            total += 1;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(total);
            }
            i -= 1;
            chosen[i] += 1;
            if chosen[i] < g.parts().size(i) {
                break;
            }
            chosen[i] = 0;
        }
    }
}
