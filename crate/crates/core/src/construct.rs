//! Extremal constructions: graphs whose independent transversal count
//! comes within lower-order terms of the bound coefficient times the
//! part-size product. The complement is completed on core pairs and the
//! remaining complement edges are placed in seeded pseudo-random order.

use crate::lp::PrimalSolution;
use crate::model::{DensityMatrix, Frac, ModelError, MultipartiteGraph, PartSpec};
use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Slack applied when floats sit on an integer or feasibility boundary.
const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum ConstructError {
    BadInput(String),
    InfeasiblePrimal { i: usize, j: usize, excess: f64 },
    InfeasibleRounding { i: usize, j: usize, need: u128, have: u128 },
}

impl std::fmt::Display for ConstructError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstructError::BadInput(msg) => write!(f, "bad input: {}", msg),
            ConstructError::InfeasiblePrimal { i, j, excess } => write!(
                f,
                "shrink factors violate pair ({}, {}) by {}",
                i + 1,
                j + 1,
                excess
            ),
            ConstructError::InfeasibleRounding { i, j, need, have } => write!(
                f,
                "pair ({}, {}) rounds to {} complement edges but the cores need {}",
                i + 1,
                j + 1,
                have,
                need
            ),
        }
    }
}

impl std::error::Error for ConstructError {}

impl From<ModelError> for ConstructError {
    fn from(e: ModelError) -> ConstructError {
        ConstructError::BadInput(e.to_string())
    }
}

/// A built instance together with its cores. Independent transversals
/// through the cores survive by construction, so their product is a
/// certified floor on the count.
#[derive(Debug, Clone)]
pub struct ExtremalConstruction {
    pub graph: MultipartiteGraph,
    pub cores: Vec<Vec<usize>>,
    pub achieved_densities: Vec<Vec<Frac>>,
    pub seed: u64,
}

impl ExtremalConstruction {
    /// Product of the core sizes.
    pub fn core_guarantee(&self) -> u128 {
        self.cores
            .iter()
            .fold(1u128, |acc, s| acc.checked_mul(s.len() as u128).expect("core product overflows u128"))
    }

    /// Companion record for the graph file: cores (1-based vertex ids),
    /// achieved densities, and the seed.
    pub fn sidecar_json_string(&self) -> String {
        #[derive(Serialize)]
        struct Sidecar {
            cores: Vec<Vec<usize>>,
            achieved: Vec<Vec<f64>>,
            seed: u64,
        }
        let file = Sidecar {
            cores: self
                .cores
                .iter()
                .map(|s| s.iter().map(|&v| v + 1).collect())
                .collect(),
            achieved: self
                .achieved_densities
                .iter()
                .map(|row| row.iter().map(|fr| fr.as_f64()).collect())
                .collect(),
            seed: self.seed,
        };
        let mut s = serde_json::to_string_pretty(&file).expect("sidecar serializes");
        s.push('\n');
        s
    }
}

/// Builds the extremal graph for the covering exponents `pr`: part i keeps
/// a core of its first `floor(a_i * n_i)` vertices with `a_i = exp(-b_i)`,
/// the complement gets every core-to-core pair plus seeded filler up to
/// `round((1 - d) * n_i * n_j)` (ties up, exact when d is rational), and
/// the graph itself is the complement of that.
pub fn build_extremal(
    d: &DensityMatrix,
    parts: &PartSpec,
    pr: &PrimalSolution,
    seed: u64,
) -> Result<ExtremalConstruction, ConstructError> {
    let k = d.k();
    if parts.k() != k {
        return Err(ConstructError::BadInput(format!(
            "density matrix has {} parts but sizes list {}",
            k,
            parts.k()
        )));
    }
    if pr.b.len() != k {
        return Err(ConstructError::BadInput(format!(
            "exponent vector has length {}, expected {}",
            pr.b.len(),
            k
        )));
    }
    for (i, &b) in pr.b.iter().enumerate() {
        if b < -BOUNDARY_SLACK || b.is_nan() {
            return Err(ConstructError::BadInput(format!("exponent {} of part {} is negative", b, i + 1)));
        }
    }

    let a: Vec<f64> = pr.b.iter().map(|&b| (-b.max(0.0)).exp().min(1.0)).collect();
    for i in 0..k {
        for j in (i + 1)..k {
            let excess = a[i] * a[j] - (1.0 - d.get(i, j));
            if excess > BOUNDARY_SLACK {
                return Err(ConstructError::InfeasiblePrimal { i, j, excess });
            }
        }
    }

    let cores: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let s = (a[i] * parts.size(i) as f64 + BOUNDARY_SLACK).floor() as usize;
            (0..s.min(parts.size(i))).collect()
        })
        .collect();

    let mut complement = MultipartiteGraph::new(parts.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..k {
        for j in (i + 1)..k {
            let ni = parts.size(i);
            let nj = parts.size(j);
            let total = ni as u128 * nj as u128;
            let m = complement_quota(d, i, j, total);
            let core = cores[i].len() as u128 * cores[j].len() as u128;
            if m < core {
                return Err(ConstructError::InfeasibleRounding { i, j, need: core, have: m });
            }
            for &u in &cores[i] {
                for &v in &cores[j] {
                    complement.add_edge(i, u, j, v)?;
                }
            }
            let mut eligible: Vec<(usize, usize)> = Vec::with_capacity((total - core) as usize);
            for u in 0..ni {
                for v in 0..nj {
                    if u >= cores[i].len() || v >= cores[j].len() {
                        eligible.push((u, v));
                    }
                }
            }
            let need = (m - core) as usize;
            let (chosen, _) = eligible.partial_shuffle(&mut rng, need);
            for &(u, v) in chosen.iter() {
                complement.add_edge(i, u, j, v)?;
            }
            debug!(
                "pair ({}, {}): quota {}, core {}, filler {}",
                i + 1,
                j + 1,
                m,
                core,
                need
            );
        }
    }

    let graph = complement.complement();
    let mut achieved_densities = vec![vec![Frac::new(0, 1); k]; k];
    for (i, row) in achieved_densities.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            if i != j {
                *slot = graph.realized_density(i, j)?;
            }
        }
    }
    Ok(ExtremalConstruction { graph, cores, achieved_densities, seed })
}

/// Complement edge quota for one pair: `round((1 - d) * n_i * n_j)` with
/// ties rounded up, in exact integer arithmetic when d carries a rational.
fn complement_quota(d: &DensityMatrix, i: usize, j: usize, total: u128) -> u128 {
    if let Some(fr) = d.rational(i, j) {
        let num = (fr.den() - fr.num()) as u128 * total;
        let den = fr.den() as u128;
        let (q, r) = (num / den, num % den);
        q + u128::from(2 * r >= den)
    } else {
        let target = (1.0 - d.get(i, j)) * total as f64;
        target.round() as u128
    }
}
