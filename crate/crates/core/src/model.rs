//! Problem data: pairwise density matrices, part sizes, and multipartite
//! graphs with per-vertex bit-row adjacency between parts.
//!
//! Parts and vertices are 0-indexed everywhere in memory. The JSON files
//! are 1-indexed; conversion happens only at the (de)serialization edge.

use crate::bitset::Bitset;
use serde::{Deserialize, Serialize};
use std::fmt;

pub const MAX_PARTS: usize = 64;
pub const MAX_PART_SIZE: usize = 4096;
const SYM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    BadDimension(String),
    AsymmetricMatrix { i: usize, j: usize, delta: f64 },
    OutOfRange { i: usize, j: usize, value: f64 },
    RationalMismatch { i: usize, j: usize },
    SamePart(usize),
    BadEdge(String),
    Parse(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::BadDimension(msg) => write!(f, "bad dimension: {msg}"),
            ModelError::AsymmetricMatrix { i, j, delta } => {
                write!(f, "asymmetric matrix at ({i},{j}): |d_ij - d_ji| = {delta:e}")
            }
            ModelError::OutOfRange { i, j, value } => {
                write!(f, "density out of [0,1] at ({i},{j}): {value}")
            }
            ModelError::RationalMismatch { i, j } => {
                write!(f, "rational entry at ({i},{j}) does not match the float entry")
            }
            ModelError::SamePart(i) => write!(f, "parts must differ, got part {i} twice"),
            ModelError::BadEdge(msg) => write!(f, "bad edge: {msg}"),
            ModelError::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for ModelError {}

/// Which side of the complement a transversal is counted on: independent
/// transversals of the graph itself, or transversal cliques of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    IndependentTransversal,
    TransversalClique,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::IndependentTransversal => "it",
            Mode::TransversalClique => "clique",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "it" | "independent-transversal" => Ok(Mode::IndependentTransversal),
            "clique" | "transversal-clique" => Ok(Mode::TransversalClique),
            other => Err(ModelError::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

/// Exact nonnegative fraction, kept reduced. Used wherever a density comes
/// from integer counts and "exactly" has to mean rational equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frac {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Frac {
    pub fn new(num: u64, den: u64) -> Frac {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        Frac { num: num / g, den: den / g }
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// 1 - self, exact. Requires self <= 1.
    pub fn complement(self) -> Frac {
        assert!(self.num <= self.den);
        Frac::new(self.den - self.num, self.den)
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Symmetric k x k matrix of pairwise edge densities in [0,1], with an
/// optional exact-rational mirror carried alongside for round trips and
/// integer-exact checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    k: usize,
    d: Vec<f64>,
    rationals: Option<Vec<Frac>>,
}

impl DensityMatrix {
    /// Validates shape, symmetry (checked, not averaged), and range. The
    /// upper triangle is the authority; the lower is mirrored from it after
    /// the symmetry check so `get` is exactly symmetric.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<DensityMatrix, ModelError> {
        let k = rows.len();
        if !(2..=MAX_PARTS).contains(&k) {
            return Err(ModelError::BadDimension(format!(
                "k = {k}, need 2 <= k <= {MAX_PARTS}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(ModelError::BadDimension(format!(
                    "row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
        }
        let mut d = vec![0.0; k * k];
        for i in 0..k {
            for j in (i + 1)..k {
                let delta = (rows[i][j] - rows[j][i]).abs();
                if delta > SYM_TOL {
                    return Err(ModelError::AsymmetricMatrix { i, j, delta });
                }
                let v = rows[i][j];
                if !v.is_finite() || !(-SYM_TOL..=1.0 + SYM_TOL).contains(&v) {
                    return Err(ModelError::OutOfRange { i, j, value: v });
                }
                let v = v.clamp(0.0, 1.0);
                d[i * k + j] = v;
                d[j * k + i] = v;
            }
            let diag = rows[i][i];
            if diag.abs() > SYM_TOL {
                return Err(ModelError::OutOfRange { i, j: i, value: diag });
            }
        }
        Ok(DensityMatrix { k, d, rationals: None })
    }

    /// Attaches an exact-rational mirror; every off-diagonal rational must
    /// match the float entry to within 1e-9.
    pub fn with_rationals(mut self, rats: Vec<Vec<Frac>>) -> Result<DensityMatrix, ModelError> {
        let k = self.k;
        if rats.len() != k || rats.iter().any(|r| r.len() != k) {
            return Err(ModelError::BadDimension("rational matrix shape".into()));
        }
        let mut flat = vec![Frac::new(0, 1); k * k];
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let r = rats[i][j];
                if (r.as_f64() - self.get(i, j)).abs() > 1e-9 {
                    return Err(ModelError::RationalMismatch { i, j });
                }
                flat[i * k + j] = r;
            }
        }
        self.rationals = Some(flat);
        Ok(self)
    }

    /// All off-diagonal entries equal to `d`.
    pub fn uniform(k: usize, d: f64) -> Result<DensityMatrix, ModelError> {
        let rows = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 0.0 } else { d }).collect())
            .collect();
        DensityMatrix::new(rows)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.k + j]
    }

    pub fn rational(&self, i: usize, j: usize) -> Option<Frac> {
        self.rationals.as_ref().map(|r| r[i * self.k + j])
    }

    pub fn has_rationals(&self) -> bool {
        self.rationals.is_some()
    }

    pub fn to_json_string(&self) -> String {
        let densities = (0..self.k)
            .map(|i| (0..self.k).map(|j| self.d[i * self.k + j]).collect())
            .collect();
        let rationals = self.rationals.as_ref().map(|r| {
            (0..self.k)
                .map(|i| {
                    (0..self.k)
                        .map(|j| {
                            let f = r[i * self.k + j];
                            [f.num().to_string(), f.den().to_string()]
                        })
                        .collect()
                })
                .collect()
        });
        let file = DensityFile { k: self.k, densities, rationals };
        serde_json::to_string_pretty(&file).expect("density serialization")
    }

    pub fn from_json_str(s: &str) -> Result<DensityMatrix, ModelError> {
        let file: DensityFile =
            serde_json::from_str(s).map_err(|e| ModelError::Parse(e.to_string()))?;
        if file.k != file.densities.len() {
            return Err(ModelError::BadDimension(format!(
                "k = {} but densities has {} rows",
                file.k,
                file.densities.len()
            )));
        }
        let m = DensityMatrix::new(file.densities)?;
        match file.rationals {
            None => Ok(m),
            Some(rows) => {
                let mut rats = Vec::with_capacity(rows.len());
                for row in rows {
                    let mut out = Vec::with_capacity(row.len());
                    for [num, den] in row {
                        let num: u64 =
                            num.parse().map_err(|_| ModelError::Parse(format!("numerator {num:?}")))?;
                        let den: u64 =
                            den.parse().map_err(|_| ModelError::Parse(format!("denominator {den:?}")))?;
                        if den == 0 {
                            return Err(ModelError::Parse("zero denominator".into()));
                        }
                        out.push(Frac::new(num, den));
                    }
                    rats.push(out);
                }
                m.with_rationals(rats)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DensityFile {
    k: usize,
    densities: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rationals: Option<Vec<Vec<[String; 2]>>>,
}

/// Part sizes n_1..n_k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartSpec {
    sizes: Vec<usize>,
}

impl PartSpec {
    pub fn new(sizes: Vec<usize>) -> Result<PartSpec, ModelError> {
        let k = sizes.len();
        if !(2..=MAX_PARTS).contains(&k) {
            return Err(ModelError::BadDimension(format!(
                "{k} parts, need 2 <= k <= {MAX_PARTS}"
            )));
        }
        for (i, &n) in sizes.iter().enumerate() {
            if n == 0 || n > MAX_PART_SIZE {
                return Err(ModelError::BadDimension(format!(
                    "part {i} has size {n}, need 1 <= n <= {MAX_PART_SIZE}"
                )));
            }
        }
        Ok(PartSpec { sizes })
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn product_f64(&self) -> f64 {
        self.sizes.iter().map(|&n| n as f64).product()
    }

    pub fn product_u128(&self) -> u128 {
        self.sizes
            .iter()
            .fold(1u128, |acc, &n| acc.checked_mul(n as u128).expect("part product overflows u128"))
    }
}

/// k-partite graph; only cross-part pairs may carry edges. Adjacency is a
/// bit row per vertex per opposite part, stored in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipartiteGraph {
    parts: PartSpec,
    // adj[i * k + j][u] = bits over part j adjacent to vertex u of part i
    adj: Vec<Vec<Bitset>>,
}

impl MultipartiteGraph {
    pub fn new(parts: PartSpec) -> MultipartiteGraph {
        let k = parts.k();
        let mut adj = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    adj.push(Vec::new());
                } else {
                    adj.push(vec![Bitset::empty(parts.size(j)); parts.size(i)]);
                }
            }
        }
        MultipartiteGraph { parts, adj }
    }

    pub fn parts(&self) -> &PartSpec {
        &self.parts
    }

    pub fn k(&self) -> usize {
        self.parts.k()
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(), ModelError> {
        let k = self.k();
        if i >= k || j >= k {
            return Err(ModelError::BadEdge(format!("part index out of range ({i},{j})")));
        }
        if i == j {
            return Err(ModelError::SamePart(i));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, i: usize, u: usize, j: usize, v: usize) -> Result<(), ModelError> {
        self.check_pair(i, j)?;
        if u >= self.parts.size(i) || v >= self.parts.size(j) {
            return Err(ModelError::BadEdge(format!(
                "vertex out of range: ({i},{u})-({j},{v})"
            )));
        }
        let k = self.k();
        self.adj[i * k + j][u].set(v);
        self.adj[j * k + i][v].set(u);
        Ok(())
    }

    pub fn has_edge(&self, i: usize, u: usize, j: usize, v: usize) -> bool {
        self.adj[i * self.k() + j][u].test(v)
    }

    /// Bit row over part j of the neighbors of vertex u in part i.
    pub fn neighbors(&self, i: usize, u: usize, j: usize) -> &Bitset {
        &self.adj[i * self.k() + j][u]
    }

    pub fn edge_count(&self, i: usize, j: usize) -> u64 {
        self.adj[i * self.k() + j]
            .iter()
            .map(|row| row.count_ones() as u64)
            .sum()
    }

    /// Edge count between parts i and j divided by n_i * n_j, exact.
    pub fn realized_density(&self, i: usize, j: usize) -> Result<Frac, ModelError> {
        self.check_pair(i, j)?;
        let total = (self.parts.size(i) as u64) * (self.parts.size(j) as u64);
        Ok(Frac::new(self.edge_count(i, j), total))
    }

    /// Cross-part complement: every absent cross edge becomes present and
    /// vice versa.
    pub fn complement(&self) -> MultipartiteGraph {
        let mut g = MultipartiteGraph::new(self.parts.clone());
        let k = self.k();
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                for (u, row) in self.adj[i * k + j].iter().enumerate() {
                    let full = Bitset::full(self.parts.size(j));
                    g.adj[i * k + j][u].assign_and_not(&full, row);
                }
            }
        }
        g
    }

    /// Independent cross-part coin flips with probability d_ij, seeded.
    pub fn random(parts: PartSpec, d: &DensityMatrix, seed: u64) -> MultipartiteGraph {
        use rand::Rng;
        use rand::SeedableRng;
        assert_eq!(parts.k(), d.k(), "parts/densities dimension mismatch");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut g = MultipartiteGraph::new(parts);
        let k = g.k();
        for i in 0..k {
            for j in (i + 1)..k {
                let p = d.get(i, j);
                for u in 0..g.parts.size(i) {
                    for v in 0..g.parts.size(j) {
                        if rng.random_bool(p) {
                            g.add_edge(i, u, j, v).expect("in-range edge");
                        }
                    }
                }
            }
        }
        g
    }

    /// Edges as (i, u, j, v) with i < j, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, usize, usize)> {
        let k = self.k();
        let mut out = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                for (u, row) in self.adj[i * k + j].iter().enumerate() {
                    for v in row.iter_ones() {
                        out.push((i, u, j, v));
                    }
                }
            }
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        let edges = self
            .edges()
            .into_iter()
            .map(|(i, u, j, v)| [i + 1, u + 1, j + 1, v + 1])
            .collect();
        let file = GraphFile { parts: self.parts.sizes().to_vec(), edges };
        serde_json::to_string_pretty(&file).expect("graph serialization")
    }

    pub fn from_json_str(s: &str) -> Result<MultipartiteGraph, ModelError> {
        let file: GraphFile =
            serde_json::from_str(s).map_err(|e| ModelError::Parse(e.to_string()))?;
        let parts = PartSpec::new(file.parts)?;
        let mut g = MultipartiteGraph::new(parts);
        for [i, u, j, v] in file.edges {
            if i == 0 || u == 0 || j == 0 || v == 0 {
                return Err(ModelError::BadEdge("indices are 1-based, got 0".into()));
            }
            g.add_edge(i - 1, u - 1, j - 1, v - 1)?;
        }
        Ok(g)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    parts: Vec<usize>,
    edges: Vec<[usize; 4]>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric() {
        let err = DensityMatrix::new(vec![vec![0.0, 0.3], vec![0.4, 0.0]]).unwrap_err();
        assert!(matches!(err, ModelError::AsymmetricMatrix { i: 0, j: 1, .. }));
    }

    #[test]
    fn rejects_out_of_range_and_bad_shape() {
        let err = DensityMatrix::new(vec![vec![0.0, 1.5], vec![1.5, 0.0]]).unwrap_err();
        assert!(matches!(err, ModelError::OutOfRange { .. }));
        let err = DensityMatrix::new(vec![vec![0.0]]).unwrap_err();
        assert!(matches!(err, ModelError::BadDimension(_)));
        let err = DensityMatrix::new(vec![vec![0.0, 0. ,0.], vec![0.0, 0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, ModelError::BadDimension(_)));
    }

    #[test]
    fn symmetry_within_tolerance_mirrors_upper() {
        let m = DensityMatrix::new(vec![vec![0.0, 0.3 + 5e-13], vec![0.3, 0.0]]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn density_json_round_trip_with_rationals() {
        let m = DensityMatrix::uniform(3, 0.75)
            .unwrap()
            .with_rationals(vec![
                vec![Frac::new(0, 1), Frac::new(3, 4), Frac::new(3, 4)],
                vec![Frac::new(3, 4), Frac::new(0, 1), Frac::new(3, 4)],
                vec![Frac::new(3, 4), Frac::new(3, 4), Frac::new(0, 1)],
            ])
            .unwrap();
        let s = m.to_json_string();
        let back = DensityMatrix::from_json_str(&s).unwrap();
        assert_eq!(m, back);
        assert_eq!(back.rational(0, 1), Some(Frac::new(3, 4)));
        // serialization is idempotent byte for byte
        assert_eq!(s, back.to_json_string());
    }

    #[test]
    fn rational_mismatch_detected() {
        let m = DensityMatrix::uniform(2, 0.5).unwrap();
        let err = m
            .with_rationals(vec![
                vec![Frac::new(0, 1), Frac::new(1, 3)],
                vec![Frac::new(1, 3), Frac::new(0, 1)],
            ])
            .unwrap_err();
        assert!(matches!(err, ModelError::RationalMismatch { i: 0, j: 1 }));
    }

    #[test]
    fn frac_reduces_and_complements() {
        let f = Frac::new(8, 48);
        assert_eq!((f.num(), f.den()), (1, 6));
        assert_eq!(f.complement(), Frac::new(5, 6));
        assert_eq!(Frac::new(0, 7), Frac::new(0, 1));
    }

    #[test]
    fn graph_edges_and_realized_density() {
        let parts = PartSpec::new(vec![4, 4]).unwrap();
        let mut g = MultipartiteGraph::new(parts);
        for u in 0..4 {
            for v in 0..2 {
                g.add_edge(0, u, 1, v).unwrap();
            }
        }
        assert_eq!(g.edge_count(0, 1), 8);
        assert_eq!(g.realized_density(0, 1).unwrap(), Frac::new(1, 2));
        assert!(matches!(g.realized_density(1, 1), Err(ModelError::SamePart(1))));
        assert!(g.has_edge(1, 0, 0, 3));
        assert!(!g.has_edge(0, 0, 1, 3));
    }

    #[test]
    fn complement_is_involutive_and_density_complements_exactly() {
        let parts = PartSpec::new(vec![5, 3, 4]).unwrap();
        let d = DensityMatrix::uniform(3, 0.4).unwrap();
        let g = MultipartiteGraph::random(parts, &d, 7);
        let c = g.complement();
        assert_eq!(c.complement(), g);
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let a = g.realized_density(i, j).unwrap();
                let b = c.realized_density(i, j).unwrap();
                assert_eq!(b, a.complement());
            }
        }
    }

    #[test]
    fn neighbor_rows_agree_with_membership() {
        let parts = PartSpec::new(vec![6, 8]).unwrap();
        let d = DensityMatrix::uniform(2, 0.5).unwrap();
        let g = MultipartiteGraph::random(parts, &d, 3);
        for u in 0..6 {
            for v in 0..8 {
                assert_eq!(g.has_edge(0, u, 1, v), g.neighbors(0, u, 1).test(v));
                assert_eq!(g.has_edge(0, u, 1, v), g.neighbors(1, v, 0).test(u));
            }
        }
    }

    #[test]
    fn graph_json_round_trip() {
        let parts = PartSpec::new(vec![3, 2, 2]).unwrap();
        let d = DensityMatrix::uniform(3, 0.6).unwrap();
        let g = MultipartiteGraph::random(parts, &d, 11);
        let s = g.to_json_string();
        let back = MultipartiteGraph::from_json_str(&s).unwrap();
        assert_eq!(g, back);
        assert_eq!(s, back.to_json_string());
    }

    #[test]
    fn graph_json_rejects_bad_edges() {
        let bad = r#"{"parts":[2,2],"edges":[[1,1,1,2]]}"#;
        assert!(matches!(
            MultipartiteGraph::from_json_str(bad),
            Err(ModelError::SamePart(0))
        ));
        let bad = r#"{"parts":[2,2],"edges":[[1,3,2,1]]}"#;
        assert!(matches!(
            MultipartiteGraph::from_json_str(bad),
            Err(ModelError::BadEdge(_))
        ));
        let bad = r#"{"parts":[2,2],"edges":[[0,1,2,1]]}"#;
        assert!(matches!(
            MultipartiteGraph::from_json_str(bad),
            Err(ModelError::BadEdge(_))
        ));
    }

    #[test]
    fn same_seed_same_graph() {
        let d = DensityMatrix::uniform(3, 0.37).unwrap();
        let a = MultipartiteGraph::random(PartSpec::new(vec![9, 7, 5]).unwrap(), &d, 42);
        let b = MultipartiteGraph::random(PartSpec::new(vec![9, 7, 5]).unwrap(), &d, 42);
        assert_eq!(a, b);
        let c = MultipartiteGraph::random(PartSpec::new(vec![9, 7, 5]).unwrap(), &d, 43);
        assert_ne!(a, c);
    }
}
