//! Partitions of the part set into odd cycles, doubled edges, and isolated
//! vertices, together with the weight each partition assigns to a density
//! matrix and exhaustive minimization over all partitions.

use crate::model::{DensityMatrix, Mode};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest k accepted by the exhaustive enumerator. The count of partitions
/// grows fast (635,984 at k = 10); past this the LP route takes over.
pub const ENUMERATION_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum DecompError {
    TooLarge { k: usize, cap: usize },
    CoverageMismatch(String),
    BadPiece(String),
    Parse(String),
}

impl fmt::Display for DecompError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecompError::TooLarge { k, cap } => {
                write!(f, "k = {k} exceeds the enumeration cap {cap}")
            }
            DecompError::CoverageMismatch(msg) => write!(f, "coverage mismatch: {msg}"),
            DecompError::BadPiece(msg) => write!(f, "bad piece: {msg}"),
            DecompError::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for DecompError {}

/// One block of a partition. Cycles are stored with their smallest vertex
/// first and the smaller of its two neighbors second; double edges keep the
/// smaller endpoint first. Variant order gives the tie-break order used by
/// [`brute_min`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Piece {
    Isolated(usize),
    DoubleEdge(usize, usize),
    Cycle(Vec<usize>),
}

impl Piece {
    pub fn vertices(&self) -> Vec<usize> {
        match self {
            Piece::Isolated(v) => vec![*v],
            Piece::DoubleEdge(a, b) => vec![*a, *b],
            Piece::Cycle(vs) => vs.clone(),
        }
    }

    fn min_vertex(&self) -> usize {
        match self {
            Piece::Isolated(v) => *v,
            Piece::DoubleEdge(a, _) => *a,
            Piece::Cycle(vs) => vs[0],
        }
    }

    fn canonicalized(self) -> Result<Piece, DecompError> {
        match self {
            Piece::Isolated(v) => Ok(Piece::Isolated(v)),
            Piece::DoubleEdge(a, b) => {
                if a == b {
                    return Err(DecompError::BadPiece(format!("double edge ({a},{a})")));
                }
                Ok(Piece::DoubleEdge(a.min(b), a.max(b)))
            }
            Piece::Cycle(vs) => {
                let m = vs.len();
                if m < 3 || m % 2 == 0 {
                    return Err(DecompError::BadPiece(format!(
                        "cycle length {m}, need odd >= 3"
                    )));
                }
                let mut seen = vs.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != m {
                    return Err(DecompError::BadPiece("repeated vertex in cycle".into()));
                }
                // rotate the minimum to the front, then pick the direction
                // whose second vertex is smaller
                let start = (0..m).min_by_key(|&t| vs[t]).unwrap();
                let fwd: Vec<usize> = (0..m).map(|t| vs[(start + t) % m]).collect();
                let rev: Vec<usize> = (0..m).map(|t| vs[(start + m - t) % m]).collect();
                Ok(Piece::Cycle(if fwd[1] <= rev[1] { fwd } else { rev }))
            }
        }
    }
}

/// A partition of {0..k-1} into pieces, stored canonically: each piece in
/// canonical orientation, pieces sorted by smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OddCycleDecomposition {
    k: usize,
    pieces: Vec<Piece>,
}

impl OddCycleDecomposition {
    pub fn new(k: usize, pieces: Vec<Piece>) -> Result<OddCycleDecomposition, DecompError> {
        let mut canon = Vec::with_capacity(pieces.len());
        let mut covered = vec![false; k];
        for p in pieces {
            let p = p.canonicalized()?;
            for v in p.vertices() {
                if v >= k {
                    return Err(DecompError::CoverageMismatch(format!(
                        "vertex {v} out of range for k = {k}"
                    )));
                }
                if covered[v] {
                    return Err(DecompError::CoverageMismatch(format!(
                        "vertex {v} covered twice"
                    )));
                }
                covered[v] = true;
            }
            canon.push(p);
        }
        if let Some(v) = covered.iter().position(|&c| !c) {
            return Err(DecompError::CoverageMismatch(format!("vertex {v} uncovered")));
        }
        canon.sort_by_key(|p| p.min_vertex());
        Ok(OddCycleDecomposition { k, pieces: canon })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Edges with multiplicity: a double edge contributes its pair twice,
    /// a cycle its consecutive pairs once each.
    pub fn edges_with_multiplicity(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for p in &self.pieces {
            match p {
                Piece::Isolated(_) => {}
                Piece::DoubleEdge(a, b) => {
                    out.push((*a, *b));
                    out.push((*a, *b));
                }
                Piece::Cycle(vs) => {
                    for t in 0..vs.len() {
                        let a = vs[t];
                        let b = vs[(t + 1) % vs.len()];
                        out.push((a.min(b), a.max(b)));
                    }
                }
            }
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        let pieces = self
            .pieces
            .iter()
            .map(|p| match p {
                Piece::Isolated(v) => PieceFile::Isolated(v + 1),
                Piece::DoubleEdge(a, b) => PieceFile::DoubleEdge([a + 1, b + 1]),
                Piece::Cycle(vs) => PieceFile::Cycle(vs.iter().map(|v| v + 1).collect()),
            })
            .collect();
        serde_json::to_string_pretty(&DecompositionFile { pieces })
            .expect("decomposition serialization")
    }

    /// Parses and fully revalidates; `k` is taken as the number of covered
    /// vertices, which must be exactly 1..=max.
    pub fn from_json_str(s: &str) -> Result<OddCycleDecomposition, DecompError> {
        let file: DecompositionFile =
            serde_json::from_str(s).map_err(|e| DecompError::Parse(e.to_string()))?;
        let mut pieces = Vec::with_capacity(file.pieces.len());
        let mut max = 0usize;
        for p in &file.pieces {
            let vs = match p {
                PieceFile::Isolated(v) => vec![*v],
                PieceFile::DoubleEdge(ab) => ab.to_vec(),
                PieceFile::Cycle(vs) => vs.clone(),
            };
            for &v in &vs {
                if v == 0 {
                    return Err(DecompError::Parse("vertices are 1-based, got 0".into()));
                }
                max = max.max(v);
            }
            pieces.push(match p {
                PieceFile::Isolated(v) => Piece::Isolated(v - 1),
                PieceFile::DoubleEdge([a, b]) => Piece::DoubleEdge(a - 1, b - 1),
                PieceFile::Cycle(vs) => Piece::Cycle(vs.iter().map(|v| v - 1).collect()),
            });
        }
        OddCycleDecomposition::new(max, pieces)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PieceFile {
    Isolated(usize),
    DoubleEdge([usize; 2]),
    Cycle(Vec<usize>),
}

#[derive(Serialize, Deserialize)]
struct DecompositionFile {
    pieces: Vec<PieceFile>,
}

/// Weight a partition assigns to a density matrix: one factor per edge with
/// multiplicity, sqrt(1 - d) per factor in independent-transversal mode and
/// sqrt(d) in clique mode. Isolated vertices contribute 1.
pub fn evaluate(
    h: &OddCycleDecomposition,
    d: &DensityMatrix,
    mode: Mode,
) -> Result<f64, DecompError> {
    if h.k() != d.k() {
        return Err(DecompError::CoverageMismatch(format!(
            "decomposition covers {} vertices, matrix has {}",
            h.k(),
            d.k()
        )));
    }
    Ok(eval_pieces(&h.pieces, d, mode))
}

fn eval_pieces(pieces: &[Piece], d: &DensityMatrix, mode: Mode) -> f64 {
    let base = |i: usize, j: usize| -> f64 {
        match mode {
            Mode::IndependentTransversal => 1.0 - d.get(i, j),
            Mode::TransversalClique => d.get(i, j),
        }
    };
    let mut value = 1.0;
    for p in pieces {
        match p {
            Piece::Isolated(_) => {}
            // the squared square root collapses, so take the base exactly
            Piece::DoubleEdge(a, b) => value *= base(*a, *b),
            Piece::Cycle(vs) => {
                for t in 0..vs.len() {
                    value *= base(vs[t], vs[(t + 1) % vs.len()]).sqrt();
                }
            }
        }
    }
    value
}

/// Walks every partition of {0..k-1} exactly once, in a fixed order, without
/// materializing the whole family. The callback sees pieces sorted by
/// smallest vertex, cycles already canonical.
pub fn for_each_decomposition<F: FnMut(&[Piece])>(k: usize, mut f: F) {
    let mut used = vec![false; k];
    let mut pieces: Vec<Piece> = Vec::new();
    walk(k, &mut used, &mut pieces, &mut f);
}

fn walk<F: FnMut(&[Piece])>(k: usize, used: &mut [bool], pieces: &mut Vec<Piece>, f: &mut F) {
    let v = match used.iter().position(|&u| !u) {
        None => {
            f(pieces);
            return;
        }
        Some(v) => v,
    };
    used[v] = true;

    pieces.push(Piece::Isolated(v));
    walk(k, used, pieces, f);
    pieces.pop();

    let free: Vec<usize> = (v + 1..k).filter(|&u| !used[u]).collect();

    for &u in &free {
        used[u] = true;
        pieces.push(Piece::DoubleEdge(v, u));
        walk(k, used, pieces, f);
        pieces.pop();
        used[u] = false;
    }

    // odd cycles through v: choose the companion set, then each distinct
    // cyclic arrangement once (second vertex smaller than last)
    let mut m = 3;
    while m <= free.len() + 1 {
        let mut combo = Vec::with_capacity(m - 1);
        choose_companions(k, &free, 0, m - 1, &mut combo, used, pieces, f, v);
        m += 2;
    }

    used[v] = false;
}

#[allow(clippy::too_many_arguments)]
fn choose_companions<F: FnMut(&[Piece])>(
    k: usize,
    free: &[usize],
    from: usize,
    need: usize,
    combo: &mut Vec<usize>,
    used: &mut [bool],
    pieces: &mut Vec<Piece>,
    f: &mut F,
    v: usize,
) {
    if need == 0 {
        for u in combo.iter() {
            used[*u] = true;
        }
        let mut order: Vec<usize> = combo.clone();
        permute_cycles(v, &mut order, 0, used, pieces, f, k);
        for u in combo.iter() {
            used[*u] = false;
        }
        return;
    }
    for t in from..=free.len().saturating_sub(need) {
        combo.push(free[t]);
        choose_companions(k, free, t + 1, need - 1, combo, used, pieces, f, v);
        combo.pop();
    }
}

fn permute_cycles<F: FnMut(&[Piece])>(
    v: usize,
    order: &mut [usize],
    at: usize,
    used: &mut [bool],
    pieces: &mut Vec<Piece>,
    f: &mut F,
    k: usize,
) {
    let m = order.len();
    if at == m {
        // keep one of each reflected pair
        if order[0] < order[m - 1] {
            let mut cycle = Vec::with_capacity(m + 1);
            cycle.push(v);
            cycle.extend_from_slice(order);
            pieces.push(Piece::Cycle(cycle));
            walk(k, used, pieces, f);
            pieces.pop();
        }
        return;
    }
    for t in at..m {
        order.swap(at, t);
        permute_cycles(v, order, at + 1, used, pieces, f, k);
        order.swap(at, t);
    }
}

/// Materializes the full family; guarded by [`ENUMERATION_CAP`].
pub fn enumerate(k: usize) -> Result<Vec<OddCycleDecomposition>, DecompError> {
    if k > ENUMERATION_CAP {
        return Err(DecompError::TooLarge { k, cap: ENUMERATION_CAP });
    }
    let mut out = Vec::new();
    for_each_decomposition(k, |pieces| {
        out.push(OddCycleDecomposition { k, pieces: pieces.to_vec() });
    });
    Ok(out)
}

/// Family size by the recurrence: the smallest vertex is isolated, in a
/// doubled edge, or in an odd cycle of length m with (m-1)!/2 arrangements.
pub fn census(k: usize) -> u128 {
    let mut d = vec![0u128; k.max(2) + 1];
    d[0] = 1;
    d[1] = 1;
    for n in 2..=k.max(2) {
        let mut total = d[n - 1] + (n as u128 - 1) * d[n - 2];
        let mut m = 3;
        while m <= n {
            let arrangements = factorial(m as u128 - 1) / 2;
            total += binomial(n as u128 - 1, m as u128 - 1) * arrangements * d[n - m];
            m += 2;
        }
        d[n] = total;
    }
    d[k]
}

fn factorial(n: u128) -> u128 {
    (2..=n).product::<u128>().max(1)
}

fn binomial(n: u128, r: u128) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc = 1u128;
    for t in 0..r {
        acc = acc * (n - t) / (t + 1);
    }
    acc
}

/// Exhaustive minimum of [`evaluate`] over every partition. Ties go to the
/// lexicographically least piece list under [`Piece`]'s ordering.
pub fn brute_min(
    d: &DensityMatrix,
    mode: Mode,
) -> Result<(OddCycleDecomposition, f64), DecompError> {
    let k = d.k();
    if k > ENUMERATION_CAP {
        return Err(DecompError::TooLarge { k, cap: ENUMERATION_CAP });
    }
    let mut best_value = f64::INFINITY;
    let mut best: Option<Vec<Piece>> = None;
    for_each_decomposition(k, |pieces| {
        let value = eval_pieces(pieces, d, mode);
        let take = match &best {
            None => true,
            Some(cur) => {
                value < best_value || (value == best_value && pieces < cur.as_slice())
            }
        };
        if take {
            best_value = value;
            best = Some(pieces.to_vec());
        }
    });
    let pieces = best.expect("family is never empty");
    Ok((OddCycleDecomposition { k, pieces }, best_value))
}
