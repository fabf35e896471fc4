//! The pair-covering program behind the bound and its dual.
//!
//! For a density matrix `d` the log weight of a pair is
//! `p[i][j] = -ln(1 - d[i][j])`. The primal program LP2 picks exponents
//! `b[i] >= 0` minimizing `sum b[i]` subject to `b[i] + b[j] >= p[i][j]`
//! for every pair. Its dual is a fractional matching with loops: maximize
//! `sum p[i][j] * x[i][j]` subject to `y[i] + sum_j x[i][j] = 1` and
//! `x, y >= 0`. Vertex optima of the dual are half-integral, which is what
//! lets the support be read off as loops, double edges, and odd cycles.

mod simplex;

use crate::model::DensityMatrix;
use log::debug;
use simplex::{Constraint, Rel, Sense};

/// Pairwise log weights `-ln(1 - d)`, with pairs at density one tracked
/// separately because their weight is infinite.
#[derive(Debug, Clone)]
pub struct LogWeights {
    k: usize,
    p: Vec<f64>,
    infinite: Vec<(usize, usize)>,
}

impl LogWeights {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.k + j]
    }

    pub fn is_finite(&self) -> bool {
        self.infinite.is_empty()
    }

    pub fn infinite_pairs(&self) -> &[(usize, usize)] {
        &self.infinite
    }

    #[cfg(test)]
    pub(crate) fn from_pairs(k: usize, pairs: &[(usize, usize, f64)]) -> LogWeights {
        let mut p = vec![0.0; k * k];
        for &(i, j, v) in pairs {
            p[i * k + j] = v;
            p[j * k + i] = v;
        }
        LogWeights { k, p, infinite: Vec::new() }
    }
}

pub fn build_log_weights(d: &DensityMatrix) -> LogWeights {
    let k = d.k();
    let mut p = vec![0.0; k * k];
    let mut infinite = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let v = -f64::ln_1p(-d.get(i, j));
            p[i * k + j] = v;
            p[j * k + i] = v;
            if v.is_infinite() {
                infinite.push((i, j));
            }
        }
    }
    LogWeights { k, p, infinite }
}

#[derive(Debug, Clone)]
pub struct PrimalSolution {
    pub b: Vec<f64>,
    pub objective: f64,
}

/// Dual optimum: `x` is a symmetric k x k matrix of pair weights with a
/// zero diagonal, `y` holds the loop weights `1 - sum_j x[i][j]`.
#[derive(Debug, Clone)]
pub struct DualSolution {
    k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
}

impl DualSolution {
    pub fn x(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.k + j]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.y[i]
    }
}

#[derive(Debug, Clone)]
pub enum LpError {
    InfiniteWeight { i: usize, j: usize },
    Solver(String),
    DualityGap { primal: f64, dual: f64 },
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::InfiniteWeight { i, j } => {
                write!(f, "pair ({}, {}) has density one; the log weight is infinite", i + 1, j + 1)
            }
            LpError::Solver(msg) => write!(f, "lp solver failed: {}", msg),
            LpError::DualityGap { primal, dual } => {
                write!(f, "duality gap too large: primal {} vs dual {}", primal, dual)
            }
        }
    }
}

impl std::error::Error for LpError {}

fn pair_count(k: usize) -> usize {
    k * (k - 1) / 2
}

fn pair_index(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < k);
    // row-by-row walk of the strict upper triangle
    i * k - i * (i + 1) / 2 + (j - i - 1)
}

fn require_finite(w: &LogWeights) -> Result<(), LpError> {
    match w.infinite_pairs().first() {
        Some(&(i, j)) => Err(LpError::InfiniteWeight { i, j }),
        None => Ok(()),
    }
}

/// Solves LP2: minimize `sum b[i]` with `b[i] + b[j] >= p[i][j]`, `b >= 0`.
pub fn solve_lp2(w: &LogWeights) -> Result<PrimalSolution, LpError> {
    require_finite(w)?;
    let k = w.k();
    let mut constraints = Vec::with_capacity(pair_count(k));
    for i in 0..k {
        for j in (i + 1)..k {
            let mut coeffs = vec![0.0; k];
            coeffs[i] = 1.0;
            coeffs[j] = 1.0;
            constraints.push(Constraint { coeffs, rel: Rel::Ge, rhs: w.p(i, j) });
        }
    }
    let sol = simplex::solve(Sense::Min, &vec![1.0; k], &constraints)
        .map_err(|e| LpError::Solver(e.to_string()))?;
    debug!("lp2 solved in {} pivots, objective {}", sol.pivots, sol.objective);
    let b: Vec<f64> = sol.x.iter().map(|&v| v.max(0.0)).collect();
    let objective = b.iter().sum();
    Ok(PrimalSolution { b, objective })
}

/// Solves the dual: maximize `sum p[i][j] * x[i][j]` with
/// `sum_j x[i][j] <= 1` per vertex; `y` is the slack of that row.
pub fn solve_lp2_dual(w: &LogWeights) -> Result<DualSolution, LpError> {
    require_finite(w)?;
    let k = w.k();
    let np = pair_count(k);
    let mut objective = vec![0.0; np];
    for i in 0..k {
        for j in (i + 1)..k {
            objective[pair_index(k, i, j)] = w.p(i, j);
        }
    }
    let mut constraints = Vec::with_capacity(k);
    for i in 0..k {
        let mut coeffs = vec![0.0; np];
        for j in 0..k {
            if j != i {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                coeffs[pair_index(k, a, b)] = 1.0;
            }
        }
        constraints.push(Constraint { coeffs, rel: Rel::Le, rhs: 1.0 });
    }
    let sol = simplex::solve(Sense::Max, &objective, &constraints)
        .map_err(|e| LpError::Solver(e.to_string()))?;
    debug!("lp2 dual solved in {} pivots, objective {}", sol.pivots, sol.objective);

    let mut x = vec![0.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = sol.x[pair_index(k, i, j)].max(0.0);
            x[i * k + j] = v;
            x[j * k + i] = v;
        }
    }
    let mut y = vec![0.0; k];
    for i in 0..k {
        let used: f64 = (0..k).map(|j| x[i * k + j]).sum();
        y[i] = (1.0 - used).max(0.0);
    }
    Ok(DualSolution { k, x, y, objective: sol.objective })
}

/// Solves both programs and insists on a closed duality gap.
pub fn solve_certified(
    w: &LogWeights,
    tol: f64,
) -> Result<(PrimalSolution, DualSolution), LpError> {
    let primal = solve_lp2(w)?;
    let dual = solve_lp2_dual(w)?;
    let gap = (primal.objective - dual.objective).abs();
    if gap > tol * (1.0 + primal.objective.abs()) {
        return Err(LpError::DualityGap { primal: primal.objective, dual: dual.objective });
    }
    Ok((primal, dual))
}

/// Feasibility and complementary slackness diagnostics for a primal/dual
/// pair. `ok` demands every violation stay within `tol` and the gap stay
/// within `tol * (1 + |objective|)`.
#[derive(Debug, Clone)]
pub struct SlacknessReport {
    pub duality_gap: f64,
    pub max_primal_violation: f64,
    pub max_dual_violation: f64,
    pub max_slackness_violation: f64,
    pub ok: bool,
}

pub fn check_complementary_slackness(
    w: &LogWeights,
    primal: &PrimalSolution,
    dual: &DualSolution,
    tol: f64,
) -> SlacknessReport {
    let k = w.k();
    let mut primal_viol: f64 = 0.0;
    let mut dual_viol: f64 = 0.0;
    let mut slack_viol: f64 = 0.0;

    for i in 0..k {
        primal_viol = primal_viol.max(-primal.b[i]);
        let row: f64 = (0..k).map(|j| dual.x(i, j)).sum::<f64>() + dual.y(i);
        dual_viol = dual_viol.max((row - 1.0).abs());
        dual_viol = dual_viol.max(-dual.y(i));
        // y[i] > 0 forces b[i] = 0
        if dual.y(i) > tol {
            slack_viol = slack_viol.max(primal.b[i]);
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let surplus = primal.b[i] + primal.b[j] - w.p(i, j);
            primal_viol = primal_viol.max(-surplus);
            dual_viol = dual_viol.max(-dual.x(i, j));
            // x[i][j] > 0 forces the covering row to be tight
            if dual.x(i, j) > tol {
                slack_viol = slack_viol.max(surplus.abs());
            }
        }
    }

    let duality_gap = (primal.objective - dual.objective).abs();
    let ok = duality_gap <= tol * (1.0 + primal.objective.abs())
        && primal_viol <= tol
        && dual_viol <= tol
        && slack_viol <= tol;
    SlacknessReport {
        duality_gap,
        max_primal_violation: primal_viol,
        max_dual_violation: dual_viol,
        max_slackness_violation: slack_viol,
        ok,
    }
}
