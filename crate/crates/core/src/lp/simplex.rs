//! Dense-tableau two-phase simplex with Bland's anti-cycling rule. Sized
//! for the small covering/packing programs this crate generates; no
//! sparsity, no revised factorizations.

use log::trace;

const EPS_COST: f64 = 1e-10;
const EPS_PIVOT: f64 = 1e-10;
const PHASE1_FEAS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone)]
pub(crate) struct Constraint {
    pub coeffs: Vec<f64>,
    pub rel: Rel,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SimplexError {
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl std::fmt::Display for SimplexError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimplexError::Infeasible => write!(f, "infeasible"),
            SimplexError::Unbounded => write!(f, "unbounded"),
            SimplexError::IterationLimit => write!(f, "iteration limit reached"),
        }
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>, // m x (ncols + 1), last column is the rhs
    basis: Vec<usize>,
    cost: Vec<f64>, // reduced costs, length ncols
    ncols: usize,
    artificial_from: usize, // columns >= this are artificial
    pivots: usize,
    limit: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    /// Rebuilds the reduced-cost row for an extended cost vector.
    fn load_costs(&mut self, c_ext: &[f64]) {
        self.cost = c_ext.to_vec();
        for i in 0..self.rows.len() {
            let cb = c_ext[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.ncols {
                    self.cost[j] -= cb * self.rows[i][j];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j];
        let inv = 1.0 / piv;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[j];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                row[j] = 0.0;
            }
        }
        let factor = self.cost[j];
        if factor != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            self.cost[j] = 0.0;
        }
        self.basis[r] = j;
        self.pivots += 1;
    }

    /// Bland: entering column is the lowest-index improving one; the leaving
    /// row breaks ratio ties by the lowest basic-variable index.
    fn run(&mut self, allow_artificial: bool) -> Result<(), SimplexError> {
        loop {
            let limit_cols = if allow_artificial { self.ncols } else { self.artificial_from };
            let entering = (0..limit_cols).find(|&j| self.cost[j] < -EPS_COST);
            let j = match entering {
                None => return Ok(()),
                Some(j) => j,
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][j];
                if a > EPS_PIVOT {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12
                                || (ratio < br + 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let (r, _) = leave.ok_or(SimplexError::Unbounded)?;
            trace!(
                "pivot {}: col {} enters, row {} (var {}) leaves",
                self.pivots,
                j,
                r,
                self.basis[r]
            );
            self.pivot(r, j);
            if self.pivots > self.limit {
                return Err(SimplexError::IterationLimit);
            }
        }
    }
}

/// Solves `sense (c . x)` subject to `constraints`, all variables >= 0.
pub(crate) fn solve(
    sense: Sense,
    c: &[f64],
    constraints: &[Constraint],
) -> Result<Solution, SimplexError> {
    let n = c.len();
    let m = constraints.len();
    if m == 0 {
        // with x >= 0 and no rows the origin is optimal unless some
        // coefficient pushes the objective without limit
        let improving = match sense {
            Sense::Min => c.iter().any(|&v| v < -EPS_COST),
            Sense::Max => c.iter().any(|&v| v > EPS_COST),
        };
        if improving {
            return Err(SimplexError::Unbounded);
        }
        return Ok(Solution { x: vec![0.0; n], objective: 0.0, pivots: 0 });
    }

    // orient every row to a nonnegative rhs
    let mut rows: Vec<(Vec<f64>, Rel, f64)> = constraints
        .iter()
        .map(|cst| {
            assert_eq!(cst.coeffs.len(), n, "constraint arity");
            (cst.coeffs.clone(), cst.rel, cst.rhs)
        })
        .collect();
    for (coeffs, rel, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            for v in coeffs.iter_mut() {
                *v = -*v;
            }
            *rhs = -*rhs;
            *rel = match *rel {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
        }
    }

    let n_slack = rows.iter().filter(|(_, rel, _)| *rel != Rel::Eq).count();
    let n_art = rows.iter().filter(|(_, rel, _)| *rel != Rel::Le).count();
    let ncols = n + n_slack + n_art;
    let artificial_from = n + n_slack;

    let mut tab = Tableau {
        rows: vec![vec![0.0; ncols + 1]; m],
        basis: vec![0; m],
        cost: vec![0.0; ncols],
        ncols,
        artificial_from,
        pivots: 0,
        limit: 10_000 + 20 * (m + ncols),
    };

    let mut next_slack = n;
    let mut next_art = artificial_from;
    for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        tab.rows[i][..n].copy_from_slice(coeffs);
        tab.rows[i][ncols] = *rhs;
        match rel {
            Rel::Le => {
                tab.rows[i][next_slack] = 1.0;
                tab.basis[i] = next_slack;
                next_slack += 1;
            }
            Rel::Ge => {
                tab.rows[i][next_slack] = -1.0;
                next_slack += 1;
                tab.rows[i][next_art] = 1.0;
                tab.basis[i] = next_art;
                next_art += 1;
            }
            Rel::Eq => {
                tab.rows[i][next_art] = 1.0;
                tab.basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    if n_art > 0 {
        let mut phase1 = vec![0.0; ncols];
        for j in artificial_from..ncols {
            phase1[j] = 1.0;
        }
        tab.load_costs(&phase1);
        tab.run(true)?;
        let infeasibility: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= artificial_from)
            .map(|i| tab.rhs(i))
            .sum();
        if infeasibility > PHASE1_FEAS {
            return Err(SimplexError::Infeasible);
        }
        // drive leftover artificials out of the basis where possible;
        // rows with no eligible pivot are redundant and stay parked at zero
        for i in 0..m {
            if tab.basis[i] >= artificial_from {
                if let Some(j) =
                    (0..artificial_from).find(|&j| tab.rows[i][j].abs() > EPS_PIVOT)
                {
                    tab.pivot(i, j);
                }
            }
        }
    }

    let sign = match sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut c_ext = vec![0.0; ncols];
    for (j, &v) in c.iter().enumerate() {
        c_ext[j] = sign * v;
    }
    tab.load_costs(&c_ext);
    tab.run(false)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    trace!("simplex done: {} pivots, objective {}", tab.pivots, objective);
    Ok(Solution { x, objective, pivots: tab.pivots })
}
