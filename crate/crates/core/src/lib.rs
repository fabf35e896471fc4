//! Sharp multiplicative bounds on the number of independent transversals in
//! a multipartite graph with prescribed pairwise edge densities, together
//! with the machinery to certify them: partitions of the parts into odd
//! cycles and doubled edges, the covering/packing linear-program pair whose
//! optimum picks out the best partition, support-graph canonicalization,
//! matching extremal constructions, and exact or sampled transversal
//! counters.
//!
//! The crate is organized in pipeline order:
//!
//! * [`model`]: density matrices, part specs, bit-row multipartite graphs
//! * [`decomp`]: odd-cycle partitions, their weights, exhaustive minimization
//! * [`lp`]: the covering LP, its packing dual, certified solves
//! * [`canonicalize`]: dual support rewrites down to decomposition form
//! * [`bounds`]: the headline coefficient plus classical comparison bounds
//! * [`construct`]: seeded extremal instances meeting the bound
//! * [`count`]: exact bitset counting and seeded sampling

pub mod bitset;
pub mod bounds;
pub mod canonicalize;
pub mod construct;
pub mod count;
pub mod decomp;
pub mod lp;
pub mod model;

pub use bounds::{main_bound, BoundReport, Method};
pub use decomp::{OddCycleDecomposition, Piece};
pub use model::{DensityMatrix, Frac, Mode, MultipartiteGraph, PartSpec};

/// Default numeric tolerance for LP certification, support thresholds, and
/// feasibility checks. Overridable per call and via the CLI.
pub const DEFAULT_TOL: f64 = 1e-9;
