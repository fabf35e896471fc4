//! Rewrites a dual optimum's support into loops of weight one, edges of
//! weight one, and odd cycles of weight one half.
//!
//! The dual of the pair-covering program assigns each vertex a loop weight
//! and each pair an edge weight, with loop plus incident edges summing to
//! one at every vertex. Vertex optima are half-integral, but ties can leave
//! the support messier than the decomposition readers want. The moves here
//! shift weight along closed patterns that keep every vertex sum fixed and
//! keep the objective fixed up to tolerance, so a genuine optimum stays
//! optimal while its support collapses to the canonical shape. A pattern
//! that would improve the objective proves the input was not optimal, which
//! is reported rather than repaired.

use crate::decomp::{DecompError, OddCycleDecomposition, Piece};
use crate::lp::{DualSolution, LogWeights, PrimalSolution};
use log::{debug, trace};

const IDENTITY_SLACK: f64 = 1e-6;
const SHAPE_SLACK: f64 = 1e-7;

#[derive(Debug, Clone)]
pub enum CanonError {
    BadWeight { i: usize, j: usize, value: f64 },
    DegreeIdentity { vertex: usize, degree: f64 },
    OptimalityViolation { delta: f64 },
    NonConvergence { moves: usize },
    NotCanonical(String),
    InfeasibleRecovery { i: usize, j: usize, deficit: f64 },
}

impl std::fmt::Display for CanonError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CanonError::BadWeight { i, j, value } => {
                write!(f, "weight ({}, {}) is {}", i + 1, j + 1, value)
            }
            CanonError::DegreeIdentity { vertex, degree } => {
                write!(f, "vertex {} has weight sum {}, expected 1", vertex + 1, degree)
            }
            CanonError::OptimalityViolation { delta } => {
                write!(f, "support admits an improving move of rate {}; input was not optimal", delta)
            }
            CanonError::NonConvergence { moves } => {
                write!(f, "canonicalization did not settle after {} moves", moves)
            }
            CanonError::NotCanonical(msg) => write!(f, "support is not canonical: {}", msg),
            CanonError::InfeasibleRecovery { i, j, deficit } => {
                if i == j {
                    write!(f, "recovered exponent at vertex {} is negative by {}", i + 1, deficit)
                } else {
                    write!(
                        f,
                        "recovered exponents miss pair ({}, {}) by {}",
                        i + 1,
                        j + 1,
                        deficit
                    )
                }
            }
        }
    }
}

impl std::error::Error for CanonError {}

#[derive(Debug, Clone, Copy, Default)]
pub struct CanonStats {
    pub moves: usize,
    pub max_delta: f64,
}

/// Entries are (i, j, coefficient) with i <= j; i == j addresses a loop.
type Pattern = Vec<(usize, usize, f64)>;

/// Symmetric weight matrix over the parts, loops on the diagonal. Every
/// vertex keeps loop weight plus incident edge weights equal to one.
#[derive(Debug, Clone)]
pub struct QGraph {
    k: usize,
    w: Vec<f64>,
    tol: f64,
}

pub fn support_graph(dual: &DualSolution, k: usize, tol: f64) -> Result<QGraph, CanonError> {
    let mut w = vec![0.0; k * k];
    for i in 0..k {
        w[i * k + i] = dual.y(i);
        for j in 0..k {
            if j != i {
                w[i * k + j] = dual.x(i, j);
            }
        }
    }
    QGraph::new(k, w, tol)
}

impl QGraph {
    pub fn new(k: usize, mut w: Vec<f64>, tol: f64) -> Result<QGraph, CanonError> {
        assert!(k >= 1 && w.len() == k * k, "weight matrix shape");
        assert!(tol > 0.0, "tolerance must be positive");
        for i in 0..k {
            for j in i..k {
                let a = w[i * k + j];
                let b = w[j * k + i];
                if !a.is_finite() || !b.is_finite() || (a - b).abs() > IDENTITY_SLACK {
                    return Err(CanonError::BadWeight { i, j, value: a });
                }
                let v = if a < 0.0 {
                    if a < -IDENTITY_SLACK {
                        return Err(CanonError::BadWeight { i, j, value: a });
                    }
                    0.0
                } else {
                    a
                };
                w[i * k + j] = v;
                w[j * k + i] = v;
            }
        }
        let g = QGraph { k, w, tol };
        for v in 0..k {
            let deg = g.degree(v);
            if (deg - 1.0).abs() > IDENTITY_SLACK.max(tol) {
                return Err(CanonError::DegreeIdentity { vertex: v, degree: deg });
            }
        }
        Ok(g)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.k + j]
    }

    /// Loop weight plus incident edge weights; invariantly one.
    pub fn degree(&self, v: usize) -> f64 {
        (0..self.k).map(|j| self.weight(v, j)).sum()
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.w[i * self.k + j] = v;
        self.w[j * self.k + i] = v;
    }

    fn clamp_dust(&mut self) {
        for i in 0..self.k {
            for j in i..self.k {
                let v = self.weight(i, j);
                if v != 0.0 && v.abs() <= self.tol {
                    self.set(i, j, 0.0);
                }
            }
        }
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.k];
        for i in 0..self.k {
            for j in 0..self.k {
                if j != i && self.weight(i, j) > 0.0 {
                    adj[i].push(j);
                }
            }
        }
        adj
    }

    fn component_ids(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut id = vec![usize::MAX; self.k];
        let mut next = 0;
        for s in 0..self.k {
            if id[s] != usize::MAX {
                continue;
            }
            id[s] = next;
            let mut queue = vec![s];
            while let Some(u) = queue.pop() {
                for &v in &adj[u] {
                    if id[v] == usize::MAX {
                        id[v] = next;
                        queue.push(v);
                    }
                }
            }
            next += 1;
        }
        id
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let id = self.component_ids();
        let count = id.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut comps = vec![Vec::new(); count];
        for v in 0..self.k {
            comps[id[v]].push(v);
        }
        comps
    }

    /// Multi-source shortest path to the target set, optionally skipping one
    /// vertex. Returns the full vertex list from a source to the first
    /// target reached; a source inside the target set yields a single
    /// vertex. Neighbor order makes the result deterministic.
    fn bfs_path(
        &self,
        sources: &[usize],
        targets: &[bool],
        forbidden: Option<usize>,
    ) -> Option<Vec<usize>> {
        for &s in sources {
            if targets[s] {
                return Some(vec![s]);
            }
        }
        let adj = self.adjacency();
        let mut prev = vec![usize::MAX; self.k];
        let mut seen = vec![false; self.k];
        let mut queue = std::collections::VecDeque::new();
        for &s in sources {
            if Some(s) != forbidden && !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if Some(v) == forbidden || seen[v] {
                    continue;
                }
                seen[v] = true;
                prev[v] = u;
                if targets[v] {
                    let mut path = vec![v];
                    let mut cur = v;
                    while prev[cur] != usize::MAX {
                        cur = prev[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(v);
            }
        }
        None
    }

    /// Biconnected components of the edge support, as edge lists sorted for
    /// determinism. Loops are not edges here.
    fn blocks(&self) -> Vec<Vec<(usize, usize)>> {
        struct State<'a> {
            adj: &'a [Vec<usize>],
            disc: Vec<usize>,
            low: Vec<usize>,
            timer: usize,
            stack: Vec<(usize, usize)>,
            out: Vec<Vec<(usize, usize)>>,
        }
        fn dfs(st: &mut State, u: usize, parent: usize) {
            st.disc[u] = st.timer;
            st.low[u] = st.timer;
            st.timer += 1;
            for idx in 0..st.adj[u].len() {
                let v = st.adj[u][idx];
                if v == parent {
                    continue;
                }
                if st.disc[v] == usize::MAX {
                    st.stack.push((u, v));
                    dfs(st, v, u);
                    if st.low[v] < st.low[u] {
                        st.low[u] = st.low[v];
                    }
                    if st.low[v] >= st.disc[u] {
                        let mut block = Vec::new();
                        while let Some(e) = st.stack.pop() {
                            block.push((e.0.min(e.1), e.0.max(e.1)));
                            if e == (u, v) {
                                break;
                            }
                        }
                        block.sort_unstable();
                        st.out.push(block);
                    }
                } else if st.disc[v] < st.disc[u] {
                    st.stack.push((u, v));
                    if st.disc[v] < st.low[u] {
                        st.low[u] = st.disc[v];
                    }
                }
            }
        }
        let adj = self.adjacency();
        let mut st = State {
            adj: &adj,
            disc: vec![usize::MAX; self.k],
            low: vec![0; self.k],
            timer: 0,
            stack: Vec::new(),
            out: Vec::new(),
        };
        for s in 0..self.k {
            if st.disc[s] == usize::MAX && !adj[s].is_empty() {
                dfs(&mut st, s, usize::MAX);
            }
        }
        st.out.sort();
        st.out
    }

    /// Finds an even cycle inside a block that is neither a single edge nor
    /// an odd cycle. Such a block always contains one: if a fundamental
    /// cycle is odd, any chord splits it into two cycles of opposite
    /// parity, and otherwise an ear through an off-cycle vertex does.
    fn even_cycle_in_block(&self, block: &[(usize, usize)]) -> Vec<usize> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.k];
        for &(a, b) in block {
            adj[a].push(b);
            adj[b].push(a);
        }
        for row in adj.iter_mut() {
            row.sort_unstable();
        }
        let root = block.iter().map(|&(a, _)| a).min().unwrap();

        // depth-first tree, so every non-tree edge joins a vertex to one of
        // its ancestors and closes a fundamental cycle along parents
        let mut parent = vec![usize::MAX; self.k];
        let mut depth = vec![usize::MAX; self.k];
        let mut visited = vec![false; self.k];
        let mut stack = vec![(root, usize::MAX, 0usize)];
        while let Some((u, par, d)) = stack.pop() {
            if visited[u] {
                continue;
            }
            visited[u] = true;
            parent[u] = par;
            depth[u] = d;
            for &v in adj[u].iter().rev() {
                if !visited[v] {
                    stack.push((v, u, d + 1));
                }
            }
        }

        let is_tree_edge = |a: usize, b: usize| parent[a] == b || parent[b] == a;
        let mut first_odd: Option<Vec<usize>> = None;
        for &(a, b) in block {
            if is_tree_edge(a, b) {
                continue;
            }
            // non-tree edges of a DFS tree join a vertex to an ancestor
            let (mut lo, hi) = if depth[a] >= depth[b] { (a, b) } else { (b, a) };
            let mut path = vec![lo];
            while lo != hi {
                lo = parent[lo];
                path.push(lo);
            }
            if path.len() % 2 == 0 {
                return path;
            }
            if first_odd.is_none() {
                first_odd = Some(path);
            }
        }

        let cyc = first_odd.expect("a bad block has a cycle");
        let m = cyc.len();
        let mut pos = vec![usize::MAX; self.k];
        for (idx, &v) in cyc.iter().enumerate() {
            pos[v] = idx;
        }
        let on_cycle: Vec<bool> = (0..self.k).map(|v| pos[v] != usize::MAX).collect();
        let cycle_edge = |a: usize, b: usize| {
            let d = (pos[a] + m - pos[b]) % m;
            d == 1 || d == m - 1
        };
        let arc = |from: usize, to: usize, forward: bool| -> Vec<usize> {
            // vertices strictly between two cycle positions
            let mut out = Vec::new();
            let mut idx = pos[from];
            loop {
                idx = if forward { (idx + 1) % m } else { (idx + m - 1) % m };
                if idx == pos[to] {
                    break;
                }
                out.push(cyc[idx]);
            }
            out
        };

        for &(a, b) in block {
            if on_cycle[a] && on_cycle[b] && !cycle_edge(a, b) {
                // chord: the two arcs close cycles of opposite parity
                let fwd = (pos[b] + m - pos[a]) % m;
                let mut out = vec![a];
                if (fwd + 1).is_multiple_of(2) {
                    out.extend(arc(a, b, true));
                } else {
                    out.extend(arc(a, b, false));
                }
                out.push(b);
                return out;
            }
        }

        for &(a, b) in block {
            let (anchor, off) = if on_cycle[a] && !on_cycle[b] {
                (a, b)
            } else if on_cycle[b] && !on_cycle[a] {
                (b, a)
            } else {
                continue;
            };
            // the block is two-connected, so the off-cycle side reaches the
            // cycle again without the anchor
            let tail = self
                .bfs_path(&[off], &on_cycle, Some(anchor))
                .expect("ear must reattach");
            let t = *tail.last().unwrap();
            let ear_edges = tail.len(); // anchor-off edge plus tail edges
            let fwd = (pos[anchor] + m - pos[t]) % m;
            let mut out = vec![anchor];
            out.extend(tail.iter().copied());
            if (ear_edges + fwd).is_multiple_of(2) {
                out.extend(arc(t, anchor, true));
            } else {
                out.extend(arc(t, anchor, false));
            }
            return out;
        }
        unreachable!("bad block admits a chord or an ear");
    }

    /// Applies one weight-shifting move. The sign variant is chosen so the
    /// objective does not drop; a variant that would raise it beyond
    /// tolerance means the input was not optimal.
    fn apply_move(&mut self, pattern: &Pattern, w: &LogWeights) -> Result<f64, CanonError> {
        let mut delta_unit = 0.0;
        let mut scale = 1.0;
        for &(i, j, c) in pattern {
            if i != j {
                delta_unit += c * w.p(i, j);
                scale += w.p(i, j).abs() * c.abs();
            }
        }
        if delta_unit.abs() > self.tol * scale {
            return Err(CanonError::OptimalityViolation { delta: delta_unit });
        }

        let step_limit = |sign: f64| -> f64 {
            let mut eps = f64::INFINITY;
            for &(i, j, c) in pattern {
                if sign * c < 0.0 {
                    eps = eps.min(self.weight(i, j) / c.abs());
                }
            }
            eps
        };
        // the base orientation always has its shrinking entries inside the
        // support, so it is applicable; flip only to chase a nonnegative
        // objective rate
        let mut sign = 1.0;
        if delta_unit < 0.0 {
            let flipped = step_limit(-1.0);
            if flipped.is_finite() && flipped > 0.0 {
                sign = -1.0;
            }
        }
        let eps = step_limit(sign);
        debug_assert!(eps.is_finite() && eps > 0.0, "move must have a positive step");

        #[cfg(debug_assertions)]
        let (deg_before, obj_before): (Vec<f64>, f64) =
            ((0..self.k).map(|v| self.degree(v)).collect(), self.objective(w));

        for &(i, j, c) in pattern {
            let v = self.weight(i, j) + sign * c * eps;
            self.set(i, j, if v.abs() <= self.tol { 0.0 } else { v });
        }
        let applied = sign * delta_unit * eps;
        trace!("move of {} entries, step {}, objective drift {}", pattern.len(), eps, applied);

        #[cfg(debug_assertions)]
        {
            for v in 0..self.k {
                debug_assert!(
                    (self.degree(v) - deg_before[v]).abs() < 1e-7,
                    "vertex sum must be preserved"
                );
            }
            let obj_after = self.objective(w);
            debug_assert!(
                (obj_after - obj_before - applied).abs() <= 1e-7 * (1.0 + obj_before.abs()),
                "objective drift must match the move rate"
            );
        }
        Ok(applied)
    }

    #[cfg(debug_assertions)]
    fn objective(&self, w: &LogWeights) -> f64 {
        let mut obj = 0.0;
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                obj += self.weight(i, j) * w.p(i, j);
            }
        }
        obj
    }

    fn find_move(&self) -> Option<Pattern> {
        let loops: Vec<usize> = (0..self.k).filter(|&v| self.weight(v, v) > 0.0).collect();

        // two loops merge into an edge between them
        if loops.len() >= 2 {
            let (i, j) = (loops[0], loops[1]);
            return Some(vec![(i, i, -1.0), (j, j, -1.0), (i, j, 1.0)]);
        }

        let blocks = self.blocks();
        let mut odd_cycles: Vec<Vec<usize>> = Vec::new();
        for block in &blocks {
            match classify_block(block) {
                BlockShape::Edge => {}
                BlockShape::OddCycle(order) => odd_cycles.push(order),
                BlockShape::Bad => {
                    // an even cycle alternates weight until an edge empties
                    let cycle = self.even_cycle_in_block(block);
                    return Some(cycle_pattern(&cycle, 1.0));
                }
            }
        }

        // two odd cycles in one component cancel through the path (possibly
        // a single shared vertex) between them
        let comp = self.component_ids();
        for a in 0..odd_cycles.len() {
            for b in (a + 1)..odd_cycles.len() {
                if comp[odd_cycles[a][0]] != comp[odd_cycles[b][0]] {
                    continue;
                }
                let mut in_b = vec![false; self.k];
                for &v in &odd_cycles[b] {
                    in_b[v] = true;
                }
                let path = self
                    .bfs_path(&odd_cycles[a], &in_b, None)
                    .expect("same component");
                let va = path[0];
                let vb = *path.last().unwrap();
                let path_edges = path.len() - 1;
                let mut pat = cycle_pattern(&rotate_to(&odd_cycles[a], va), 1.0);
                pat.extend(path_pattern(&path, -1.0));
                let s_b = if path_edges.is_multiple_of(2) { -1.0 } else { 1.0 };
                pat.extend(cycle_pattern(&rotate_to(&odd_cycles[b], vb), s_b));
                return Some(pat);
            }
        }

        // a loop sharing a component with an odd cycle drains along the
        // connecting path
        if let Some(&u) = loops.first() {
            for order in &odd_cycles {
                if comp[order[0]] != comp[u] {
                    continue;
                }
                let mut on_cycle = vec![false; self.k];
                for &v in order {
                    on_cycle[v] = true;
                }
                let path = self.bfs_path(&[u], &on_cycle, None).expect("same component");
                let v = *path.last().unwrap();
                let path_edges = path.len() - 1;
                let mut pat = vec![(u, u, -2.0)];
                pat.extend(path_pattern(&path, 1.0));
                let s_c = if path_edges.is_multiple_of(2) { 1.0 } else { -1.0 };
                pat.extend(cycle_pattern(&rotate_to(order, v), s_c));
                return Some(pat);
            }
        }

        None
    }

    /// Runs moves until none applies. The loop count never grows and every
    /// move either removes a loop or removes an edge without adding one, so
    /// the cap is far above what any valid input can use.
    pub fn canonicalize(&mut self, w: &LogWeights) -> Result<CanonStats, CanonError> {
        assert_eq!(w.k(), self.k, "weights must match the graph");
        let cap = 10 * self.k * self.k;
        let mut stats = CanonStats::default();
        self.clamp_dust();
        while let Some(pattern) = self.find_move() {
            if stats.moves >= cap {
                return Err(CanonError::NonConvergence { moves: stats.moves });
            }
            let applied = self.apply_move(&pattern, w)?;
            stats.moves += 1;
            if applied.abs() > stats.max_delta {
                stats.max_delta = applied.abs();
            }
            self.clamp_dust();
        }
        debug!("canonical after {} moves, largest drift {}", stats.moves, stats.max_delta);
        Ok(stats)
    }

    /// Reads the support as decomposition pieces: weight-one loops are
    /// isolated vertices, weight-one edges are double edges, and odd cycles
    /// must sit at one half throughout.
    pub fn to_decomposition(&self) -> Result<OddCycleDecomposition, CanonError> {
        let slack = self.tol.max(SHAPE_SLACK);
        let mut pieces = Vec::new();
        for comp in self.components() {
            if comp.len() == 1 {
                let v = comp[0];
                let lw = self.weight(v, v);
                if (lw - 1.0).abs() <= slack {
                    pieces.push(Piece::Isolated(v));
                    continue;
                }
                return Err(CanonError::NotCanonical(format!(
                    "vertex {} stands alone with loop weight {}",
                    v + 1,
                    lw
                )));
            }
            if let Some(&v) = comp.iter().find(|&&v| self.weight(v, v) > 0.0) {
                return Err(CanonError::NotCanonical(format!(
                    "vertex {} keeps a loop inside a component of size {}",
                    v + 1,
                    comp.len()
                )));
            }
            let mut edges = Vec::new();
            for (ai, &a) in comp.iter().enumerate() {
                for &b in comp.iter().skip(ai + 1) {
                    if self.weight(a, b) > 0.0 {
                        edges.push((a, b));
                    }
                }
            }
            if comp.len() == 2 && edges.len() == 1 {
                let (a, b) = edges[0];
                if (self.weight(a, b) - 1.0).abs() <= slack {
                    pieces.push(Piece::DoubleEdge(a, b));
                    continue;
                }
                return Err(CanonError::NotCanonical(format!(
                    "edge ({}, {}) has weight {}",
                    a + 1,
                    b + 1,
                    self.weight(a, b)
                )));
            }
            let cycle_like = edges.len() == comp.len()
                && comp.len() % 2 == 1
                && comp.len() >= 3
                && edges.iter().all(|&(a, b)| (self.weight(a, b) - 0.5).abs() <= slack);
            if cycle_like {
                if let Some(order) = walk_cycle(self.k, &edges) {
                    pieces.push(Piece::Cycle(order));
                    continue;
                }
            }
            return Err(CanonError::NotCanonical(format!(
                "component {:?} is neither an edge nor an odd half cycle",
                comp.iter().map(|v| v + 1).collect::<Vec<_>>()
            )));
        }
        OddCycleDecomposition::new(self.k, pieces)
            .map_err(|e: DecompError| CanonError::NotCanonical(e.to_string()))
    }
}

enum BlockShape {
    Edge,
    OddCycle(Vec<usize>),
    Bad,
}

fn classify_block(block: &[(usize, usize)]) -> BlockShape {
    if block.len() == 1 {
        return BlockShape::Edge;
    }
    let mut verts: Vec<usize> = block.iter().flat_map(|&(a, b)| [a, b]).collect();
    verts.sort_unstable();
    verts.dedup();
    if verts.len() != block.len() {
        return BlockShape::Bad;
    }
    let top = *verts.last().unwrap();
    match walk_cycle(top + 1, block) {
        Some(order) if order.len() % 2 == 1 => BlockShape::OddCycle(order),
        _ => BlockShape::Bad,
    }
}

/// Orders the vertices of an edge set that forms a single cycle, smallest
/// vertex first, smaller neighbor next. None if it is not one cycle.
fn walk_cycle(k: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); k];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for row in adj.iter_mut() {
        row.sort_unstable();
        if !row.is_empty() && row.len() != 2 {
            return None;
        }
    }
    let start = edges.iter().map(|&(a, _)| a).min()?;
    let mut order = vec![start];
    let mut prev = start;
    let mut cur = adj[start][0];
    while cur != start {
        order.push(cur);
        let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
        prev = cur;
        cur = next;
    }
    if order.len() == edges.len() {
        Some(order)
    } else {
        None
    }
}

fn rotate_to(order: &[usize], anchor: usize) -> Vec<usize> {
    let idx = order.iter().position(|&v| v == anchor).expect("anchor on cycle");
    let mut out = order.to_vec();
    out.rotate_left(idx);
    out
}

/// Alternating +-sign coefficients around a cycle starting at its first
/// vertex. Odd cycles concentrate a net 2*sign at that vertex; even cycles
/// cancel everywhere.
fn cycle_pattern(order: &[usize], sign: f64) -> Pattern {
    let m = order.len();
    (0..m)
        .map(|t| {
            let a = order[t];
            let b = order[(t + 1) % m];
            let c = sign * if t % 2 == 0 { 1.0 } else { -1.0 };
            (a.min(b), a.max(b), c)
        })
        .collect()
}

/// Alternating +-2 coefficients along a path, `lead * 2` on its first edge.
fn path_pattern(path: &[usize], lead: f64) -> Pattern {
    (0..path.len().saturating_sub(1))
        .map(|t| {
            let a = path[t];
            let b = path[t + 1];
            let c = 2.0 * lead * if t % 2 == 0 { 1.0 } else { -1.0 };
            (a.min(b), a.max(b), c)
        })
        .collect()
}

/// Rebuilds covering exponents from a decomposition by making its edges
/// tight: a double edge splits its weight evenly and an odd cycle is solved
/// by alternating sums. The result can fail global feasibility even for an
/// optimal decomposition when optima are tied, so callers must be ready to
/// fall back to a solved optimum.
pub fn recover_primal(
    h: &OddCycleDecomposition,
    w: &LogWeights,
    tol: f64,
) -> Result<PrimalSolution, CanonError> {
    assert_eq!(h.k(), w.k(), "decomposition must match the weights");
    let k = w.k();
    let mut b = vec![0.0; k];
    for piece in h.pieces() {
        match piece {
            Piece::Isolated(_) => {}
            Piece::DoubleEdge(i, j) => {
                let half = w.p(*i, *j) / 2.0;
                b[*i] = half;
                b[*j] = half;
            }
            Piece::Cycle(vs) => {
                let m = vs.len();
                let mut alt = 0.0;
                for t in 0..m {
                    let p = w.p(vs[t], vs[(t + 1) % m]);
                    alt += if t % 2 == 0 { p } else { -p };
                }
                b[vs[0]] = alt / 2.0;
                for t in 0..(m - 1) {
                    b[vs[t + 1]] = w.p(vs[t], vs[t + 1]) - b[vs[t]];
                }
            }
        }
    }
    let slack = tol.max(1e-12);
    for (v, bv) in b.iter_mut().enumerate() {
        if *bv < -slack {
            return Err(CanonError::InfeasibleRecovery { i: v, j: v, deficit: -*bv });
        }
        if *bv < 0.0 {
            *bv = 0.0;
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let deficit = w.p(i, j) - b[i] - b[j];
            if deficit > slack * (1.0 + w.p(i, j).abs()) {
                return Err(CanonError::InfeasibleRecovery { i, j, deficit });
            }
        }
    }
    let objective = b.iter().sum();
    Ok(PrimalSolution { b, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::evaluate;
    use crate::lp::{build_log_weights, solve_lp2_dual};
    use crate::model::{DensityMatrix, Mode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn graph(k: usize, loops: &[(usize, f64)], edges: &[(usize, usize, f64)]) -> QGraph {
        let mut w = vec![0.0; k * k];
        for &(v, wt) in loops {
            w[v * k + v] = wt;
        }
        for &(a, b, wt) in edges {
            w[a * k + b] = wt;
            w[b * k + a] = wt;
        }
        QGraph::new(k, w, TOL).unwrap()
    }

    fn uniform_weights(k: usize) -> LogWeights {
        let mut pairs = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                pairs.push((i, j, 1.0));
            }
        }
        LogWeights::from_pairs(k, &pairs)
    }

    fn pieces(g: &QGraph) -> Vec<Piece> {
        g.to_decomposition().unwrap().pieces().to_vec()
    }

    #[test]
    fn rejects_broken_vertex_sum() {
        let mut w = vec![0.0; 4];
        w[0] = 0.4;
        w[3] = 1.0;
        match QGraph::new(2, w, TOL) {
            Err(CanonError::DegreeIdentity { vertex: 0, .. }) => {}
            other => panic!("expected degree failure, got {:?}", other),
        }
    }

    #[test]
    fn triangle_at_half_is_already_canonical() {
        let mut g = graph(3, &[], &[(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.5)]);
        let stats = g.canonicalize(&uniform_weights(3)).unwrap();
        assert_eq!(stats.moves, 0);
        assert_eq!(pieces(&g), vec![Piece::Cycle(vec![0, 1, 2])]);
    }

    #[test]
    fn four_cycle_resolves_to_a_matching() {
        let mut g = graph(4, &[], &[(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5), (0, 3, 0.5)]);
        let stats = g.canonicalize(&uniform_weights(4)).unwrap();
        assert_eq!(stats.moves, 1);
        assert_eq!(pieces(&g), vec![Piece::DoubleEdge(0, 1), Piece::DoubleEdge(2, 3)]);
    }

    #[test]
    fn two_loops_merge_when_their_pair_has_no_weight() {
        let mut g = graph(2, &[(0, 1.0), (1, 1.0)], &[]);
        g.canonicalize(&LogWeights::from_pairs(2, &[])).unwrap();
        assert_eq!(pieces(&g), vec![Piece::DoubleEdge(0, 1)]);
    }

    #[test]
    fn loops_on_a_weighted_pair_prove_non_optimality() {
        let mut g = graph(2, &[(0, 1.0), (1, 1.0)], &[]);
        let err = g.canonicalize(&LogWeights::from_pairs(2, &[(0, 1, 0.5)])).unwrap_err();
        match err {
            CanonError::OptimalityViolation { delta } => assert!((delta - 0.5).abs() < 1e-12),
            other => panic!("expected optimality violation, got {:?}", other),
        }
    }

    #[test]
    fn path_with_end_loops_closes_into_a_triangle() {
        let w = LogWeights::from_pairs(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let mut g = graph(3, &[(0, 0.5), (2, 0.5)], &[(0, 1, 0.5), (1, 2, 0.5)]);
        g.canonicalize(&w).unwrap();
        assert_eq!(pieces(&g), vec![Piece::Cycle(vec![0, 1, 2])]);
    }

    #[test]
    fn pentagon_with_a_loop_rebalances_to_half() {
        let w = LogWeights::from_pairs(
            5,
            &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 2.0), (3, 4, 2.0), (0, 4, 1.0)],
        );
        let mut g = graph(
            5,
            &[(0, 0.2)],
            &[(0, 1, 0.4), (1, 2, 0.6), (2, 3, 0.4), (3, 4, 0.6), (0, 4, 0.4)],
        );
        g.canonicalize(&w).unwrap();
        assert_eq!(pieces(&g), vec![Piece::Cycle(vec![0, 1, 2, 3, 4])]);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)] {
            assert!((g.weight(a, b) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn triangles_sharing_a_vertex_split_into_triangle_and_edge() {
        let mut g = graph(
            5,
            &[],
            &[
                (0, 1, 0.25),
                (0, 2, 0.25),
                (1, 2, 0.75),
                (0, 3, 0.25),
                (0, 4, 0.25),
                (3, 4, 0.75),
            ],
        );
        g.canonicalize(&uniform_weights(5)).unwrap();
        assert_eq!(
            pieces(&g),
            vec![Piece::Cycle(vec![0, 1, 2]), Piece::DoubleEdge(3, 4)]
        );
    }

    #[test]
    fn path_joined_triangles_leave_one_triangle_and_two_edges() {
        let mut g = graph(
            7,
            &[],
            &[
                (0, 1, 0.25),
                (0, 2, 0.25),
                (1, 2, 0.75),
                (0, 3, 0.5),
                (3, 4, 0.5),
                (4, 5, 0.25),
                (4, 6, 0.25),
                (5, 6, 0.75),
            ],
        );
        g.canonicalize(&uniform_weights(7)).unwrap();
        assert_eq!(
            pieces(&g),
            vec![
                Piece::Cycle(vec![0, 1, 2]),
                Piece::DoubleEdge(3, 4),
                Piece::DoubleEdge(5, 6)
            ]
        );
    }

    #[test]
    fn all_loops_pair_off() {
        let mut g = graph(4, &[(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)], &[]);
        g.canonicalize(&LogWeights::from_pairs(4, &[])).unwrap();
        assert_eq!(pieces(&g), vec![Piece::DoubleEdge(0, 1), Piece::DoubleEdge(2, 3)]);
    }

    #[test]
    fn odd_loop_count_leaves_an_isolated_vertex() {
        let mut g = graph(3, &[(0, 1.0), (1, 1.0), (2, 1.0)], &[]);
        g.canonicalize(&LogWeights::from_pairs(3, &[])).unwrap();
        assert_eq!(pieces(&g), vec![Piece::DoubleEdge(0, 1), Piece::Isolated(2)]);
    }

    #[test]
    fn dual_support_of_uniform_triangle_is_the_triangle() {
        let d = DensityMatrix::uniform(3, 0.75).unwrap();
        let w = build_log_weights(&d);
        let dual = solve_lp2_dual(&w).unwrap();
        let mut g = support_graph(&dual, 3, TOL).unwrap();
        let stats = g.canonicalize(&w).unwrap();
        assert_eq!(stats.moves, 0);
        assert_eq!(pieces(&g), vec![Piece::Cycle(vec![0, 1, 2])]);
    }

    #[test]
    fn random_duals_always_reach_canonical_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..80 {
            let k = 2 + (trial % 7);
            let mut rows = vec![vec![0.0; k]; k];
            for i in 0..k {
                for j in (i + 1)..k {
                    let d: f64 = rng.random_range(0.0..0.9);
                    rows[i][j] = d;
                    rows[j][i] = d;
                }
            }
            let d = DensityMatrix::new(rows).unwrap();
            let w = build_log_weights(&d);
            let dual = solve_lp2_dual(&w).unwrap();
            let mut g = support_graph(&dual, k, 1e-7).unwrap();
            g.canonicalize(&w).unwrap();
            let h = g.to_decomposition().unwrap();
            // pieces carry exactly the dual objective in the exponent
            let coeff = evaluate(&h, &d, Mode::IndependentTransversal).unwrap();
            assert!(
                (-coeff.ln() - dual.objective).abs() <= 1e-6 * (1.0 + dual.objective),
                "trial {}: coeff {} vs dual {}",
                trial,
                coeff,
                dual.objective
            );
        }
    }

    #[test]
    fn recover_exponents_on_a_triangle() {
        let h = OddCycleDecomposition::new(3, vec![Piece::Cycle(vec![0, 1, 2])]).unwrap();
        let w = LogWeights::from_pairs(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        let sol = recover_primal(&h, &w, TOL).unwrap();
        for v in 0..3 {
            assert!((sol.b[v] - 0.5).abs() < 1e-12);
        }
        assert!((sol.objective - 1.5).abs() < 1e-12);
    }

    #[test]
    fn recover_exponents_on_edge_plus_isolated() {
        let h = OddCycleDecomposition::new(
            3,
            vec![Piece::DoubleEdge(0, 1), Piece::Isolated(2)],
        )
        .unwrap();
        let w = LogWeights::from_pairs(3, &[(0, 1, 0.8)]);
        let sol = recover_primal(&h, &w, TOL).unwrap();
        assert!((sol.b[0] - 0.4).abs() < 1e-12);
        assert!((sol.b[1] - 0.4).abs() < 1e-12);
        assert_eq!(sol.b[2], 0.0);
    }

    #[test]
    fn recovery_can_fail_on_tied_optima() {
        // the even split of the heavy pair leaves pair (0, 2) uncovered even
        // though the decomposition itself is optimal
        let h = OddCycleDecomposition::new(
            3,
            vec![Piece::DoubleEdge(0, 1), Piece::Isolated(2)],
        )
        .unwrap();
        let w = LogWeights::from_pairs(3, &[(0, 1, 1.0), (0, 2, 0.6), (1, 2, 0.3)]);
        match recover_primal(&h, &w, TOL) {
            Err(CanonError::InfeasibleRecovery { i: 0, j: 2, deficit }) => {
                assert!((deficit - 0.1).abs() < 1e-12);
            }
            other => panic!("expected infeasible recovery, got {:?}", other),
        }
    }

    #[test]
    fn negative_exponent_is_reported() {
        let h = OddCycleDecomposition::new(3, vec![Piece::Cycle(vec![0, 1, 2])]).unwrap();
        let w = LogWeights::from_pairs(3, &[(0, 1, 0.1), (1, 2, 1.0), (0, 2, 0.1)]);
        assert!(matches!(
            recover_primal(&h, &w, TOL),
            Err(CanonError::InfeasibleRecovery { .. })
        ));
    }
}
