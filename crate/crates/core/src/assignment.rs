//! Maximum-cardinality, minimum-weight bipartite matching.
//!
//! The two-level objective is folded into a single linear assignment by
//! shifting every allowed edge to `weight - M` with `M` larger than the
//! total absolute weight, so any extra matched edge outweighs every possible
//! weight difference. The assignment itself is solved by a shortest
//! augmenting path method with dual potentials (Jonker-Volgenant family,
//! O(n^2 m) for an n x m matrix with n <= m).

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub left: usize,
    pub right: usize,
    pub weight: f64,
}

/// Sparse bipartite graph; predictions on the left, ground truth on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteCostGraph {
    n_left: usize,
    n_right: usize,
    edges: Vec<Edge>,
}

impl BipartiteCostGraph {
    pub fn empty(n_left: usize, n_right: usize) -> Self {
        Self {
            n_left,
            n_right,
            edges: Vec::new(),
        }
    }

    pub fn from_edges(n_left: usize, n_right: usize, edges: Vec<Edge>) -> Result<Self> {
        for e in &edges {
            if e.left >= n_left || e.right >= n_right {
                return Err(Error::config(format!(
                    "edge ({}, {}) outside a {n_left} x {n_right} graph",
                    e.left, e.right
                )));
            }
            if !e.weight.is_finite() {
                return Err(Error::config(format!(
                    "edge ({}, {}) has non-finite weight",
                    e.left, e.right
                )));
            }
        }
        let mut keys: Vec<(usize, usize)> = edges.iter().map(|e| (e.left, e.right)).collect();
        keys.sort_unstable();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::config(format!("duplicate edge {:?}", w[0])));
        }
        Ok(Self {
            n_left,
            n_right,
            edges,
        })
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Total weight of a matching of this graph; `None` if it uses a missing edge.
    pub fn weight_of(&self, matching: &Matching) -> Option<f64> {
        let lookup: HashMap<(usize, usize), f64> =
            self.edges.iter().map(|e| ((e.left, e.right), e.weight)).collect();
        matching
            .pairs
            .iter()
            .map(|p| lookup.get(p).copied())
            .sum::<Option<f64>>()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    /// `(left, right)` pairs sorted by left index.
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks that every vertex is used at most once and every pair is an edge.
    pub fn is_valid_for(&self, graph: &BipartiteCostGraph) -> bool {
        let mut left = vec![false; graph.n_left];
        let mut right = vec![false; graph.n_right];
        for &(i, j) in &self.pairs {
            if i >= graph.n_left || j >= graph.n_right || left[i] || right[j] {
                return false;
            }
            left[i] = true;
            right[j] = true;
        }
        graph.weight_of(self).is_some()
    }
}

/// Dense row-major cost matrix. `f64::INFINITY` marks a non-assignable cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }
}

/// Minimum-cost assignment of every row to a distinct column (`rows <= cols`).
///
/// Returns the column assigned to each row. The matrix must admit at least one
/// full assignment of finite cost. Ties are broken by scan order, so the
/// result is deterministic for a given matrix.
pub fn min_cost_assignment(costs: &CostMatrix) -> Vec<usize> {
    let n = costs.rows;
    let m = costs.cols;
    assert!(n <= m, "min_cost_assignment needs rows <= cols ({n} > {m})");
    if n == 0 {
        return Vec::new();
    }

    // 1-based; column 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![f64::INFINITY; m + 1];
    let mut used = vec![false; m + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);

        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let row = &costs.data[(i0 - 1) * m..i0 * m];
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            assert!(j1 != 0, "cost matrix has no finite full assignment");

            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }

        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![usize::MAX; n];
    for j in 1..=m {
        if row_of[j] != 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Maximum-cardinality matching of minimum total weight.
pub fn solve_optimal(graph: &BipartiteCostGraph) -> Matching {
    if graph.edges.is_empty() {
        return Matching::default();
    }

    // Vertices without edges can never be matched; drop them.
    let mut left_id = vec![usize::MAX; graph.n_left];
    let mut right_id = vec![usize::MAX; graph.n_right];
    let mut lefts = Vec::new();
    let mut rights = Vec::new();
    for e in &graph.edges {
        if left_id[e.left] == usize::MAX {
            left_id[e.left] = lefts.len();
            lefts.push(e.left);
        }
        if right_id[e.right] == usize::MAX {
            right_id[e.right] = rights.len();
            rights.push(e.right);
        }
    }

    let shift = 2.0 * (graph.edges.iter().map(|e| e.weight.abs()).sum::<f64>() + 1.0);
    let transpose = lefts.len() > rights.len();
    let (rows, cols) = if transpose {
        (rights.len(), lefts.len())
    } else {
        (lefts.len(), rights.len())
    };

    // A non-edge cell costs 0, the same as leaving the row unassigned, so an
    // optimal full assignment restricted to real edges is an optimal matching.
    let mut costs = CostMatrix::filled(rows, cols, 0.0);
    let mut is_edge = vec![false; rows * cols];
    for e in &graph.edges {
        let (l, r) = (left_id[e.left], right_id[e.right]);
        let (row, col) = if transpose { (r, l) } else { (l, r) };
        costs.set(row, col, e.weight - shift);
        is_edge[row * cols + col] = true;
    }

    let assignment = min_cost_assignment(&costs);
    let mut pairs: Vec<(usize, usize)> = assignment
        .iter()
        .enumerate()
        .filter(|&(row, &col)| is_edge[row * cols + col])
        .map(|(row, &col)| {
            if transpose {
                (lefts[col], rights[row])
            } else {
                (lefts[row], rights[col])
            }
        })
        .collect();
    pairs.sort_unstable();
    Matching { pairs }
}

/// Largest side accepted by [`solve_bruteforce`].
pub const BRUTEFORCE_MAX_SIDE: usize = 8;

/// Exact `(cardinality, min weight)` by enumerating every matching.
pub fn solve_bruteforce(graph: &BipartiteCostGraph) -> Result<(usize, f64)> {
    let side = graph.n_left.max(graph.n_right);
    if side > BRUTEFORCE_MAX_SIDE {
        return Err(Error::SizeGuard {
            size: side,
            limit: BRUTEFORCE_MAX_SIDE,
        });
    }
    let mut adjacency = vec![Vec::new(); graph.n_left];
    for e in &graph.edges {
        adjacency[e.left].push((e.right, e.weight));
    }

    fn walk(
        adjacency: &[Vec<(usize, f64)>],
        i: usize,
        used: u32,
        size: usize,
        weight: f64,
        best: &mut (usize, f64),
    ) {
        if i == adjacency.len() {
            if size > best.0 || (size == best.0 && weight < best.1) {
                *best = (size, weight);
            }
            return;
        }
        walk(adjacency, i + 1, used, size, weight, best);
        for &(j, w) in &adjacency[i] {
            if used & (1 << j) == 0 {
                walk(adjacency, i + 1, used | (1 << j), size + 1, weight + w, best);
            }
        }
    }

    let mut best = (0usize, 0.0f64);
    walk(&adjacency, 0, 0, 0, 0.0, &mut best);
    Ok(best)
}

/// Solves each graph independently, in parallel; output order matches input order.
pub fn solve_batch(graphs: &[BipartiteCostGraph]) -> Vec<Matching> {
    graphs.par_iter().map(solve_optimal).collect()
}
