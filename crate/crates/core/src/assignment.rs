//! Optimal and ranked (k-best) rectangular assignment.
//!
//! A [`CostMatrix`] has at most as many rows as columns. Every row must be
//! assigned exactly one column and each column is used at most once.
//! `f64::INFINITY` marks a forbidden pairing; it is never selected, so an
//! assignment either has finite cost or does not exist.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Row-major cost matrix; `+inf` entries are forbidden pairings.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// One feasible assignment: `row_to_col[i]` is the column of row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub cost: f64,
}

impl CostMatrix {
    /// # Panics
    /// If `data.len() != rows * cols`, `rows > cols`, or an entry is NaN or `-inf`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix data has wrong length");
        assert!(rows <= cols, "cost matrix must have at least as many columns as rows");
        assert!(
            data.iter().all(|c| !c.is_nan() && *c != f64::NEG_INFINITY),
            "cost entries must be finite or +inf"
        );
        CostMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        CostMatrix::new(rows.len(), cols, data)
    }

    /// Measurement-to-track layout: `old[p][i]` is the cost of giving
    /// measurement `p` to existing track `i`, and `new_track[p]` the cost of
    /// explaining it with a new track. The new-track block is diagonal with
    /// `+inf` off the diagonal.
    pub fn tracking(old: &[Vec<f64>], new_track: &[f64]) -> Self {
        let m = new_track.len();
        assert_eq!(old.len(), m, "one old-track row per measurement");
        let n_old = old.first().map_or(0, Vec::len);
        let cols = n_old + m;
        let mut data = vec![f64::INFINITY; m * cols];
        for p in 0..m {
            assert_eq!(old[p].len(), n_old, "ragged old-track block");
            data[p * cols..p * cols + n_old].copy_from_slice(&old[p]);
            data[p * cols + n_old + p] = new_track[p];
        }
        CostMatrix::new(m, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Sum of the selected entries, accumulated in row order.
    pub fn cost_of(&self, row_to_col: &[usize]) -> f64 {
        row_to_col
            .iter()
            .enumerate()
            .map(|(i, &j)| self.get(i, j))
            .sum()
    }

    /// Adds `c` to every finite entry.
    pub fn shifted(&self, c: f64) -> CostMatrix {
        let data = self
            .data
            .iter()
            .map(|v| if v.is_finite() { v + c } else { *v })
            .collect();
        CostMatrix::new(self.rows, self.cols, data)
    }
}

/// Per-row constraints of a Murty subproblem.
#[derive(Debug, Clone)]
struct Constraints {
    forced: Vec<Option<usize>>,
    forbidden: Vec<(usize, usize)>,
}

/// Minimum-cost assignment by shortest augmenting paths with potentials
/// (Hungarian method for rectangular matrices). Returns `None` when no
/// feasible assignment exists.
pub fn solve_optimal(c: &CostMatrix) -> Option<Assignment> {
    let cols = hungarian(c, |i, j| c.get(i, j))?;
    Some(Assignment {
        cost: c.cost_of(&cols),
        row_to_col: cols,
    })
}

fn solve_constrained(c: &CostMatrix, cons: &Constraints) -> Option<Assignment> {
    let mut col_owner = vec![usize::MAX; c.cols()];
    for (i, f) in cons.forced.iter().enumerate() {
        if let Some(j) = f {
            col_owner[*j] = i;
        }
    }
    let forbidden = &cons.forbidden;
    let cols = hungarian(c, |i, j| {
        if let Some(fj) = cons.forced[i] {
            return if fj == j { c.get(i, j) } else { f64::INFINITY };
        }
        if col_owner[j] != usize::MAX || forbidden.contains(&(i, j)) {
            return f64::INFINITY;
        }
        c.get(i, j)
    })?;
    Some(Assignment {
        cost: c.cost_of(&cols),
        row_to_col: cols,
    })
}

fn hungarian(c: &CostMatrix, cost: impl Fn(usize, usize) -> f64) -> Option<Vec<usize>> {
    let n = c.rows();
    let m = c.cols();
    if n == 0 {
        return Some(Vec::new());
    }
    const INF: f64 = f64::INFINITY;
    // 1-based as in the classical formulation; index 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![INF; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = INF);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cij = cost(i0 - 1, j - 1);
                if cij.is_finite() {
                    let cur = cij - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if delta == INF {
                return None;
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            row_to_col[owner[j] - 1] = j - 1;
        }
    }
    Some(row_to_col)
}

struct Node {
    solution: Assignment,
    constraints: Constraints,
}

impl Node {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.solution
            .cost
            .total_cmp(&other.solution.cost)
            .then_with(|| self.solution.row_to_col.cmp(&other.solution.row_to_col))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed: BinaryHeap is a max-heap and we pop the cheapest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Murty's ranked assignment: up to `k` feasible assignments in
/// non-decreasing cost order, without duplicates. Equal-cost candidates are
/// emitted in lexicographic order of `row_to_col`.
pub fn murty_kbest(c: &CostMatrix, k: usize) -> Vec<Assignment> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let root = Constraints {
        forced: vec![None; c.rows()],
        forbidden: Vec::new(),
    };
    let Some(best) = solve_optimal(c) else {
        return out;
    };
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        solution: best,
        constraints: root,
    });
    while let Some(node) = heap.pop() {
        let Node {
            solution,
            constraints,
        } = node;
        // Partition the remaining space of this node around its solution:
        // child t keeps the first t free rows fixed to the solution and
        // forbids the solution's column on free row t.
        let mut fixed = constraints.clone();
        for row in 0..c.rows() {
            if constraints.forced[row].is_some() {
                continue;
            }
            let mut child = fixed.clone();
            child.forbidden.push((row, solution.row_to_col[row]));
            if let Some(sol) = solve_constrained(c, &child) {
                heap.push(Node {
                    solution: sol,
                    constraints: child,
                });
            }
            fixed.forced[row] = Some(solution.row_to_col[row]);
        }
        out.push(solution);
        if out.len() >= k {
            break;
        }
    }
    out
}
