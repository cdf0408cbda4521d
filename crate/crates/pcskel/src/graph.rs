//! Weighted DAGs over a fixed vertex order and undirected skeletons.
//!
//! A [`WeightedDag`] fixes the topological order to the index order: an edge
//! `i -> j` may exist only for `i < j` and is stored as a nonzero entry in the
//! strictly lower triangle of a `p x p` weight matrix (`weights[j][i]` holds
//! the coefficient of parent `i` in the equation for `j`). An
//! [`UndirectedGraph`] is the sorted-adjacency-list representation used for
//! skeletons; the PC search mutates it by edge deletion only.

use std::fmt::Write as _;

use thiserror::Error;

/// Errors from graph construction and edge-list parsing.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex count must be at least 1")]
    EmptyVertexSet,
    #[error("weight matrix has {got} entries, expected {expected} for {p} vertices")]
    BadShape {
        p: usize,
        got: usize,
        expected: usize,
    },
    #[error("weight matrix entry ({row}, {col}) = {value} must be zero on or above the diagonal")]
    NotLowerTriangular { row: usize, col: usize, value: f64 },
    #[error("weight matrix entry ({row}, {col}) is not finite")]
    NonFiniteWeight { row: usize, col: usize },
    #[error("edge ({from}, {to}) is out of range for {p} vertices")]
    EdgeOutOfRange { from: usize, to: usize, p: usize },
    #[error("edge ({from}, {to}) violates the topological order (need from < to)")]
    EdgeAgainstOrder { from: usize, to: usize },
    #[error("edge list line {line}: {reason}")]
    BadEdgeLine { line: usize, reason: String },
}

/// A DAG on vertices `0..p` whose topological order is the index order,
/// together with real edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDag {
    p: usize,
    /// Row-major `p x p`, strictly lower triangular: `weights[j * p + i]` is
    /// the weight of edge `i -> j` (zero when absent).
    weights: Vec<f64>,
}

impl WeightedDag {
    /// Builds a DAG from a row-major `p x p` weight matrix. Every entry on or
    /// above the diagonal must be exactly zero, and all entries finite.
    pub fn new(p: usize, weights: Vec<f64>) -> Result<Self, GraphError> {
        if p == 0 {
            return Err(GraphError::EmptyVertexSet);
        }
        if weights.len() != p * p {
            return Err(GraphError::BadShape {
                p,
                got: weights.len(),
                expected: p * p,
            });
        }
        for row in 0..p {
            for col in 0..p {
                let value = weights[row * p + col];
                if !value.is_finite() {
                    return Err(GraphError::NonFiniteWeight {
                        row: row + 1,
                        col: col + 1,
                    });
                }
                if col >= row && value != 0.0 {
                    return Err(GraphError::NotLowerTriangular {
                        row: row + 1,
                        col: col + 1,
                        value,
                    });
                }
            }
        }
        Ok(Self { p, weights })
    }

    /// The edgeless DAG on `p` vertices.
    pub fn zero(p: usize) -> Result<Self, GraphError> {
        if p == 0 {
            return Err(GraphError::EmptyVertexSet);
        }
        Ok(Self {
            p,
            weights: vec![0.0; p * p],
        })
    }

    /// Builds a DAG from `(from, to, weight)` triples with `from < to`.
    pub fn from_edges(p: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let mut dag = Self::zero(p)?;
        for &(from, to, weight) in edges {
            if from >= p || to >= p {
                return Err(GraphError::EdgeOutOfRange { from, to, p });
            }
            if from >= to {
                return Err(GraphError::EdgeAgainstOrder { from, to });
            }
            if !weight.is_finite() {
                return Err(GraphError::NonFiniteWeight {
                    row: to + 1,
                    col: from + 1,
                });
            }
            dag.weights[to * p + from] = weight;
        }
        Ok(dag)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Weight of edge `from -> to`; requires `from < to < p`.
    pub fn weight(&self, from: usize, to: usize) -> f64 {
        assert!(from < to && to < self.p, "edge indices out of range");
        self.weights[to * self.p + from]
    }

    /// Rows of the weight matrix, for serialization.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.weights.chunks_exact(self.p)
    }

    /// Edges `(from, to, weight)` in lexicographic `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let p = self.p;
        (0..p).flat_map(move |from| {
            ((from + 1)..p).filter_map(move |to| {
                let w = self.weights[to * p + from];
                (w != 0.0).then_some((from, to, w))
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    /// The undirected skeleton: every directed edge loses its orientation.
    pub fn skeleton(&self) -> UndirectedGraph {
        let mut g = UndirectedGraph::empty(self.p).expect("p >= 1 by construction");
        for (from, to, _) in self.edges() {
            g.add_edge(from, to);
        }
        g
    }

    /// Covariance of the linear SEM `X_j = sum_{i<j} w_ji X_i + eps_j` with
    /// unit-variance independent Gaussian noise: `(I - A)^-1 (I - A)^-T`.
    ///
    /// Returned row-major `p x p`; symmetric positive definite with unit noise
    /// contribution on the diagonal (every diagonal entry is at least 1).
    pub fn true_covariance(&self) -> Vec<f64> {
        let p = self.p;
        // Solve (I - A) B = I column by column; I - A is unit lower
        // triangular, so forward substitution is exact in structure.
        let mut b = vec![0.0; p * p];
        for col in 0..p {
            b[col * p + col] = 1.0;
            for row in (col + 1)..p {
                let mut acc = 0.0;
                for k in col..row {
                    let w = self.weights[row * p + k];
                    if w != 0.0 {
                        acc += w * b[k * p + col];
                    }
                }
                b[row * p + col] = acc;
            }
        }
        let mut sigma = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..=i {
                let mut acc = 0.0;
                // B is lower triangular: row i has support 0..=i.
                for k in 0..=j.min(i) {
                    acc += b[i * p + k] * b[j * p + k];
                }
                sigma[i * p + j] = acc;
                sigma[j * p + i] = acc;
            }
        }
        sigma
    }
}

/// Undirected simple graph on vertices `0..p` with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    p: usize,
    adj: Vec<Vec<usize>>,
}

impl UndirectedGraph {
    pub fn empty(p: usize) -> Result<Self, GraphError> {
        if p == 0 {
            return Err(GraphError::EmptyVertexSet);
        }
        Ok(Self {
            p,
            adj: vec![Vec::new(); p],
        })
    }

    /// The complete graph: every pair of distinct vertices adjacent.
    pub fn complete(p: usize) -> Result<Self, GraphError> {
        if p == 0 {
            return Err(GraphError::EmptyVertexSet);
        }
        let adj = (0..p)
            .map(|v| (0..p).filter(|&u| u != v).collect())
            .collect();
        Ok(Self { p, adj })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Neighbors of `v` in ascending order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adj[i].binary_search(&j).is_ok()
    }

    /// Inserts edge `{i, j}`. Self-loops are rejected; re-adding an existing
    /// edge is a no-op.
    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i != j, "self-loops are not representable");
        assert!(i < self.p && j < self.p, "vertex out of range");
        if let Err(pos) = self.adj[i].binary_search(&j) {
            self.adj[i].insert(pos, j);
            let pos = self.adj[j].binary_search(&i).unwrap_err();
            self.adj[j].insert(pos, i);
        }
    }

    /// Removes edge `{i, j}` if present; returns whether it was.
    pub fn remove_edge(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        match self.adj[i].binary_search(&j) {
            Ok(pos) => {
                self.adj[i].remove(pos);
                let pos = self.adj[j].binary_search(&i).expect("adjacency symmetric");
                self.adj[j].remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, nbrs)| {
            nbrs.iter()
                .copied()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    /// Serializes to the tab-separated edge-list format: one `i\tj` line per
    /// edge, 1-indexed, `i < j`, lexicographically sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            writeln!(out, "{}\t{}", i + 1, j + 1).expect("string write is infallible");
        }
        out
    }

    /// Parses the edge-list format produced by [`to_edge_list`]. Blank lines
    /// are ignored; any whitespace separates the two endpoints.
    ///
    /// [`to_edge_list`]: UndirectedGraph::to_edge_list
    pub fn from_edge_list(p: usize, text: &str) -> Result<Self, GraphError> {
        let mut g = Self::empty(p)?;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let (a, b) = match (fields.next(), fields.next(), fields.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(GraphError::BadEdgeLine {
                        line,
                        reason: format!("expected two fields, got {trimmed:?}"),
                    })
                }
            };
            let parse = |s: &str| -> Result<usize, GraphError> {
                s.parse::<usize>().map_err(|_| GraphError::BadEdgeLine {
                    line,
                    reason: format!("{s:?} is not a vertex index"),
                })
            };
            let (a, b) = (parse(a)?, parse(b)?);
            if a < 1 || b < 1 || a > p || b > p {
                return Err(GraphError::BadEdgeLine {
                    line,
                    reason: format!("vertex out of range 1..={p}"),
                });
            }
            if a >= b {
                return Err(GraphError::BadEdgeLine {
                    line,
                    reason: format!("endpoints must satisfy i < j, got {a} {b}"),
                });
            }
            if g.has_edge(a - 1, b - 1) {
                return Err(GraphError::BadEdgeLine {
                    line,
                    reason: format!("duplicate edge {a} {b}"),
                });
            }
            g.add_edge(a - 1, b - 1);
        }
        Ok(g)
    }
}
