//! The PC skeleton search.
//!
//! Starting from the complete undirected graph, the search visits
//! conditioning-set sizes `l = 0, 1, 2, ...` in order. At each level it scans
//! all ordered pairs `(i, j)` that are currently adjacent and whose
//! neighborhood can supply a conditioning set (`|adj(i) \ {j}| >= l`),
//! enumerating those sets in lexicographic order; the edge is deleted the
//! moment one test reports independence. The search stops at a configured cap
//! or when no pair can supply a set of the next size.
//!
//! The reached level (the largest `l` at which some pair passed the size
//! gate) is reported alongside the skeleton: on faithful population input it
//! lands at the true skeleton's maximal degree or one below, and it drives
//! the polynomial complexity bound for sparse graphs.
//!
//! Edge deletions take effect immediately, inside the level, exactly as the
//! classical algorithm prescribes: results depend on the (fixed, documented)
//! scan order, and the order-independent "stable" variant is deliberately
//! not implemented.

use thiserror::Error;

use crate::ci::{ci_test, partial_correlation, CiDecider, CiError, CiQueryLog, CorrelationMatrix};
use crate::graph::UndirectedGraph;

/// Largest vertex count [`brute_force_skeleton`] accepts; beyond this the
/// `2^(p-2)` subset enumeration per pair stops being tractable.
pub const BRUTE_FORCE_MAX_P: usize = 12;

#[derive(Debug, Error)]
pub enum PcError {
    #[error("skeleton search needs at least 2 vertices, got {p}")]
    TooFewVertices { p: usize },
    #[error("vertex count {p} does not match the decider's {decider_p}")]
    DeciderMismatch { p: usize, decider_p: usize },
    #[error("m_max = {m_max} exceeds {limit} = n - 5 for sample size n = {n}")]
    MMaxTooLarge {
        m_max: usize,
        limit: usize,
        n: usize,
    },
    #[error("exhaustive search is capped at {max} vertices, got {p}")]
    TooLargeForExhaustive { p: usize, max: usize },
    #[error(transparent)]
    Ci(#[from] CiError),
}

/// Tuning for the skeleton search. The only knob is the optional cap on the
/// conditioning-set size.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PcConfig {
    /// Cap on the conditioning-set size. `None` runs to natural termination;
    /// in sample mode the effective cap then defaults to
    /// `min(p - 2, n - 5)`, which keeps every attempted test inside
    /// `n - |k| - 3 >= 1` and on sparse graphs never binds before natural
    /// termination anyway.
    pub m_max: Option<usize>,
}

/// Outcome of one skeleton search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcResult {
    pub skeleton: UndirectedGraph,
    /// Largest conditioning-set size at which some ordered pair passed the
    /// neighborhood-size gate (whether or not any test at that size removed
    /// an edge).
    pub m_reach: usize,
    /// Tally of every conditional-independence query, by set size.
    pub log: CiQueryLog,
    /// The configuration as given.
    pub config: PcConfig,
    /// The cap that actually governed the run (`None`: unbounded).
    pub effective_m_max: Option<usize>,
}

/// Runs the PC adjacency search over `p` vertices against a decider.
///
/// Scan order is fixed: ordered pairs `(i, j)` lexicographically at every
/// level, conditioning sets lexicographically from the current (snapshot at
/// visit time) neighborhood `adj(i) \ {j}`. With a population decider on a
/// faithful Gaussian model this recovers the true skeleton exactly; with a
/// sample decider the output is the usual order-dependent PC estimate.
/// Deterministic: identical inputs produce identical results.
pub fn pc_skeleton(p: usize, decider: &CiDecider, config: &PcConfig) -> Result<PcResult, PcError> {
    if p < 2 {
        return Err(PcError::TooFewVertices { p });
    }
    if decider.p() != p {
        return Err(PcError::DeciderMismatch {
            p,
            decider_p: decider.p(),
        });
    }
    let effective_m_max = match decider.sample_size() {
        Some(n) => {
            // n >= 5 is a decider invariant, so the subtraction is safe.
            let limit = n - 5;
            match config.m_max {
                Some(m) if m > limit => return Err(PcError::MMaxTooLarge { m_max: m, limit, n }),
                Some(m) => Some(m),
                None => Some(limit.min(p - 2)),
            }
        }
        None => config.m_max,
    };

    let mut graph = UndirectedGraph::complete(p).expect("p >= 2");
    let mut log = CiQueryLog::new();
    let mut m_reach = 0;
    let mut level = 0;
    loop {
        let mut level_reached = false;
        for i in 0..p {
            for j in 0..p {
                if i == j || !graph.has_edge(i, j) {
                    continue;
                }
                let others: Vec<usize> = graph
                    .neighbors(i)
                    .iter()
                    .copied()
                    .filter(|&v| v != j)
                    .collect();
                if others.len() < level {
                    continue;
                }
                level_reached = true;
                for cond in enumerate_subsets(&others, level) {
                    if ci_test(decider, i, j, &cond, &mut log)? {
                        graph.remove_edge(i, j);
                        break;
                    }
                }
            }
        }
        if level_reached {
            m_reach = level;
        }
        if effective_m_max.is_some_and(|cap| level >= cap) {
            break;
        }
        // A pair can pass the gate at the next level only through a vertex
        // of degree at least level + 2.
        if graph.max_degree() < level + 2 {
            break;
        }
        level += 1;
    }

    Ok(PcResult {
        skeleton: graph,
        m_reach,
        log,
        config: config.clone(),
        effective_m_max,
    })
}

/// All size-`len` subsets of a sorted slice, in lexicographic order.
///
/// Yields each of the `|items| choose len` subsets exactly once as a sorted
/// `Vec`; empty when `len > |items|`; the single empty set when `len == 0`.
pub fn enumerate_subsets(items: &[usize], len: usize) -> SubsetIter<'_> {
    debug_assert!(
        items.windows(2).all(|w| w[0] < w[1]),
        "subset enumeration requires sorted distinct items"
    );
    SubsetIter {
        items,
        indices: (0..len).collect(),
        done: len > items.len(),
    }
}

pub struct SubsetIter<'a> {
    items: &'a [usize],
    /// Positions into `items` of the next subset to yield.
    indices: Vec<usize>,
    done: bool,
}

impl Iterator for SubsetIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let subset: Vec<usize> = self.indices.iter().map(|&ix| self.items[ix]).collect();
        let k = self.indices.len();
        let n = self.items.len();
        if k == 0 {
            self.done = true;
            return Some(subset);
        }
        // Advance the rightmost index that still has room, then reset the
        // tail right after it; exhaustion when no index can move.
        let mut pos = k;
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            if self.indices[pos] < n - (k - pos) {
                self.indices[pos] += 1;
                for t in (pos + 1)..k {
                    self.indices[t] = self.indices[t - 1] + 1;
                }
                break;
            }
        }
        Some(subset)
    }
}

/// Exhaustive skeleton over a correlation matrix: edge `{i, j}` survives only
/// if no conditioning set `s` (any subset of the remaining vertices) drives
/// `|rho_{ij|s}|` to `zero_tol` or below.
///
/// This is the defining criterion itself, so it serves as the correctness
/// oracle for [`pc_skeleton`] in population mode. Exponential in `p`; capped
/// at [`BRUTE_FORCE_MAX_P`] vertices.
pub fn brute_force_skeleton(
    corr: &CorrelationMatrix,
    zero_tol: f64,
) -> Result<UndirectedGraph, PcError> {
    let p = corr.p();
    if p > BRUTE_FORCE_MAX_P {
        return Err(PcError::TooLargeForExhaustive {
            p,
            max: BRUTE_FORCE_MAX_P,
        });
    }
    let mut graph = UndirectedGraph::complete(p).expect("correlation matrices are nonempty");
    for i in 0..p {
        for j in (i + 1)..p {
            let others: Vec<usize> = (0..p).filter(|&v| v != i && v != j).collect();
            'pair: for l in 0..=others.len() {
                for cond in enumerate_subsets(&others, l) {
                    if partial_correlation(corr, i, j, &cond)?.abs() <= zero_tol {
                        graph.remove_edge(i, j);
                        break 'pair;
                    }
                }
            }
        }
    }
    Ok(graph)
}
