//! Skeleton estimation for sparse Gaussian DAGs.
//!
//! The library estimates the undirected skeleton of a directed acyclic graph
//! from observational data generated by a linear structural equation model
//! with Gaussian noise. Estimation runs the PC algorithm restricted to its
//! adjacency-search phase: starting from the complete graph, edges are removed
//! whenever a conditional-independence test accepts, with conditioning sets
//! drawn from current neighborhoods of increasing size.
//!
//! Modules:
//!
//! - [`graph`]: weighted DAGs over a fixed vertex order and undirected
//!   skeletons, plus the implied covariance of the linear SEM.
//! - [`ci`]: correlation matrices, partial correlations, Fisher-z tests, and
//!   the exact population test that thresholds partial correlations at zero.
//! - [`pc`]: the skeleton search itself, along with an exhaustive
//!   reference estimator for small graphs.
//! - [`sim`]: the synthetic DAG generator and SEM sampler with a
//!   counter-based RNG scheme for reproducible parallel replication.
//! - [`metrics`]: edge-recovery scoring and the replicated benchmark
//!   harness producing CSV summaries.
//!
//! Internally vertices are `0..p`; all text formats (edge lists, CSV) are
//! 1-indexed.

pub mod ci;
pub mod erf;
pub mod graph;
pub mod metrics;
pub mod pc;
pub mod sim;

pub use ci::{ci_test, CiDecider, CiError, CiQueryLog, CorrelationMatrix};
pub use graph::{GraphError, UndirectedGraph, WeightedDag};
pub use metrics::{run_benchmark, BenchConfig, BenchmarkRow, MetricsError, SkeletonScore};
pub use pc::{pc_skeleton, PcConfig, PcError, PcResult};
pub use sim::{Dataset, SimConfig, SimError};
