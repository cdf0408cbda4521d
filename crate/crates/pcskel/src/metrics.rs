//! Skeleton-recovery scoring and the replicated benchmark harness.
//!
//! Each benchmark replicate draws a fresh random DAG, samples data from its
//! SEM, estimates the skeleton at the configured significance level, and
//! scores it against the truth. Replicates run on independent RNG streams
//! keyed by `(master_seed, grid_index, replicate)`, so results are identical
//! whether they execute sequentially or on any number of worker threads.
//!
//! Rates follow the usual edge-classification reading over unordered vertex
//! pairs: TPR = tp/(tp+fn) over true edges, FPR = fp/(fp+tn) over true
//! non-edges, TDR = tp/(tp+fp) over estimated edges. A replicate with no
//! estimated edges has no TDR; it still contributes to the other metrics and
//! the exclusion is counted per row rather than silently dropped.

use std::io;

use thiserror::Error;

use crate::ci::{sample_correlation, CiDecider, CiError};
use crate::graph::UndirectedGraph;
use crate::pc::{pc_skeleton, PcConfig, PcError};
use crate::sim::{random_dag, replicate_rng, sample_data, SimError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("graphs have different vertex counts: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("need at least 2 values to aggregate, got {got}")]
    TooFewValues { got: usize },
    #[error("need at least 2 replicates, got {got}")]
    TooFewReplicates { got: usize },
    #[error("benchmark grid is empty")]
    EmptyGrid,
    #[error("grid entry {index} is invalid: {reason}")]
    BadGridEntry { index: usize, reason: String },
    #[error("replicate {replicate} of grid entry {index}: {source}")]
    Replicate {
        index: usize,
        replicate: usize,
        #[source]
        source: Box<MetricsError>,
    },
    #[error("could not build the worker pool: {reason}")]
    WorkerPool { reason: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ci(#[from] CiError),
    #[error(transparent)]
    Pc(#[from] PcError),
}

/// Edge-classification counts over the `p(p-1)/2` unordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkeletonScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl SkeletonScore {
    /// Fraction of true edges recovered; `None` when the truth has no edges.
    pub fn tpr(&self) -> Option<f64> {
        ratio(
            self.true_positives,
            self.true_positives + self.false_negatives,
        )
    }

    /// Fraction of true non-edges wrongly kept; `None` when the truth is the
    /// complete graph.
    pub fn fpr(&self) -> Option<f64> {
        ratio(
            self.false_positives,
            self.false_positives + self.true_negatives,
        )
    }

    /// Fraction of estimated edges that are real; `None` when nothing was
    /// estimated.
    pub fn tdr(&self) -> Option<f64> {
        ratio(
            self.true_positives,
            self.true_positives + self.false_positives,
        )
    }

    pub fn pair_count(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Classifies every unordered pair of the two graphs (same vertex count).
pub fn score_skeleton(
    estimated: &UndirectedGraph,
    truth: &UndirectedGraph,
) -> Result<SkeletonScore, MetricsError> {
    if estimated.p() != truth.p() {
        return Err(MetricsError::DimensionMismatch {
            left: estimated.p(),
            right: truth.p(),
        });
    }
    let p = truth.p();
    let mut score = SkeletonScore {
        true_positives: 0,
        false_positives: 0,
        false_negatives: 0,
        true_negatives: 0,
    };
    for i in 0..p {
        for j in (i + 1)..p {
            match (estimated.has_edge(i, j), truth.has_edge(i, j)) {
                (true, true) => score.true_positives += 1,
                (true, false) => score.false_positives += 1,
                (false, true) => score.false_negatives += 1,
                (false, false) => score.true_negatives += 1,
            }
        }
    }
    Ok(score)
}

/// Mean and standard error (`sd / sqrt(len)`, sample sd with the `len - 1`
/// denominator) of at least two values. Values are sorted before reduction,
/// so the result is independent of input order down to the last bit.
pub fn aggregate(values: &[f64]) -> Result<(f64, f64), MetricsError> {
    if values.len() < 2 {
        return Err(MetricsError::TooFewValues { got: values.len() });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let len = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / len;
    let ss = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let se = (ss / (len - 1.0)).sqrt() / len.sqrt();
    Ok((mean, se))
}

/// One cell of a benchmark grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub p: usize,
    pub n: usize,
    pub s: f64,
    pub alpha: f64,
}

impl BenchConfig {
    fn validate(&self) -> Result<(), String> {
        if self.p < 2 {
            return Err(format!("p must be at least 2, got {}", self.p));
        }
        if self.n < 5 {
            return Err(format!("n must be at least 5, got {}", self.n));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(format!(
                "s must lie strictly between 0 and 1, got {}",
                self.s
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            ));
        }
        Ok(())
    }
}

/// Mean and standard error of one metric across replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
}

/// Aggregated results for one grid cell. A metric is `None` when fewer than
/// two replicates produced a defined value for it.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub config: BenchConfig,
    pub replicates: usize,
    pub tpr: Option<Summary>,
    pub fpr: Option<Summary>,
    pub tdr: Option<Summary>,
    pub m_reach: Summary,
    /// Replicates whose TDR was undefined (no estimated edges).
    pub tdr_excluded: usize,
}

/// Runs `replicates` independent estimation rounds per grid cell and
/// aggregates the recovery metrics. Uses the default worker pool when the
/// `parallel` feature is on; see [`run_benchmark_with_workers`] to pin the
/// worker count. Output is a pure function of `(grid, replicates,
/// master_seed)` regardless of scheduling.
pub fn run_benchmark(
    grid: &[BenchConfig],
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<BenchmarkRow>, MetricsError> {
    run_benchmark_with_workers(grid, replicates, master_seed, None)
}

/// As [`run_benchmark`], with an explicit worker count (`None`: the default
/// pool). Any worker count yields byte-identical results.
pub fn run_benchmark_with_workers(
    grid: &[BenchConfig],
    replicates: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<BenchmarkRow>, MetricsError> {
    if grid.is_empty() {
        return Err(MetricsError::EmptyGrid);
    }
    if replicates < 2 {
        return Err(MetricsError::TooFewReplicates { got: replicates });
    }
    // Stream ids pack (grid index, replicate) into 64 bits.
    assert!(
        grid.len() < (1 << 31) && replicates < (1 << 32),
        "grid or replicate count exceeds the stream-id space"
    );
    for (index, config) in grid.iter().enumerate() {
        config
            .validate()
            .map_err(|reason| MetricsError::BadGridEntry { index, reason })?;
    }

    let total = grid.len() * replicates;
    let outcomes = map_indexed(total, workers, |task| {
        let index = task / replicates;
        let replicate = task % replicates;
        run_replicate(&grid[index], master_seed, index, replicate).map_err(|source| {
            MetricsError::Replicate {
                index,
                replicate,
                source: Box::new(source),
            }
        })
    })?;

    let mut rows = Vec::with_capacity(grid.len());
    for (index, config) in grid.iter().enumerate() {
        let cell = &outcomes[index * replicates..(index + 1) * replicates];
        let tprs: Vec<f64> = cell.iter().filter_map(|o| o.score.tpr()).collect();
        let fprs: Vec<f64> = cell.iter().filter_map(|o| o.score.fpr()).collect();
        let tdrs: Vec<f64> = cell.iter().filter_map(|o| o.score.tdr()).collect();
        let reaches: Vec<f64> = cell.iter().map(|o| o.m_reach as f64).collect();
        let (mean, se) = aggregate(&reaches)?;
        rows.push(BenchmarkRow {
            config: *config,
            replicates,
            tpr: summarize(&tprs),
            fpr: summarize(&fprs),
            tdr: summarize(&tdrs),
            m_reach: Summary { mean, se },
            tdr_excluded: replicates - tdrs.len(),
        });
    }
    Ok(rows)
}

fn summarize(values: &[f64]) -> Option<Summary> {
    if values.len() < 2 {
        return None;
    }
    let (mean, se) = aggregate(values).expect("length checked");
    Some(Summary { mean, se })
}

struct ReplicateOutcome {
    score: SkeletonScore,
    m_reach: usize,
}

/// The full pipeline for one replicate: fresh DAG, fresh data, estimate,
/// score. The RNG stream is owned by this (grid index, replicate) pair.
fn run_replicate(
    config: &BenchConfig,
    master_seed: u64,
    index: usize,
    replicate: usize,
) -> Result<ReplicateOutcome, MetricsError> {
    let stream = ((index as u64) << 32) | replicate as u64;
    let mut rng = replicate_rng(master_seed, stream);
    let dag = random_dag(config.p, config.s, &mut rng)?;
    let data = sample_data(&dag, config.n, &mut rng);
    let corr = sample_correlation(&data)?;
    let decider = CiDecider::sample_test(corr, config.n, config.alpha)?;
    let result = pc_skeleton(config.p, &decider, &PcConfig::default())?;
    let score = score_skeleton(&result.skeleton, &dag.skeleton())?;
    Ok(ReplicateOutcome {
        score,
        m_reach: result.m_reach,
    })
}

#[cfg(feature = "parallel")]
fn map_indexed<T, F>(count: usize, workers: Option<usize>, task: F) -> Result<Vec<T>, MetricsError>
where
    T: Send,
    F: Fn(usize) -> Result<T, MetricsError> + Sync + Send,
{
    use rayon::prelude::*;
    match workers {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| MetricsError::WorkerPool {
                    reason: e.to_string(),
                })?;
            pool.install(|| (0..count).into_par_iter().map(task).collect())
        }
        None => (0..count).into_par_iter().map(task).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T, F>(count: usize, _workers: Option<usize>, task: F) -> Result<Vec<T>, MetricsError>
where
    F: Fn(usize) -> Result<T, MetricsError>,
{
    (0..count).map(task).collect()
}

/// Writes rows as CSV. Undefined metrics print as `NA`; all numbers use the
/// shortest round-trippable representation, so output is byte-stable.
pub fn write_benchmark_csv<W: io::Write>(rows: &[BenchmarkRow], mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "p,n,s,alpha,R,tpr_mean,tpr_se,fpr_mean,fpr_se,tdr_mean,tdr_se,mreach_mean,mreach_se,tdr_excluded"
    )?;
    for row in rows {
        let c = &row.config;
        write!(
            out,
            "{},{},{},{},{}",
            c.p, c.n, c.s, c.alpha, row.replicates
        )?;
        for metric in [&row.tpr, &row.fpr, &row.tdr] {
            match metric {
                Some(s) => write!(out, ",{},{}", s.mean, s.se)?,
                None => write!(out, ",NA,NA")?,
            }
        }
        writeln!(
            out,
            ",{},{},{}",
            row.m_reach.mean, row.m_reach.se, row.tdr_excluded
        )?;
    }
    Ok(())
}
