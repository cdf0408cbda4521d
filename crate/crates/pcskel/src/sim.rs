//! Synthetic DAGs and linear-SEM sampling.
//!
//! DAG generation fills the strictly lower triangle of the weight matrix in
//! two passes over the same row-major order: first Bernoulli(s) edge
//! indicators, then Uniform[0.1, 1] weights for the edges present. With `s`
//! as the sparseness, each vertex has `s * (p - 1)` expected neighbors.
//!
//! Sampling follows the vertex order: `X_j = sum_{i<j} w_ji X_i + eps_j`
//! with independent standard Gaussian noise, one row at a time.
//!
//! Reproducibility contract: every replicate draws from [`replicate_rng`],
//! a counter-based stream RNG keyed by `(master_seed, stream)`. Streams are
//! independent, so replicates can run in parallel in any order and still
//! produce identical output for a fixed master seed.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use thiserror::Error;

use crate::graph::WeightedDag;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("vertex count must be at least 1")]
    EmptyVertexSet,
    #[error("sparseness must lie strictly between 0 and 1, got {s}")]
    BadSparseness { s: f64 },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error(
        "dataset rows must have equal length: row {row} has {got} fields, expected {expected}"
    )]
    RaggedRows {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("dataset entry at row {row}, column {col} is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("dataset must have at least one row and one column")]
    EmptyDataset,
}

/// Parameters of one simulation scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Number of vertices.
    pub p: usize,
    /// Edge-inclusion probability for each lower-triangle entry.
    pub s: f64,
    /// Number of observations to draw.
    pub n: usize,
    /// Master seed for the RNG stream scheme.
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.p == 0 {
            return Err(SimError::EmptyVertexSet);
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(SimError::BadSparseness { s: self.s });
        }
        if self.n == 0 {
            return Err(SimError::EmptySample);
        }
        Ok(())
    }
}

/// An `n x p` data matrix, rows are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    /// Row-major `n x p`, all entries finite.
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from observation rows, validating shape and
    /// finiteness. Indices in errors are 1-based, matching file layouts.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, SimError> {
        let n = rows.len();
        if n == 0 {
            return Err(SimError::EmptyDataset);
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(SimError::EmptyDataset);
        }
        let mut values = Vec::with_capacity(n * p);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(SimError::RaggedRows {
                    row: r + 1,
                    got: row.len(),
                    expected: p,
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(SimError::NonFiniteEntry {
                        row: r + 1,
                        col: c + 1,
                    });
                }
                values.push(v);
            }
        }
        Ok(Self { n, p, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.p + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.p..(row + 1) * self.p]
    }

    /// Writes comma-separated values, one observation per line. Numbers are
    /// printed with the shortest representation that parses back to the same
    /// double, so a write/read cycle is lossless. With `header`, the first
    /// line names the columns `X1..Xp`.
    pub fn write_csv<W: io::Write>(&self, mut out: W, header: bool) -> io::Result<()> {
        if header {
            for c in 0..self.p {
                if c > 0 {
                    write!(out, ",")?;
                }
                write!(out, "X{}", c + 1)?;
            }
            writeln!(out)?;
        }
        for r in 0..self.n {
            let mut line = String::new();
            for (c, v) in self.row(r).iter().enumerate() {
                if c > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// RNG for one replicate: ChaCha8 keyed by the master seed, positioned on an
/// independent stream per replicate index.
pub fn replicate_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// One standard Gaussian draw.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws a random DAG on `p` vertices: each of the `p(p-1)/2` possible edges
/// `i -> j` (with `i < j`) is included independently with probability `s`,
/// then each included edge gets an independent Uniform[0.1, 1] weight.
///
/// Draw order is fixed: one inclusion pass, then one weight pass, both
/// row-major over the lower triangle.
pub fn random_dag<R: Rng + ?Sized>(p: usize, s: f64, rng: &mut R) -> Result<WeightedDag, SimError> {
    if p == 0 {
        return Err(SimError::EmptyVertexSet);
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(SimError::BadSparseness { s });
    }
    let mut present = vec![false; p * p];
    for row in 0..p {
        for col in 0..row {
            present[row * p + col] = rng.random::<f64>() < s;
        }
    }
    let weight_dist = Uniform::new_inclusive(0.1, 1.0).expect("valid range");
    let mut weights = vec![0.0; p * p];
    for row in 0..p {
        for col in 0..row {
            if present[row * p + col] {
                weights[row * p + col] = weight_dist.sample(rng);
            }
        }
    }
    Ok(WeightedDag::new(p, weights).expect("generated matrix is strictly lower triangular"))
}

/// Draws `n` observations from the linear SEM defined by `dag`, with unit
/// Gaussian noise. Within each row, variables are filled in vertex order so
/// every parent value is available when needed.
pub fn sample_data<R: Rng + ?Sized>(dag: &WeightedDag, n: usize, rng: &mut R) -> Dataset {
    let p = dag.p();
    assert!(n > 0, "sample size must be at least 1");
    // Parents of j all precede it in the vertex order.
    let mut parents: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
    for (i, j, w) in dag.edges() {
        parents[j].push((i, w));
    }
    let mut values = vec![0.0; n * p];
    let mut row_buf = vec![0.0; p];
    for r in 0..n {
        for j in 0..p {
            let mut x = standard_normal(rng);
            for &(i, w) in &parents[j] {
                x += w * row_buf[i];
            }
            row_buf[j] = x;
        }
        values[r * p..(r + 1) * p].copy_from_slice(&row_buf);
    }
    Dataset { n, p, values }
}

/// Convenience wrapper: validates the config, then generates a DAG and a
/// dataset from stream 0 of the master seed.
pub fn simulate(config: &SimConfig) -> Result<(WeightedDag, Dataset), SimError> {
    config.validate()?;
    let mut rng = replicate_rng(config.seed, 0);
    let dag = random_dag(config.p, config.s, &mut rng)?;
    let data = sample_data(&dag, config.n, &mut rng);
    Ok((dag, data))
}
