//! Conditional-independence testing for jointly Gaussian variables.
//!
//! For Gaussian data, `X_i` and `X_j` are conditionally independent given a
//! set `k` exactly when the partial correlation `rho_{ij|k}` vanishes, so
//! every test here reduces to a partial correlation. Two implementations:
//!
//! - [`partial_correlation`]: invert the correlation submatrix over
//!   `{i, j} union k` (Cholesky, the matrix is symmetric positive definite
//!   for nondegenerate inputs) and read the entry off the precision matrix.
//!   This is the production route, `O(|k|^3)` per query.
//! - [`partial_correlation_recursive`]: the classical recursion that peels
//!   one conditioning variable at a time. Exponential in `|k|`; kept as an
//!   independently-coded cross-check, not used by the search.
//!
//! Sample tests apply the Fisher z-transform: with `n` observations and
//! conditioning size `|k|`, `sqrt(n - |k| - 3) * |z(rho_hat)|` is compared
//! against the standard normal quantile for the chosen level. The population
//! decider instead thresholds the exact partial correlation at (numerically)
//! zero, which turns the same search code into an oracle.

use thiserror::Error;

use crate::erf::erfc;
use crate::graph::WeightedDag;
use crate::sim::Dataset;

/// Everything above this magnitude is treated as perfect correlation before
/// the z-transform, keeping the statistic finite.
const RHO_CLAMP: f64 = 1.0 - 1e-12;
/// 1-norm condition estimate above which a submatrix inversion is rejected.
const CONDITION_LIMIT: f64 = 1e12;
/// Underflow guard for the recursion denominators `1 - rho^2`.
const RECURSION_DENOM_MIN: f64 = 1e-14;
/// Constant-column detector: centered sum of squares at or below this
/// fraction of the uncentered sum of squares counts as zero variance.
const ZERO_VARIANCE_RATIO: f64 = 1e-28;

#[derive(Debug, Error)]
pub enum CiError {
    #[error("need at least 2 observations to estimate correlations, got {n}")]
    TooFewRows { n: usize },
    #[error("column {col} has zero sample variance")]
    ZeroVariance { col: usize },
    #[error("covariance matrix has {got} entries, expected {expected}")]
    BadCovarianceShape { got: usize, expected: usize },
    #[error("covariance diagonal entry {col} must be positive and finite")]
    BadCovarianceDiagonal { col: usize },
    #[error("correlation matrix entry ({row}, {col}) is outside [-1, 1]")]
    BadCorrelationEntry { row: usize, col: usize },
    #[error("correlation query ({i}, {j} | {cond:?}) is invalid: {reason}")]
    InvalidQuery {
        i: usize,
        j: usize,
        cond: Vec<usize>,
        reason: String,
    },
    #[error("correlation submatrix over ({i}, {j} | {cond:?}) is numerically singular")]
    DegenerateSubmatrix {
        i: usize,
        j: usize,
        cond: Vec<usize>,
    },
    #[error(
        "recursion for ({i}, {j} | {cond:?}) hit a vanishing denominator (1 - rho^2 < {RECURSION_DENOM_MIN})"
    )]
    RecursionUnderflow {
        i: usize,
        j: usize,
        cond: Vec<usize>,
    },
    #[error("sample mode needs at least 5 observations, got {n}")]
    TooFewSamples { n: usize },
    #[error(
        "{n} observations cannot support conditioning sets of size {cond_size} (need n >= |k| + 4)"
    )]
    CondSetTooLarge { n: usize, cond_size: usize },
    #[error("significance level must lie strictly between 0 and 1, got {alpha}")]
    BadAlpha { alpha: f64 },
    #[error("quantile argument must lie strictly between 0 and 1, got {q}")]
    QuantileOutOfRange { q: f64 },
}

/// Symmetric `p x p` matrix with unit diagonal and entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    p: usize,
    /// Row-major, exactly symmetric (mirrored entries are bit-identical).
    values: Vec<f64>,
}

impl CorrelationMatrix {
    /// Builds from explicit entries, validating symmetry up to sign-exactness,
    /// the unit diagonal, and the `[-1, 1]` range. Mirrored entries are taken
    /// from the upper triangle so the stored matrix is exactly symmetric.
    pub fn from_values(p: usize, values: Vec<f64>) -> Result<Self, CiError> {
        if values.len() != p * p {
            return Err(CiError::BadCovarianceShape {
                got: values.len(),
                expected: p * p,
            });
        }
        let mut stored = vec![0.0; p * p];
        for r in 0..p {
            for c in r..p {
                let v = values[r * p + c];
                let mirrored = values[c * p + r];
                if !v.is_finite() || v.abs() > 1.0 || (v - mirrored).abs() > 1e-12 {
                    return Err(CiError::BadCorrelationEntry {
                        row: r + 1,
                        col: c + 1,
                    });
                }
                if r == c && v != 1.0 {
                    return Err(CiError::BadCorrelationEntry {
                        row: r + 1,
                        col: c + 1,
                    });
                }
                stored[r * p + c] = v;
                stored[c * p + r] = v;
            }
        }
        Ok(Self { p, values: stored })
    }

    /// Normalizes a row-major `p x p` covariance matrix to correlations.
    pub fn from_covariance(p: usize, sigma: &[f64]) -> Result<Self, CiError> {
        if sigma.len() != p * p {
            return Err(CiError::BadCovarianceShape {
                got: sigma.len(),
                expected: p * p,
            });
        }
        let mut scale = vec![0.0; p];
        for (c, s) in scale.iter_mut().enumerate() {
            let d = sigma[c * p + c];
            if !(d.is_finite() && d > 0.0) {
                return Err(CiError::BadCovarianceDiagonal { col: c + 1 });
            }
            *s = d.sqrt();
        }
        let mut values = vec![0.0; p * p];
        for r in 0..p {
            values[r * p + r] = 1.0;
            for c in (r + 1)..p {
                let v = sigma[r * p + c] / (scale[r] * scale[c]);
                if !v.is_finite() {
                    return Err(CiError::BadCorrelationEntry {
                        row: r + 1,
                        col: c + 1,
                    });
                }
                let v = v.clamp(-1.0, 1.0);
                values[r * p + c] = v;
                values[c * p + r] = v;
            }
        }
        Ok(Self { p, values })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }
}

/// Exact correlation matrix implied by a DAG's linear SEM.
pub fn population_correlation(dag: &WeightedDag) -> CorrelationMatrix {
    CorrelationMatrix::from_covariance(dag.p(), &dag.true_covariance())
        .expect("SEM covariance is positive definite")
}

/// Pearson correlations of the dataset columns. Rejects constant columns,
/// since their correlations are undefined.
pub fn sample_correlation(data: &Dataset) -> Result<CorrelationMatrix, CiError> {
    let n = data.n();
    let p = data.p();
    if n < 2 {
        return Err(CiError::TooFewRows { n });
    }
    // Column-major centered copy: the p(p+1)/2 dot products below then run
    // over contiguous memory.
    let mut cols = vec![0.0; n * p];
    let mut sumsq_raw = vec![0.0; p];
    for c in 0..p {
        let mut mean = 0.0;
        for r in 0..n {
            let v = data.get(r, c);
            mean += v;
            sumsq_raw[c] += v * v;
        }
        mean /= n as f64;
        for r in 0..n {
            cols[c * n + r] = data.get(r, c) - mean;
        }
    }
    let mut ss = vec![0.0; p];
    for c in 0..p {
        let col = &cols[c * n..(c + 1) * n];
        let s: f64 = col.iter().map(|v| v * v).sum();
        if s <= sumsq_raw[c] * ZERO_VARIANCE_RATIO {
            return Err(CiError::ZeroVariance { col: c + 1 });
        }
        ss[c] = s;
    }
    let mut values = vec![0.0; p * p];
    for a in 0..p {
        values[a * p + a] = 1.0;
        let ca = &cols[a * n..(a + 1) * n];
        for b in (a + 1)..p {
            let cb = &cols[b * n..(b + 1) * n];
            let dot: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
            let r = (dot / (ss[a] * ss[b]).sqrt()).clamp(-1.0, 1.0);
            values[a * p + b] = r;
            values[b * p + a] = r;
        }
    }
    Ok(CorrelationMatrix { p, values })
}

/// Checks a query's index constraints and returns the conditioning set
/// sorted ascending.
fn validate_query(p: usize, i: usize, j: usize, cond: &[usize]) -> Result<Vec<usize>, CiError> {
    let fail = |reason: String| CiError::InvalidQuery {
        i,
        j,
        cond: cond.to_vec(),
        reason,
    };
    if i == j {
        return Err(fail("endpoints are identical".into()));
    }
    if i >= p || j >= p {
        return Err(fail(format!("endpoint out of range 0..{p}")));
    }
    let mut sorted = cond.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(fail(format!("duplicate conditioning vertex {}", w[0])));
        }
    }
    for &v in &sorted {
        if v >= p {
            return Err(fail(format!("conditioning vertex {v} out of range 0..{p}")));
        }
        if v == i || v == j {
            return Err(fail(format!("conditioning set contains endpoint {v}")));
        }
    }
    Ok(sorted)
}

/// Partial correlation of `i` and `j` given `cond`, via inversion of the
/// correlation submatrix over `{i, j} union cond`.
///
/// The result is exactly symmetric in `(i, j)` and invariant under reordering
/// of `cond`: the submatrix is always assembled in canonical variable order.
/// An empty conditioning set returns the plain correlation unchanged.
pub fn partial_correlation(
    corr: &CorrelationMatrix,
    i: usize,
    j: usize,
    cond: &[usize],
) -> Result<f64, CiError> {
    let sorted = validate_query(corr.p, i, j, cond)?;
    if sorted.is_empty() {
        return Ok(corr.get(i, j));
    }
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    let d = sorted.len() + 2;
    let mut vars = Vec::with_capacity(d);
    vars.push(a);
    vars.push(b);
    vars.extend(&sorted);
    let mut sub = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..d {
            sub[r * d + c] = corr.get(vars[r], vars[c]);
        }
    }
    let degenerate = || CiError::DegenerateSubmatrix {
        i,
        j,
        cond: sorted.clone(),
    };
    let inv = spd_inverse(&sub, d).ok_or_else(degenerate)?;
    let cond_estimate = one_norm(&sub, d) * one_norm(&inv, d);
    if !cond_estimate.is_finite() || cond_estimate > CONDITION_LIMIT {
        return Err(degenerate());
    }
    let denom = (inv[0] * inv[d + 1]).sqrt();
    if !(denom.is_finite() && denom > 0.0) {
        return Err(degenerate());
    }
    Ok((-inv[1] / denom).clamp(-1.0, 1.0))
}

/// Partial correlation by the classical one-variable-at-a-time recursion.
///
/// Peels the largest-index conditioning variable `h`:
/// `rho_{ij|k} = (rho_{ij|k'} - rho_{ih|k'} rho_{jh|k'}) /
/// sqrt((1 - rho_{ih|k'}^2)(1 - rho_{jh|k'}^2))` with `k' = k without h`.
/// Costs `3^|k|` base correlations; this is a cross-check oracle for
/// [`partial_correlation`], not a production path.
pub fn partial_correlation_recursive(
    corr: &CorrelationMatrix,
    i: usize,
    j: usize,
    cond: &[usize],
) -> Result<f64, CiError> {
    let sorted = validate_query(corr.p, i, j, cond)?;
    let underflow = || CiError::RecursionUnderflow {
        i,
        j,
        cond: sorted.clone(),
    };
    fn rec(
        corr: &CorrelationMatrix,
        i: usize,
        j: usize,
        k: &[usize],
        underflow: &dyn Fn() -> CiError,
    ) -> Result<f64, CiError> {
        let Some((&h, rest)) = k.split_last() else {
            return Ok(corr.get(i, j));
        };
        let r_ij = rec(corr, i, j, rest, underflow)?;
        let r_ih = rec(corr, i, h, rest, underflow)?;
        let r_jh = rec(corr, j, h, rest, underflow)?;
        let d1 = 1.0 - r_ih * r_ih;
        let d2 = 1.0 - r_jh * r_jh;
        if d1 < RECURSION_DENOM_MIN || d2 < RECURSION_DENOM_MIN {
            return Err(underflow());
        }
        Ok((r_ij - r_ih * r_jh) / (d1 * d2).sqrt())
    }
    rec(corr, i, j, &sorted, &underflow).map(|r| r.clamp(-1.0, 1.0))
}

/// Fisher z-transform `z(rho) = log((1 + rho) / (1 - rho)) / 2`, with `|rho|`
/// clamped to `1 - 1e-12` so the statistic stays finite.
///
/// Computed on `|rho|` and mirrored, so it is exactly odd; `log1p` keeps full
/// precision at both ends (the naive quotient, and `f64::atanh` itself,
/// cancel catastrophically as `rho -> -1`).
pub fn fisher_z(rho: f64) -> f64 {
    let r = rho.clamp(-RHO_CLAMP, RHO_CLAMP);
    let a = r.abs();
    // log((1 + a) / (1 - a)) = log1p(2a / (1 - a)); 1 - a is exact here.
    let z = 0.5 * (2.0 * a / (1.0 - a)).ln_1p();
    if r < 0.0 {
        -z
    } else {
        z
    }
}

/// Inverse of [`fisher_z`] on its unclamped range.
pub fn fisher_z_inv(z: f64) -> f64 {
    z.tanh()
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal quantile, accurate to well below 1e-8 absolute over
/// `[1e-10, 1 - 1e-10]`: a rational approximation seeds two Halley steps
/// against [`normal_cdf`].
pub fn normal_quantile(q: f64) -> Result<f64, CiError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(CiError::QuantileOutOfRange { q });
    }
    // Work in the lower tail, where normal_cdf keeps relative accuracy.
    // Near 1 the cdf saturates (its spacing is a full ulp of 1), which
    // would cap refinement accuracy at ~1e-7 in the far tail; 1 - q is
    // exact for q >= 0.5, so the reflection loses nothing.
    if q > 0.5 {
        Ok(-quantile_lower(1.0 - q))
    } else {
        Ok(quantile_lower(q))
    }
}

/// Quantile on `0 < q <= 0.5` (result `<= 0`), seed plus Halley refinement.
fn quantile_lower(q: f64) -> f64 {
    let mut x = quantile_seed(q);
    // sqrt(2 pi), for the normal density in the correction term.
    const SQRT_2PI: f64 = 2.5066282746310002;
    // The seed is good to ~1e-9 relative on its own; two Halley steps bring
    // it to machine precision. Skipped in the extreme tails where
    // exp(x^2 / 2) would overflow and the seed error is already negligible.
    if x.abs() < 8.0 {
        for _ in 0..2 {
            let err = normal_cdf(x) - q;
            let u = err * SQRT_2PI * (0.5 * x * x).exp();
            x -= u / (1.0 + 0.5 * x * u);
        }
    }
    x
}

/// Rational approximation to the normal quantile (Acklam's coefficients,
/// quoted verbatim), relative error below 1.15e-9 everywhere.
#[allow(clippy::excessive_precision)]
fn quantile_seed(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const Q_LOW: f64 = 0.02425;

    if q < Q_LOW {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    } else if q <= 1.0 - Q_LOW {
        let r = q - 0.5;
        let s = r * r;
        (((((A[0] * s + A[1]) * s + A[2]) * s + A[3]) * s + A[4]) * s + A[5]) * r
            / (((((B[0] * s + B[1]) * s + B[2]) * s + B[3]) * s + B[4]) * s + 1.0)
    } else {
        let r = (-2.0 * (1.0 - q).ln()).sqrt();
        -(((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    }
}

/// A configured conditional-independence decider over a fixed correlation
/// matrix: either a finite-sample Fisher-z test or the exact population rule.
#[derive(Debug, Clone)]
pub struct CiDecider {
    corr: CorrelationMatrix,
    mode: DeciderMode,
}

#[derive(Debug, Clone)]
enum DeciderMode {
    Sample {
        n: usize,
        alpha: f64,
        /// Upper critical value `Phi^-1(1 - alpha / 2)`, precomputed.
        threshold: f64,
    },
    Population {
        zero_tol: f64,
    },
}

impl CiDecider {
    /// Tolerance below which an exact partial correlation counts as zero.
    pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

    /// Finite-sample decider: level-`alpha` Fisher-z test on `n` observations.
    pub fn sample_test(corr: CorrelationMatrix, n: usize, alpha: f64) -> Result<Self, CiError> {
        if n < 5 {
            return Err(CiError::TooFewSamples { n });
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CiError::BadAlpha { alpha });
        }
        let threshold = normal_quantile(1.0 - alpha / 2.0)?;
        Ok(Self {
            corr,
            mode: DeciderMode::Sample {
                n,
                alpha,
                threshold,
            },
        })
    }

    /// Population decider with the default zero tolerance: declares
    /// independence exactly when the partial correlation vanishes.
    pub fn population_oracle(corr: CorrelationMatrix) -> Self {
        Self::population_oracle_with_tol(corr, Self::DEFAULT_ZERO_TOL)
    }

    pub fn population_oracle_with_tol(corr: CorrelationMatrix, zero_tol: f64) -> Self {
        assert!(
            zero_tol.is_finite() && zero_tol >= 0.0,
            "zero tolerance must be a nonnegative real"
        );
        Self {
            corr,
            mode: DeciderMode::Population { zero_tol },
        }
    }

    pub fn p(&self) -> usize {
        self.corr.p
    }

    pub fn correlation(&self) -> &CorrelationMatrix {
        &self.corr
    }

    pub fn is_population(&self) -> bool {
        matches!(self.mode, DeciderMode::Population { .. })
    }

    pub fn sample_size(&self) -> Option<usize> {
        match self.mode {
            DeciderMode::Sample { n, .. } => Some(n),
            DeciderMode::Population { .. } => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.mode {
            DeciderMode::Sample { alpha, .. } => Some(alpha),
            DeciderMode::Population { .. } => None,
        }
    }

    /// Largest conditioning-set size the decider can test: `n - 4` in sample
    /// mode (the statistic needs `n - |k| - 3 >= 1`), unbounded in
    /// population mode.
    pub fn max_cond_size(&self) -> Option<usize> {
        match self.mode {
            DeciderMode::Sample { n, .. } => Some(n - 4),
            DeciderMode::Population { .. } => None,
        }
    }
}

/// Counts of conditional-independence queries, bucketed by conditioning-set
/// size. Merging per-worker logs yields the global tally.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CiQueryLog {
    per_level: Vec<u64>,
}

impl CiQueryLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, cond_size: usize) {
        if self.per_level.len() <= cond_size {
            self.per_level.resize(cond_size + 1, 0);
        }
        self.per_level[cond_size] += 1;
    }

    pub fn tests_performed(&self) -> u64 {
        self.per_level.iter().sum()
    }

    /// Largest conditioning-set size actually queried, if any test ran.
    pub fn max_cond_size_used(&self) -> Option<usize> {
        self.per_level.iter().rposition(|&c| c > 0)
    }

    pub fn count_at(&self, cond_size: usize) -> u64 {
        self.per_level.get(cond_size).copied().unwrap_or(0)
    }

    /// Counts indexed by conditioning-set size (may include trailing zeros).
    pub fn per_level(&self) -> &[u64] {
        &self.per_level
    }

    pub fn merge(&mut self, other: &CiQueryLog) {
        if self.per_level.len() < other.per_level.len() {
            self.per_level.resize(other.per_level.len(), 0);
        }
        for (mine, theirs) in self.per_level.iter_mut().zip(&other.per_level) {
            *mine += theirs;
        }
    }
}

/// Tests `X_i independent of X_j given cond` under the decider's rule and
/// logs the query. Returns `true` for independence (the null is retained).
pub fn ci_test(
    decider: &CiDecider,
    i: usize,
    j: usize,
    cond: &[usize],
    log: &mut CiQueryLog,
) -> Result<bool, CiError> {
    match decider.mode {
        DeciderMode::Sample { n, threshold, .. } => {
            if cond.len() + 4 > n {
                return Err(CiError::CondSetTooLarge {
                    n,
                    cond_size: cond.len(),
                });
            }
            let rho = partial_correlation(&decider.corr, i, j, cond)?;
            let statistic = ((n - cond.len() - 3) as f64).sqrt() * fisher_z(rho).abs();
            log.record(cond.len());
            Ok(statistic <= threshold)
        }
        DeciderMode::Population { zero_tol } => {
            let rho = partial_correlation(&decider.corr, i, j, cond)?;
            log.record(cond.len());
            Ok(rho.abs() <= zero_tol)
        }
    }
}

/// Cholesky factor of a symmetric positive definite matrix (row-major,
/// dimension `d`); `None` when a pivot is nonpositive or not finite.
fn cholesky(m: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..=r {
            let mut acc = m[r * d + c];
            for k in 0..c {
                acc -= l[r * d + k] * l[c * d + k];
            }
            if r == c {
                if !acc.is_finite() || acc <= 0.0 {
                    return None;
                }
                l[r * d + r] = acc.sqrt();
            } else {
                l[r * d + c] = acc / l[c * d + c];
            }
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
fn spd_inverse(m: &[f64], d: usize) -> Option<Vec<f64>> {
    let l = cholesky(m, d)?;
    // Invert the lower-triangular factor by forward substitution.
    let mut li = vec![0.0; d * d];
    for c in 0..d {
        li[c * d + c] = 1.0 / l[c * d + c];
        for r in (c + 1)..d {
            let mut acc = 0.0;
            for k in c..r {
                acc += l[r * d + k] * li[k * d + c];
            }
            li[r * d + c] = -acc / l[r * d + r];
        }
    }
    // m^-1 = L^-T L^-1; entry (a, b) sums over rows >= max(a, b).
    let mut inv = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..=a {
            let mut acc = 0.0;
            for k in a..d {
                acc += li[k * d + a] * li[k * d + b];
            }
            inv[a * d + b] = acc;
            inv[b * d + a] = acc;
        }
    }
    Some(inv)
}

/// Maximum absolute column sum.
fn one_norm(m: &[f64], d: usize) -> f64 {
    (0..d)
        .map(|c| (0..d).map(|r| m[r * d + c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{random_dag, replicate_rng, sample_data};
    use rand::Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn chain_corr() -> CorrelationMatrix {
        let dag = WeightedDag::from_edges(3, &[(0, 1, 0.5), (1, 2, 0.7)]).unwrap();
        population_correlation(&dag)
    }

    /// Correlation matrix with all off-diagonal entries equal.
    fn equicorrelated(p: usize, rho: f64) -> CorrelationMatrix {
        let mut values = vec![rho; p * p];
        for v in 0..p {
            values[v * p + v] = 1.0;
        }
        CorrelationMatrix::from_values(p, values).unwrap()
    }

    #[test]
    fn sample_correlation_hand_example() {
        let data =
            Dataset::from_rows(vec![vec![1.0, 1.0], vec![2.0, 3.0], vec![3.0, 2.0]]).unwrap();
        let corr = sample_correlation(&data).unwrap();
        // Centered columns (-1, 0, 1) and (-1, 1, 0): r = 1 / sqrt(2 * 2).
        assert!((corr.get(0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(corr.get(0, 0), 1.0);
    }

    #[test]
    fn identical_and_negated_columns_hit_the_clamp() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|r| {
                let x = r as f64 * 0.37 + (r * r) as f64 * 0.011;
                vec![x, x, -x]
            })
            .collect();
        let corr = sample_correlation(&Dataset::from_rows(rows).unwrap()).unwrap();
        assert_eq!(corr.get(0, 1), 1.0);
        assert_eq!(corr.get(0, 2), -1.0);
    }

    #[test]
    fn constant_column_is_degenerate() {
        let rows = vec![vec![1.0, 2.5], vec![2.0, 2.5], vec![3.0, 2.5]];
        let err = sample_correlation(&Dataset::from_rows(rows).unwrap()).unwrap_err();
        assert!(matches!(err, CiError::ZeroVariance { col: 2 }));
    }

    #[test]
    fn sample_correlation_is_psd_when_n_exceeds_p() {
        let mut rng = replicate_rng(11, 0);
        let dag = random_dag(8, 0.3, &mut rng).unwrap();
        let data = sample_data(&dag, 40, &mut rng);
        let corr = sample_correlation(&data).unwrap();
        // Shifting by 1e-8 must make the matrix positive definite, i.e. the
        // smallest eigenvalue is above -1e-8.
        let p = corr.p();
        let mut shifted = corr.values.clone();
        for v in 0..p {
            shifted[v * p + v] += 1e-8;
        }
        assert!(cholesky(&shifted, p).is_some());
    }

    #[test]
    fn population_correlation_of_chain() {
        let corr = chain_corr();
        // rho_12 = 0.5 / sqrt(1.25), rho_23 = 0.875 / sqrt(1.25 * 1.6125),
        // rho_13 = 0.35 / sqrt(1.6125).
        assert!((corr.get(0, 1) - 0.5 / 1.25f64.sqrt()).abs() < 1e-15);
        assert!((corr.get(1, 2) - 0.875 / (1.25f64 * 1.6125).sqrt()).abs() < 1e-15);
        assert!((corr.get(0, 2) - 0.35 / 1.6125f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chain_middle_vertex_blocks() {
        let corr = chain_corr();
        let pc = partial_correlation(&corr, 0, 2, &[1]).unwrap();
        assert!(pc.abs() < 1e-14, "rho_13|2 = {pc}");
        // Marginally the endpoints stay correlated.
        assert!(partial_correlation(&corr, 0, 2, &[]).unwrap() > 0.2);
    }

    #[test]
    fn equicorrelated_recursion_value() {
        // With every correlation 0.5: (0.5 - 0.25) / (1 - 0.25) = 1/3.
        let corr = equicorrelated(3, 0.5);
        let want = 1.0 / 3.0;
        let inv = partial_correlation(&corr, 0, 1, &[2]).unwrap();
        let rec = partial_correlation_recursive(&corr, 0, 1, &[2]).unwrap();
        assert!((inv - want).abs() < 1e-14);
        assert!((rec - want).abs() < 1e-14);
    }

    #[test]
    fn empty_conditioning_set_returns_base_entry() {
        let corr = chain_corr();
        let raw = corr.get(0, 1);
        let via_query = partial_correlation(&corr, 0, 1, &[]).unwrap();
        assert_eq!(raw, via_query); // bit-identical, not merely close
    }

    #[test]
    fn inversion_matches_recursion_on_random_models() {
        let mut rng = replicate_rng(3, 0);
        for round in 0..200 {
            let p = 5 + (round % 4);
            let dag = random_dag(p, 0.5, &mut rng).unwrap();
            let corr = population_correlation(&dag);
            let i = rng.random_range(0..p);
            let j = (i + 1 + rng.random_range(0..p - 1)) % p;
            let mut cond: Vec<usize> = (0..p).filter(|&v| v != i && v != j).collect();
            for k in (1..cond.len()).rev() {
                cond.swap(k, rng.random_range(0..k + 1));
            }
            cond.truncate(rng.random_range(0..=3.min(cond.len())));
            let inv = partial_correlation(&corr, i, j, &cond).unwrap();
            let rec = partial_correlation_recursive(&corr, i, j, &cond).unwrap();
            assert!(
                (inv - rec).abs() <= 1e-8,
                "round {round}: ({i}, {j} | {cond:?}): {inv} vs {rec}"
            );
        }
    }

    #[test]
    fn partial_correlation_is_exactly_symmetric() {
        let mut rng = replicate_rng(17, 0);
        let dag = random_dag(7, 0.6, &mut rng).unwrap();
        let corr = population_correlation(&dag);
        let cond_sets: &[&[usize]] = &[&[], &[4], &[2, 5], &[6, 2, 4]];
        for cond in cond_sets {
            let fwd = partial_correlation(&corr, 0, 1, cond).unwrap();
            let rev = partial_correlation(&corr, 1, 0, cond).unwrap();
            assert_eq!(fwd, rev, "asymmetric for cond {cond:?}");
            let mut shuffled = cond.to_vec();
            shuffled.reverse();
            let reordered = partial_correlation(&corr, 0, 1, &shuffled).unwrap();
            assert_eq!(fwd, reordered, "order-sensitive for cond {cond:?}");
        }
    }

    #[test]
    fn invalid_queries_are_rejected() {
        let corr = chain_corr();
        assert!(partial_correlation(&corr, 1, 1, &[]).is_err());
        assert!(partial_correlation(&corr, 0, 3, &[]).is_err());
        assert!(partial_correlation(&corr, 0, 1, &[0]).is_err());
        assert!(partial_correlation(&corr, 0, 1, &[2, 2]).is_err());
        assert!(partial_correlation(&corr, 0, 1, &[5]).is_err());
        assert!(partial_correlation_recursive(&corr, 0, 1, &[1]).is_err());
    }

    #[test]
    fn perfectly_collinear_conditioning_is_degenerate() {
        // Vertices 2 and 3 perfectly correlated: conditioning on both makes
        // the submatrix singular.
        let values = vec![
            1.0, 0.3, 0.2, 0.2, //
            0.3, 1.0, 0.4, 0.4, //
            0.2, 0.4, 1.0, 1.0, //
            0.2, 0.4, 1.0, 1.0,
        ];
        let corr = CorrelationMatrix::from_values(4, values).unwrap();
        let err = partial_correlation(&corr, 0, 1, &[2, 3]).unwrap_err();
        assert!(matches!(err, CiError::DegenerateSubmatrix { .. }));
    }

    #[test]
    fn recursion_underflow_is_reported() {
        let corr = equicorrelated(3, 1.0 - 1e-15);
        let err = partial_correlation_recursive(&corr, 0, 1, &[2]).unwrap_err();
        assert!(matches!(err, CiError::RecursionUnderflow { .. }));
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn fisher_z_known_value_and_oddness() {
        // atanh(0.5) to 17 digits; allow a couple of ulps.
        assert!((fisher_z(0.5) - 0.54930614433405485).abs() < 5e-16);
        assert_eq!(fisher_z(0.0), 0.0);
        for i in 0..100 {
            let rho = -0.99 + i as f64 * 0.02;
            assert_eq!(fisher_z(-rho), -fisher_z(rho));
            let back = fisher_z_inv(fisher_z(rho));
            assert!((back - rho).abs() < 1e-12);
        }
    }

    #[test]
    fn fisher_z_clamps_at_unit_correlation() {
        let top = fisher_z(1.0);
        assert!(top.is_finite());
        assert_eq!(top, fisher_z(2.0)); // anything past 1 clamps the same
        assert_eq!(fisher_z(-1.0), -top);
        // atanh at the clamp point, i.e. at the double nearest 1 - 1e-12.
        assert!((top - 14.162095209226402).abs() < 1e-9);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn normal_quantile_matches_reference_table() {
        // Reference values computed with mpmath at 30 digits, each for the
        // exact double the literal rounds to (1 - 1e-10 is not symmetric
        // with 1e-10 in binary, hence the differing tail magnitudes).
        const TABLE: &[(f64, f64)] = &[
            (1e-10, -6.3613409024040562),
            (0.0005, -3.2905267314918948),
            (0.01, -2.3263478740408408),
            (0.025, -1.9599639845400542),
            (0.15, -1.0364333894937896),
            (0.5, 0.0),
            (0.85, 1.0364333894937896),
            (0.975, 1.9599639845400542),
            (0.995, 2.5758293035489008),
            (0.9995, 3.2905267314918948),
            (1.0 - 1e-10, 6.3613408896974219),
        ];
        for &(q, want) in TABLE {
            let got = normal_quantile(q).unwrap();
            assert!(
                (got - want).abs() < 1e-9,
                "quantile({q}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn normal_quantile_agrees_with_statrs() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        for i in 1..2000 {
            let q = i as f64 / 2000.0;
            let got = normal_quantile(q).unwrap();
            let want = normal.inverse_cdf(q);
            assert!(
                (got - want).abs() <= 5e-8,
                "quantile({q}) = {got}, statrs {want}"
            );
        }
    }

    #[test]
    fn normal_cdf_agrees_with_statrs() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            let got = normal_cdf(x);
            let want = normal.cdf(x);
            // Smoke comparison: statrs itself is only ~1e-9 accurate in the
            // tails, so this guards against gross errors; precision is
            // pinned by the reference tables above.
            assert!(
                (got - want).abs() <= 1e-8,
                "cdf({x}) = {got}, statrs {want}"
            );
        }
    }

    #[test]
    fn normal_quantile_rejects_bad_arguments() {
        for q in [0.0, 1.0, -0.1, 1.1, f64::NAN] {
            assert!(
                matches!(normal_quantile(q), Err(CiError::QuantileOutOfRange { .. })),
                "accepted {q}"
            );
        }
    }

    #[test]
    fn quantile_and_cdf_round_trip() {
        for i in 1..500 {
            let q = i as f64 / 500.0;
            let x = normal_quantile(q).unwrap();
            assert!((normal_cdf(x) - q).abs() < 1e-13);
        }
    }

    #[test]
    fn sample_decider_rejects_bad_parameters() {
        let corr = chain_corr();
        assert!(matches!(
            CiDecider::sample_test(corr.clone(), 4, 0.05),
            Err(CiError::TooFewSamples { n: 4 })
        ));
        for alpha in [0.0, 1.0, -0.3, 2.0, f64::NAN] {
            assert!(CiDecider::sample_test(corr.clone(), 100, alpha).is_err());
        }
    }

    #[test]
    fn sample_test_threshold_boundary() {
        // Built so that rho_01|2 = (0.4 - 0.25) / 0.75 = 0.2 exactly. With
        // n = 100, the statistic is sqrt(96) * atanh(0.2) = 1.9864, between
        // the 5% critical value 1.9600 and the 4% one 2.0537.
        let values = vec![
            1.0, 0.4, 0.5, //
            0.4, 1.0, 0.5, //
            0.5, 0.5, 1.0,
        ];
        let corr = CorrelationMatrix::from_values(3, values).unwrap();
        let mut log = CiQueryLog::new();
        let at_5pct = CiDecider::sample_test(corr.clone(), 100, 0.05).unwrap();
        assert!(!ci_test(&at_5pct, 0, 1, &[2], &mut log).unwrap());
        let at_4pct = CiDecider::sample_test(corr, 100, 0.04).unwrap();
        assert!(ci_test(&at_4pct, 0, 1, &[2], &mut log).unwrap());
        assert_eq!(log.tests_performed(), 2);
        assert_eq!(log.max_cond_size_used(), Some(1));
    }

    #[test]
    fn sample_test_rejects_oversized_conditioning_sets() {
        let mut rng = replicate_rng(21, 0);
        let dag = random_dag(8, 0.4, &mut rng).unwrap();
        let decider = CiDecider::sample_test(population_correlation(&dag), 8, 0.05).unwrap();
        assert_eq!(decider.max_cond_size(), Some(4));
        let mut log = CiQueryLog::new();
        assert!(ci_test(&decider, 0, 1, &[2, 3, 4, 5], &mut log).is_ok());
        let err = ci_test(&decider, 0, 1, &[2, 3, 4, 5, 6], &mut log).unwrap_err();
        assert!(matches!(err, CiError::CondSetTooLarge { .. }));
    }

    #[test]
    fn population_oracle_reads_exact_zeroes() {
        let corr = chain_corr();
        let oracle = CiDecider::population_oracle(corr);
        assert!(oracle.is_population());
        assert_eq!(oracle.alpha(), None);
        assert_eq!(oracle.max_cond_size(), None);
        let mut log = CiQueryLog::new();
        assert!(ci_test(&oracle, 0, 2, &[1], &mut log).unwrap());
        assert!(!ci_test(&oracle, 0, 2, &[], &mut log).unwrap());
        assert!(!ci_test(&oracle, 0, 1, &[2], &mut log).unwrap());
    }

    #[test]
    fn query_log_counts_and_merges() {
        let mut a = CiQueryLog::new();
        a.record(0);
        a.record(0);
        a.record(2);
        assert_eq!(a.tests_performed(), 3);
        assert_eq!(a.max_cond_size_used(), Some(2));
        assert_eq!(a.count_at(1), 0);
        let mut b = CiQueryLog::new();
        b.record(3);
        b.record(0);
        a.merge(&b);
        assert_eq!(a.tests_performed(), 5);
        assert_eq!(a.count_at(0), 3);
        assert_eq!(a.max_cond_size_used(), Some(3));
        assert_eq!(CiQueryLog::new().max_cond_size_used(), None);
    }

    #[test]
    fn covariance_normalization_validates() {
        assert!(CorrelationMatrix::from_covariance(2, &[1.0, 0.0, 0.0]).is_err());
        let bad_diag = [0.0, 0.0, 0.0, 1.0];
        assert!(matches!(
            CorrelationMatrix::from_covariance(2, &bad_diag),
            Err(CiError::BadCovarianceDiagonal { col: 1 })
        ));
        let sigma = [2.0, 1.0, 1.0, 2.0];
        let corr = CorrelationMatrix::from_covariance(2, &sigma).unwrap();
        // 1 / (sqrt(2) * sqrt(2)) rounds to just below 0.5.
        assert!((corr.get(0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(corr.get(0, 1), corr.get(1, 0));
    }
}
