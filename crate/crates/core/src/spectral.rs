//! Effective dimension (participation ratio) and covariance eigenspectra.
//!
//! For a centered activation matrix `Zc` (m x d) with covariance
//! `S = Zc^T Zc / (m - 1)`, the effective dimension is
//! `tr(S)^2 / tr(S^2)`. Both traces are available from whichever Gram
//! matrix is smaller (`Zc Zc^T` or `Zc^T Zc`, they share non-zero
//! eigenvalues), and the `(m - 1)` normalizations cancel, so no
//! eigendecomposition is needed.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cutoff below which eigenvalues count as zero.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Slack allowed when checking that a spectrum accounts for all variance.
const COMPLETE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffDimValue {
    pub value: f64,
    /// Set when the input has no variance; `value` is then 0.
    pub degenerate: bool,
}

impl EffDimValue {
    fn degenerate() -> Self {
        EffDimValue { value: 0.0, degenerate: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Exact,
    Randomized,
}

/// Gaussian-sketch parameters for the randomized eigensolver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizedParams {
    pub oversampling: usize,
    pub power_iters: usize,
    pub seed: u64,
    /// Largest accepted eigen-residual `||S v - lambda v|| / lambda_1`.
    pub tolerance: f64,
}

impl Default for RandomizedParams {
    fn default() -> Self {
        RandomizedParams { oversampling: 10, power_iters: 2, seed: 0, tolerance: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumMethod {
    Exact,
    Randomized(RandomizedParams),
}

/// Leading eigenpairs of a sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    /// Descending, non-negative.
    pub eigenvalues: Vec<f64>,
    /// d x k orthonormal basis, when requested.
    pub components: Option<DMatrix<f64>>,
    /// `tr(S)`, computed from the data regardless of truncation.
    pub total_variance: f64,
    pub method: MethodKind,
}

impl EigenSpectrum {
    /// A spectrum given directly by its eigenvalues, assumed complete.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let total_variance = eigenvalues.iter().sum();
        EigenSpectrum { eigenvalues, components: None, total_variance, method: MethodKind::Exact }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn captured_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn is_complete(&self) -> bool {
        self.captured_variance() >= self.total_variance * (1.0 - COMPLETE_TOL)
    }

    /// Number of eigenvalues above the clamp threshold.
    pub fn numerical_rank(&self) -> usize {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        self.eigenvalues.iter().filter(|&&l| top > 0.0 && l > EIGEN_CLAMP * top).count()
    }

    /// Fraction of total variance captured by the leading `k` eigenvalues.
    pub fn explained_ratio(&self, k: usize) -> f64 {
        if self.total_variance <= 0.0 {
            return 0.0;
        }
        self.eigenvalues.iter().take(k).sum::<f64>() / self.total_variance
    }
}

/// Subtract column means. Returns the centered matrix and the means.
pub fn center(z: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let m = z.nrows();
    if m < 2 {
        return Err(Error::TooFewSamples(m));
    }
    let mean = z.row_mean().transpose();
    let mut centered = z.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    Ok((centered, mean))
}

fn is_degenerate(centered_sq: f64, raw_sq: f64) -> bool {
    // Centering a constant column leaves roundoff of order eps * |mean|.
    let floor = (64.0 * f64::EPSILON).powi(2) * raw_sq;
    centered_sq <= floor
}

/// The smaller of `Zc Zc^T` and `Zc^T Zc`.
fn small_gram(centered: &DMatrix<f64>) -> DMatrix<f64> {
    let t = centered.transpose();
    if centered.nrows() <= centered.ncols() {
        centered * t
    } else {
        t * centered
    }
}

/// Effective dimension from trace identities, without eigendecomposition.
pub fn effdim_trace(z: &DMatrix<f64>) -> Result<EffDimValue> {
    let (centered, _) = center(z)?;
    let total = centered.norm_squared();
    if is_degenerate(total, z.norm_squared()) {
        return Ok(EffDimValue::degenerate());
    }
    let gram = small_gram(&centered);
    Ok(EffDimValue { value: total * total / gram.norm_squared(), degenerate: false })
}

/// Effective dimension from a complete eigenspectrum.
pub fn effdim_from_spectrum(spectrum: &EigenSpectrum) -> Result<EffDimValue> {
    if !spectrum.is_complete() {
        return Err(Error::PartialSpectrum { captured: spectrum.captured_variance(), total: spectrum.total_variance });
    }
    let sum: f64 = spectrum.eigenvalues.iter().sum();
    let sum_sq: f64 = spectrum.eigenvalues.iter().map(|l| l * l).sum();
    if sum <= 0.0 || sum_sq <= 0.0 {
        return Ok(EffDimValue::degenerate());
    }
    Ok(EffDimValue { value: sum * sum / sum_sq, degenerate: false })
}

/// Largest `k` that `eigenspectrum` accepts for an m x d input.
pub fn max_rank(m: usize, d: usize) -> usize {
    m.saturating_sub(1).min(d)
}

/// Top-`k` eigenpairs of the sample covariance of `z`.
pub fn eigenspectrum(
    z: &DMatrix<f64>,
    k: usize,
    method: SpectrumMethod,
    with_components: bool,
) -> Result<EigenSpectrum> {
    let (centered, _) = center(z)?;
    centered_spectrum(&centered, k, method, with_components)
}

/// As [`eigenspectrum`], for input that is already column-centered.
pub fn centered_spectrum(
    centered: &DMatrix<f64>,
    k: usize,
    method: SpectrumMethod,
    with_components: bool,
) -> Result<EigenSpectrum> {
    let (m, d) = centered.shape();
    if m < 2 {
        return Err(Error::TooFewSamples(m));
    }
    let max = max_rank(m, d);
    if k == 0 || k > max {
        return Err(Error::RankRequestTooLarge { requested: k, max });
    }
    let total_variance = centered.norm_squared() / (m - 1) as f64;
    let (mut eigenvalues, components) = match method {
        SpectrumMethod::Exact => exact_pairs(centered, k, with_components),
        SpectrumMethod::Randomized(params) => randomized_pairs(centered, k, with_components, &params)?,
    };
    clamp(&mut eigenvalues);
    Ok(EigenSpectrum {
        eigenvalues,
        components,
        total_variance,
        method: match method {
            SpectrumMethod::Exact => MethodKind::Exact,
            SpectrumMethod::Randomized(_) => MethodKind::Randomized,
        },
    })
}

fn clamp(eigenvalues: &mut [f64]) {
    let top = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    for l in eigenvalues.iter_mut() {
        if *l <= EIGEN_CLAMP * top {
            *l = 0.0;
        }
    }
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
fn sorted_eigen(sym: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn exact_pairs(centered: &DMatrix<f64>, k: usize, with_components: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
    let (m, d) = centered.shape();
    let scale = (m - 1) as f64;
    let (values, vectors) = sorted_eigen(small_gram(centered));
    let eigenvalues: Vec<f64> = values[..k].iter().map(|v| v.max(0.0) / scale).collect();
    if !with_components {
        return (eigenvalues, None);
    }
    let basis = if d <= m {
        vectors.columns(0, k).into_owned()
    } else {
        // Right singular vectors from left ones: v = Zc^T u / sigma.
        let left = vectors.columns(0, k);
        let mut right = centered.transpose() * left;
        for (j, mut col) in right.column_iter_mut().enumerate() {
            let sigma = values[j].max(0.0).sqrt();
            if sigma > 0.0 {
                col /= sigma;
            }
        }
        orthonormalize(right)
    };
    (eigenvalues, Some(basis))
}

/// Orthonormal basis for the columns of `a`, keeping each column's direction
/// (QR with non-negative diagonal of R).
fn orthonormalize(a: DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r_diag[j] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

fn randomized_pairs(
    centered: &DMatrix<f64>,
    k: usize,
    with_components: bool,
    params: &RandomizedParams,
) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
    let (m, d) = centered.shape();
    let scale = (m - 1) as f64;
    let width = (k + params.oversampling.max(1)).min(m.min(d));

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let sketch = DMatrix::from_fn(d, width, |_, _| StandardNormal.sample(&mut rng));
    let transposed = centered.transpose();

    let mut range = orthonormalize(centered * sketch);
    for _ in 0..params.power_iters {
        let co_range = orthonormalize(&transposed * &range);
        range = orthonormalize(centered * co_range);
    }

    // Project onto the range and solve the small problem exactly.
    let projected = range.transpose() * centered;
    let small = &projected * projected.transpose();
    let (values, vectors) = sorted_eigen(small);

    let mut basis = projected.transpose() * vectors.columns(0, k);
    for (j, mut col) in basis.column_iter_mut().enumerate() {
        let sigma = values[j].max(0.0).sqrt();
        if sigma > 0.0 {
            col /= sigma;
        }
    }
    let basis = orthonormalize(basis);
    let eigenvalues: Vec<f64> = values[..k].iter().map(|v| v.max(0.0) / scale).collect();

    let top = values[0].max(0.0);
    if top > 0.0 {
        let image = &transposed * (centered * &basis);
        let mut worst = 0.0_f64;
        for (j, &value) in values[..k].iter().enumerate() {
            let lambda = value.max(0.0);
            let residual = (image.column(j) - basis.column(j) * lambda).norm() / top;
            worst = worst.max(residual);
        }
        if worst > params.tolerance {
            return Err(Error::ConvergenceFailure { residual: worst, tolerance: params.tolerance });
        }
    }

    Ok((eigenvalues, with_components.then_some(basis)))
}
