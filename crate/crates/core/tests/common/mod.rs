//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

pub fn gaussian_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Random orthogonal matrix from the QR of a Gaussian matrix.
pub fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    gaussian_matrix(d, d, seed).qr().q()
}

/// Covariance eigenvalues from the singular values of the centered matrix.
pub fn covariance_eigenvalues_svd(z: &DMatrix<f64>) -> Vec<f64> {
    let m = z.nrows();
    let mut c = z.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let svd = if c.nrows() >= c.ncols() { c.svd(false, false) } else { c.transpose().svd(false, false) };
    let mut ev: Vec<f64> = svd.singular_values.iter().map(|s| s * s / (m - 1) as f64).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Participation ratio of a list of eigenvalues.
pub fn participation_ratio(ev: &[f64]) -> f64 {
    let s: f64 = ev.iter().sum();
    let s2: f64 = ev.iter().map(|l| l * l).sum();
    s * s / s2
}

/// Pearson r from z-scores with population standard deviations.
pub fn pearson_zscores(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let stats = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
        (mean, sd)
    };
    let ((mx, sx), (my, sy)) = (stats(x), stats(y));
    x.iter().zip(y).map(|(a, b)| ((a - mx) / sx) * ((b - my) / sy)).sum::<f64>() / n
}

/// Two-sided p-value of `r` with `df` degrees of freedom, by composite
/// Simpson integration of the Student-t density over `[0, |t|]`.
pub fn t_test_pvalue_by_quadrature(r: f64, df: f64) -> f64 {
    let t = (r * (df / (1.0 - r * r)).sqrt()).abs();
    let log_norm = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let density = |u: f64| (log_norm - (df + 1.0) / 2.0 * (1.0 + u * u / df).ln()).exp();
    let panels = 200_000;
    let h = t / panels as f64;
    let mut acc = density(0.0) + density(t);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * density(i as f64 * h);
    }
    let half_mass = acc * h / 3.0;
    (1.0 - 2.0 * half_mass).clamp(0.0, 1.0)
}
