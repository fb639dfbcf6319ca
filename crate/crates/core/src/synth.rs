//! Synthetic activation dumps with known geometry.
//!
//! `layered_model` stacks isotropic Gaussian layers whose intrinsic dimension
//! shrinks from layer to layer, so the expected effective dimensions are the
//! layer ranks. `mixture_model` builds a balanced Gaussian class mixture in a
//! low-dimensional signal subspace buried in isotropic noise, together with
//! the matched linear head; its population spectrum is known in closed form.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{domain, domain_seed};
use crate::tensor_io::{write_dump, Dtype, DumpContents, DumpManifest, LinearHead};

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `d x k` matrix with orthonormal columns, uniformly distributed.
pub fn random_orthonormal(d: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qr = gaussian(d, k, &mut rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q.columns(0, k).into_owned();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[derive(Debug, Clone)]
pub struct SyntheticModel {
    pub name: String,
    pub family: String,
    /// Input first, pre-classifier last.
    pub layers: Vec<(String, DMatrix<f64>)>,
    pub labels: Option<Vec<u32>>,
    pub head: Option<LinearHead>,
}

impl SyntheticModel {
    pub fn penultimate(&self) -> &DMatrix<f64> {
        &self.layers.last().expect("at least two layers").1
    }

    pub fn write(&self, dir: impl AsRef<Path>, dtype: Dtype) -> Result<DumpManifest> {
        let param_count = self.layers.windows(2).map(|w| (w[0].1.ncols() * w[1].1.ncols()) as u64).sum();
        write_dump(
            dir,
            &DumpContents {
                model_name: self.name.clone(),
                family: self.family.clone(),
                param_count,
                reported_accuracy: None,
                layers: self.layers.iter().map(|(n, z)| (n.clone(), z)).collect(),
                labels: self.labels.as_deref(),
                head: self.head.as_ref(),
                dtype,
            },
        )
    }
}

/// Layers of isotropic Gaussian data with the given ranks, each embedded in
/// `width` columns by its own random rotation.
pub fn layered_model(samples: usize, ranks: &[usize], width: usize, seed: u64) -> Result<SyntheticModel> {
    if ranks.len() < 2 {
        return Err(Error::TooFewLayers(ranks.len()));
    }
    if let Some(&k) = ranks.iter().find(|&&k| k == 0 || k > width) {
        return Err(Error::InvalidArgument(format!("layer rank {k} outside 1..={width}")));
    }
    if samples < 2 {
        return Err(Error::TooFewSamples(samples));
    }
    let layers = ranks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mut rng = ChaCha8Rng::seed_from_u64(domain_seed(seed, domain::SYNTH, 2 * i as u64));
            let basis = random_orthonormal(width, k, domain_seed(seed, domain::SYNTH, 2 * i as u64 + 1));
            (format!("layer{i}"), gaussian(samples, k, &mut rng) * basis.transpose())
        })
        .collect();
    Ok(SyntheticModel {
        name: "synthetic-layered".into(),
        family: "synthetic".into(),
        layers,
        labels: None,
        head: None,
    })
}

/// Balanced class mixture in a `classes`-dimensional signal subspace.
///
/// Row `i` has label `i mod classes` and latent code
/// `separation * e_y + within_class * g + shared_spread * g0 * 1 / sqrt(K)`
/// with standard Gaussian `g`, `g0`. The code is rotated into `width`
/// columns and isotropic noise of scale `noise` is added. The head scores
/// each class by its matched filter, which is Bayes-optimal here; the shared
/// component moves every logit equally and leaves predictions unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub samples: usize,
    pub width: usize,
    pub classes: usize,
    pub separation: f64,
    pub within_class: f64,
    pub shared_spread: f64,
    pub noise: f64,
    /// Width of the input layer, which carries the same code with unit noise.
    pub input_width: usize,
    pub seed: u64,
}

impl Default for MixtureParams {
    fn default() -> Self {
        MixtureParams {
            samples: 4000,
            width: 512,
            classes: 10,
            separation: 3.2,
            within_class: 0.85,
            shared_spread: 1.0,
            noise: 0.5,
            input_width: 64,
            seed: 0,
        }
    }
}

impl MixtureParams {
    /// Covariance eigenvalues of the pre-classifier layer, descending.
    pub fn population_spectrum(&self) -> Vec<f64> {
        let k = self.classes as f64;
        let (t2, s2) = (self.within_class.powi(2), self.noise.powi(2));
        let mut out = Vec::with_capacity(self.width);
        out.extend(std::iter::repeat_n(self.separation.powi(2) / k + t2 + s2, self.classes - 1));
        out.push(t2 + self.shared_spread.powi(2) + s2);
        out.extend(std::iter::repeat_n(s2, self.width - self.classes));
        out.sort_by(|a, b| b.total_cmp(a));
        out
    }

    /// Population fraction of variance in the leading `k` components.
    pub fn population_explained(&self, k: usize) -> f64 {
        let spec = self.population_spectrum();
        spec.iter().take(k).sum::<f64>() / spec.iter().sum::<f64>()
    }

    fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.classes > self.width || self.classes > self.input_width {
            return Err(Error::InvalidArgument(format!(
                "{} classes do not fit widths {} and {}",
                self.classes, self.input_width, self.width
            )));
        }
        if self.samples < self.classes {
            return Err(Error::TooFewSamples(self.samples));
        }
        Ok(())
    }
}

pub fn mixture_model(params: &MixtureParams) -> Result<SyntheticModel> {
    params.validate()?;
    let MixtureParams { samples: m, width: d, classes: k, .. } = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(domain_seed(params.seed, domain::SYNTH, 0));
    let labels: Vec<u32> = (0..m).map(|i| (i % k) as u32).collect();

    let shared = gaussian(m, 1, &mut rng);
    let mut latent = gaussian(m, k, &mut rng) * params.within_class;
    let spread = params.shared_spread / (k as f64).sqrt();
    for (i, &y) in labels.iter().enumerate() {
        latent[(i, y as usize)] += params.separation;
        for c in 0..k {
            latent[(i, c)] += spread * shared[i];
        }
    }

    let basis = random_orthonormal(d, k, domain_seed(params.seed, domain::SYNTH, 1));
    let penultimate = &latent * basis.transpose() + gaussian(m, d, &mut rng) * params.noise;

    let input_basis = random_orthonormal(params.input_width, k, domain_seed(params.seed, domain::SYNTH, 2));
    let input = &latent * input_basis.transpose() + gaussian(m, params.input_width, &mut rng);

    let weights = basis.transpose() * params.separation;
    let bias = DVector::from_element(k, -0.5 * params.separation.powi(2));
    let head = LinearHead::new(weights, bias)?;
    Ok(SyntheticModel {
        name: "synthetic-mixture".into(),
        family: "synthetic".into(),
        layers: vec![("input".into(), input), ("penultimate".into(), penultimate)],
        labels: Some(labels),
        head: Some(head),
    })
}
