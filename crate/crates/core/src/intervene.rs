//! Causal interventions on pre-classifier activations.
//!
//! Degradation: four noise kinds at increasing levels. Improvement: PCA
//! projection onto the leading components at a variance threshold. Each
//! intervened matrix is re-scored through the model's linear head and its
//! effective dimension recomputed on the same samples.
//!
//! Additive noise (gaussian, uniform) is scaled by the global standard
//! deviation `s` of the activation entries, so a level of 0.3 means noise at
//! 30% of the typical activation magnitude. Dropout zeroes entries without
//! rescaling survivors. Salt-and-pepper replaces entries with their column's
//! batch maximum or minimum, each with half the corruption probability.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{domain, domain_seed};
use crate::spectral::{self, center, centered_spectrum, effdim_trace, EigenSpectrum, SpectrumMethod};
use crate::stats::correlation::{pearson, pearson_pvalue};
use crate::tensor_io::{Dump, LinearHead};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Uniform,
    Dropout,
    SaltPepper,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] =
        [NoiseKind::Gaussian, NoiseKind::Uniform, NoiseKind::Dropout, NoiseKind::SaltPepper];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Uniform => "uniform",
            NoiseKind::Dropout => "dropout",
            NoiseKind::SaltPepper => "salt_pepper",
        }
    }

    fn stream(self) -> u64 {
        self as u64
    }

    fn is_probability(self) -> bool {
        matches!(self, NoiseKind::Dropout | NoiseKind::SaltPepper)
    }

    /// Five-level schedule used when no levels are given.
    pub fn default_levels(self) -> Vec<f64> {
        match self {
            NoiseKind::SaltPepper => vec![0.05, 0.10, 0.15, 0.20, 0.25],
            _ => vec![0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseKind::Gaussian),
            "uniform" => Ok(NoiseKind::Uniform),
            "dropout" => Ok(NoiseKind::Dropout),
            "salt_pepper" | "salt-pepper" | "saltpepper" => Ok(NoiseKind::SaltPepper),
            other => Err(Error::InvalidArgument(format!("unknown noise kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Standard deviation (gaussian), half-range (uniform) or probability.
    pub level: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = if self.kind.is_probability() {
            (0.0..=1.0).contains(&self.level)
        } else {
            self.level >= 0.0 && self.level.is_finite()
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid {} level {}", self.kind, self.level)))
        }
    }
}

fn global_std(z: &DMatrix<f64>) -> f64 {
    let n = z.len() as f64;
    let mean = z.sum() / n;
    (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Apply one noise spec. The random draws do not depend on `level`, so a
/// sweep over levels with one seed perturbs the same entries progressively.
pub fn perturb(z: &DMatrix<f64>, spec: &NoiseSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if spec.level == 0.0 {
        return Ok(z.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = z.clone();
    let level = spec.level;
    match spec.kind {
        NoiseKind::Gaussian => {
            let scale = level * global_std(z);
            for v in out.iter_mut() {
                let eta: f64 = StandardNormal.sample(&mut rng);
                *v += scale * eta;
            }
        }
        NoiseKind::Uniform => {
            let scale = level * global_std(z);
            for v in out.iter_mut() {
                let u: f64 = rng.random_range(-1.0..1.0);
                *v += scale * u;
            }
        }
        NoiseKind::Dropout => {
            for v in out.iter_mut() {
                let u: f64 = rng.random();
                if u < level {
                    *v = 0.0;
                }
            }
        }
        NoiseKind::SaltPepper => {
            let maxima: Vec<f64> = z.column_iter().map(|c| c.max()).collect();
            let minima: Vec<f64> = z.column_iter().map(|c| c.min()).collect();
            for (j, mut col) in out.column_iter_mut().enumerate() {
                for v in col.iter_mut() {
                    let u: f64 = rng.random();
                    let salt: bool = rng.random();
                    if u < level {
                        *v = if salt { maxima[j] } else { minima[j] };
                    }
                }
            }
        }
    }
    Ok(out)
}

/// How the PCA basis is computed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvdMethod {
    /// Exact below the width cutoff, randomized above it.
    #[default]
    Auto,
    Exact,
    Randomized,
}

/// Column count above which `Auto` switches to the randomized solver.
pub const RANDOMIZED_WIDTH: usize = 1000;

#[derive(Debug, Clone)]
pub struct PcaProjection {
    pub projected: DMatrix<f64>,
    pub components_kept: usize,
    pub spectrum: EigenSpectrum,
}

const THRESHOLD_SLACK: f64 = 1e-9;

fn components_for(spectrum: &EigenSpectrum, threshold: f64) -> Option<usize> {
    let target = (threshold - THRESHOLD_SLACK) * spectrum.total_variance;
    let mut cum = 0.0;
    for (i, l) in spectrum.eigenvalues.iter().enumerate() {
        cum += l;
        if cum >= target {
            return Some(i + 1);
        }
    }
    None
}

/// Reconstruct `z` from the fewest leading principal components whose
/// cumulative explained variance reaches `threshold`.
pub fn pca_project(
    z: &DMatrix<f64>,
    threshold: f64,
    solver: SvdMethod,
    randomized: spectral::RandomizedParams,
) -> Result<PcaProjection> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!("variance threshold {threshold} outside (0, 1]")));
    }
    project(z, Keep::Threshold(threshold), solver, randomized)
}

/// Reconstruct `z` from exactly its `k` leading principal components.
pub fn pca_project_components(
    z: &DMatrix<f64>,
    k: usize,
    solver: SvdMethod,
    randomized: spectral::RandomizedParams,
) -> Result<PcaProjection> {
    let max = spectral::max_rank(z.nrows(), z.ncols());
    if k == 0 || k > max {
        return Err(Error::RankRequestTooLarge { requested: k, max });
    }
    project(z, Keep::Components(k), solver, randomized)
}

#[derive(Debug, Clone, Copy)]
enum Keep {
    Threshold(f64),
    Components(usize),
}

impl Keep {
    fn count(self, spectrum: &EigenSpectrum) -> Option<usize> {
        match self {
            Keep::Threshold(t) => components_for(spectrum, t),
            Keep::Components(k) => (k <= spectrum.len()).then_some(k),
        }
    }
}

fn project(
    z: &DMatrix<f64>,
    keep: Keep,
    solver: SvdMethod,
    randomized: spectral::RandomizedParams,
) -> Result<PcaProjection> {
    let (centered, mean) = center(z)?;
    let (m, d) = centered.shape();
    if centered.norm_squared() <= (64.0 * f64::EPSILON).powi(2) * z.norm_squared() {
        return Err(Error::DegenerateInput);
    }
    let max = spectral::max_rank(m, d);
    let use_randomized = match solver {
        SvdMethod::Auto => d > RANDOMIZED_WIDTH,
        SvdMethod::Exact => false,
        SvdMethod::Randomized => true,
    };

    let (spectrum, kept) = if use_randomized {
        let mut width = match keep {
            Keep::Components(k) => k.max(max.min(64)),
            Keep::Threshold(_) => max.min(64),
        };
        loop {
            let spectrum = if width == max {
                centered_spectrum(&centered, width, SpectrumMethod::Exact, true)?
            } else {
                centered_spectrum(&centered, width, SpectrumMethod::Randomized(randomized), true)?
            };
            if let Some(k) = keep.count(&spectrum) {
                break (spectrum, k);
            }
            if width == max {
                break (spectrum, max);
            }
            width = (width * 2).min(max);
        }
    } else {
        let spectrum = centered_spectrum(&centered, max, SpectrumMethod::Exact, true)?;
        let k = keep.count(&spectrum).unwrap_or(max);
        (spectrum, k)
    };
    let rank = spectrum.numerical_rank();
    let kept = kept.min(rank.max(1));

    let projected = if kept >= rank && spectrum.is_complete() {
        // Projection onto the full row space is the identity.
        z.clone()
    } else {
        let basis = spectrum.components.as_ref().expect("components requested").columns(0, kept);
        let mut out = (&centered * basis) * basis.transpose();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.add_scalar_mut(mean[j]);
        }
        out
    };
    Ok(PcaProjection { projected, components_kept: kept, spectrum })
}

/// Fraction of rows whose arg-max logit matches the label. Ties go to the
/// lowest class index.
pub fn evaluate_head(z: &DMatrix<f64>, head: &LinearHead, labels: &[u32]) -> Result<f64> {
    if z.ncols() != head.cols() {
        return Err(Error::ShapeMismatch(format!(
            "activations have {} columns, head expects {}",
            z.ncols(),
            head.cols()
        )));
    }
    if labels.len() != z.nrows() {
        return Err(Error::ShapeMismatch(format!("{} labels for {} rows", labels.len(), z.nrows())));
    }
    let classes = head.classes();
    if let Some(&label) = labels.iter().find(|&&l| l as usize >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    if labels.is_empty() {
        return Err(Error::TooFewSamples(0));
    }
    let logits = z * head.weights.transpose();
    let correct = logits
        .row_iter()
        .zip(labels)
        .filter(|(row, &label)| {
            let mut best = 0;
            for c in 1..classes {
                if row[c] + head.bias[c] > row[best] + head.bias[best] {
                    best = c;
                }
            }
            best == label as usize
        })
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Pre-classifier activations with their labels and head.
#[derive(Debug, Clone)]
pub struct SweepInput {
    pub model_name: String,
    pub activations: DMatrix<f64>,
    pub labels: Vec<u32>,
    pub head: LinearHead,
}

impl SweepInput {
    pub fn load(dump: &Dump, sample_limit: Option<usize>, seed: u64) -> Result<Self> {
        let head = dump.load_head()?;
        if dump.manifest.labels_file.is_none() {
            return Err(Error::LabelsAbsent);
        }
        let rows = dump.indices(sample_limit, seed)?;
        let activations = dump.load_layer_rows(dump.depth() - 1, rows.as_deref())?.data;
        let labels = dump.load_labels(rows.as_deref())?;
        Ok(SweepInput { model_name: dump.manifest.model_name.clone(), activations, labels, head })
    }

    fn baseline(&self) -> Result<InterventionOutcome> {
        let effdim = effdim_trace(&self.activations)?.value;
        let accuracy = evaluate_head(&self.activations, &self.head, &self.labels)?;
        Ok(InterventionOutcome {
            label: "baseline".into(),
            kind: None,
            level: 0.0,
            effdim,
            accuracy,
            delta_effdim: 0.0,
            delta_accuracy_pp: 0.0,
            components_kept: None,
        })
    }

    fn outcome(
        &self,
        baseline: &InterventionOutcome,
        z: &DMatrix<f64>,
        label: String,
        kind: Option<NoiseKind>,
        level: f64,
        components_kept: Option<usize>,
    ) -> Result<InterventionOutcome> {
        let effdim = effdim_trace(z)?.value;
        let accuracy = evaluate_head(z, &self.head, &self.labels)?;
        Ok(InterventionOutcome {
            label,
            kind,
            level,
            effdim,
            accuracy,
            delta_effdim: effdim - baseline.effdim,
            delta_accuracy_pp: 100.0 * (accuracy - baseline.accuracy),
            components_kept,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionOutcome {
    pub label: String,
    pub kind: Option<NoiseKind>,
    /// Noise level, or variance threshold for PCA.
    pub level: f64,
    pub effdim: f64,
    pub accuracy: f64,
    pub delta_effdim: f64,
    pub delta_accuracy_pp: f64,
    pub components_kept: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub baseline: InterventionOutcome,
    pub outcomes: Vec<InterventionOutcome>,
    /// Pearson of (delta_effdim, delta_accuracy_pp) over `outcomes`; absent
    /// with fewer than 3 outcomes or when either delta is constant.
    pub pooled_r: Option<f64>,
    pub pooled_p: Option<f64>,
}

fn pooled(outcomes: &[&InterventionOutcome]) -> Result<(Option<f64>, Option<f64>)> {
    if outcomes.len() < 3 {
        return Ok((None, None));
    }
    let de: Vec<f64> = outcomes.iter().map(|o| o.delta_effdim).collect();
    let da: Vec<f64> = outcomes.iter().map(|o| o.delta_accuracy_pp).collect();
    match pearson(&de, &da) {
        Ok(r) => Ok((Some(r), Some(pearson_pvalue(r, de.len())?))),
        Err(Error::ConstantInput) => Ok((None, None)),
        Err(e) => Err(e),
    }
}

impl SweepReport {
    fn new(name: String, baseline: InterventionOutcome, outcomes: Vec<InterventionOutcome>) -> Result<Self> {
        let (pooled_r, pooled_p) = pooled(&outcomes.iter().collect::<Vec<_>>())?;
        Ok(SweepReport { name, baseline, outcomes, pooled_r, pooled_p })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepReport {
    pub baseline: InterventionOutcome,
    pub per_kind: Vec<SweepReport>,
    pub pooled_r: Option<f64>,
    pub pooled_p: Option<f64>,
}

/// Run every `(kind, levels)` schedule against the same baseline.
///
/// Each kind draws from its own stream derived from `seed`; levels within a
/// kind share that stream.
pub fn noise_sweep(input: &SweepInput, schedule: &[(NoiseKind, Vec<f64>)], seed: u64) -> Result<NoiseSweepReport> {
    let baseline = input.baseline()?;
    let cells: Vec<(usize, NoiseKind, f64)> = schedule
        .iter()
        .enumerate()
        .flat_map(|(i, (kind, levels))| levels.iter().map(move |&l| (i, *kind, l)))
        .collect();
    for &(_, kind, level) in &cells {
        NoiseSpec { kind, level, seed }.validate()?;
    }
    let outcomes = cells
        .par_iter()
        .map(|&(_, kind, level)| {
            let spec = NoiseSpec { kind, level, seed: domain_seed(seed, domain::NOISE, kind.stream()) };
            let z = perturb(&input.activations, &spec)?;
            input.outcome(&baseline, &z, format!("{kind}@{level}"), Some(kind), level, None)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_kind = Vec::with_capacity(schedule.len());
    for (i, (kind, _)) in schedule.iter().enumerate() {
        let rows: Vec<InterventionOutcome> =
            cells.iter().zip(&outcomes).filter(|((k, _, _), _)| *k == i).map(|(_, o)| o.clone()).collect();
        per_kind.push(SweepReport::new(kind.name().to_string(), baseline.clone(), rows)?);
    }
    let (pooled_r, pooled_p) = pooled(&outcomes.iter().collect::<Vec<_>>())?;
    Ok(NoiseSweepReport { baseline, per_kind, pooled_r, pooled_p })
}

/// Project at each variance threshold and re-score.
pub fn pca_sweep(
    input: &SweepInput,
    thresholds: &[f64],
    solver: SvdMethod,
    randomized: spectral::RandomizedParams,
) -> Result<SweepReport> {
    let baseline = input.baseline()?;
    let outcomes = thresholds
        .par_iter()
        .map(|&t| {
            let proj = pca_project(&input.activations, t, solver, randomized)?;
            input.outcome(&baseline, &proj.projected, format!("pca@{t}"), None, t, Some(proj.components_kept))
        })
        .collect::<Result<Vec<_>>>()?;
    SweepReport::new("pca".into(), baseline, outcomes)
}

pub const NOISE_CSV_HEADER: [&str; 5] = ["noise_type", "param", "effdim", "delta_effdim", "delta_acc_pp"];
pub const PCA_CSV_HEADER: [&str; 6] = ["model", "variance_pct", "components", "effdim", "delta_effdim", "delta_acc_pp"];

pub fn noise_csv(report: &NoiseSweepReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(NOISE_CSV_HEADER).expect("in-memory write");
    for sweep in &report.per_kind {
        for o in &sweep.outcomes {
            w.write_record([
                sweep.name.clone(),
                o.level.to_string(),
                o.effdim.to_string(),
                o.delta_effdim.to_string(),
                o.delta_accuracy_pp.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn pca_csv(model: &str, report: &SweepReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PCA_CSV_HEADER).expect("in-memory write");
    for o in &report.outcomes {
        w.write_record([
            model.to_string(),
            (o.level * 100.0).to_string(),
            o.components_kept.map(|k| k.to_string()).unwrap_or_default(),
            o.effdim.to_string(),
            o.delta_effdim.to_string(),
            o.delta_accuracy_pp.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn random(m: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, d, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn level_zero_is_identity() {
        let z = random(20, 5, 1);
        for kind in NoiseKind::ALL {
            let out = perturb(&z, &NoiseSpec { kind, level: 0.0, seed: 3 }).unwrap();
            assert_eq!(out, z);
        }
    }

    #[test]
    fn full_dropout_zeroes_everything() {
        let z = random(20, 5, 2);
        let out = perturb(&z, &NoiseSpec { kind: NoiseKind::Dropout, level: 1.0, seed: 0 }).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dropout_rate_concentrates() {
        let z = DMatrix::from_element(300, 300, 1.0);
        let out = perturb(&z, &NoiseSpec { kind: NoiseKind::Dropout, level: 0.5, seed: 4 }).unwrap();
        let zeros = out.iter().filter(|&&v| v == 0.0).count() as f64 / out.len() as f64;
        assert!((zeros - 0.5).abs() < 0.01, "{zeros}");
    }

    #[test]
    fn salt_pepper_uses_column_extremes() {
        let z = random(200, 4, 5);
        let out = perturb(&z, &NoiseSpec { kind: NoiseKind::SaltPepper, level: 0.3, seed: 6 }).unwrap();
        for j in 0..4 {
            let (mx, mn) = (z.column(j).max(), z.column(j).min());
            for i in 0..200 {
                let v = out[(i, j)];
                assert!(v == z[(i, j)] || v == mx || v == mn);
            }
        }
    }

    #[test]
    fn invalid_levels() {
        let z = random(5, 2, 7);
        assert!(perturb(&z, &NoiseSpec { kind: NoiseKind::Dropout, level: 1.5, seed: 0 }).is_err());
        assert!(perturb(&z, &NoiseSpec { kind: NoiseKind::Gaussian, level: -0.1, seed: 0 }).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in NoiseKind::ALL {
            assert_eq!(kind.name().parse::<NoiseKind>().unwrap(), kind);
        }
        assert!("pink".parse::<NoiseKind>().is_err());
    }

    #[test]
    fn head_examples() {
        let head = LinearHead::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let z = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        assert_eq!(evaluate_head(&z, &head, &[0, 1]).unwrap(), 1.0);
        assert_eq!(evaluate_head(&z, &head, &[1, 0]).unwrap(), 0.0);
        let tie = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert_eq!(evaluate_head(&tie, &head, &[0]).unwrap(), 1.0);
        assert!(matches!(evaluate_head(&z, &head, &[0, 2]), Err(Error::LabelOutOfRange { label: 2, .. })));
        assert!(matches!(evaluate_head(&z, &head, &[0]), Err(Error::ShapeMismatch(_))));
        let wide = DMatrix::zeros(2, 3);
        assert!(matches!(evaluate_head(&wide, &head, &[0, 1]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn pca_full_threshold_reconstructs() {
        let z = random(40, 6, 8);
        let p = pca_project(&z, 1.0, SvdMethod::Exact, Default::default()).unwrap();
        assert_eq!(p.components_kept, 6);
        assert!((p.projected - &z).amax() < 1e-8);
    }

    #[test]
    fn pca_low_rank_input() {
        let a = random(30, 3, 9);
        let b = random(3, 8, 10);
        let z = a * b;
        let p = pca_project(&z, 0.99, SvdMethod::Exact, Default::default()).unwrap();
        assert_eq!(p.components_kept, 3);
        assert!((p.projected - &z).amax() < 1e-8);
    }

    #[test]
    fn pca_rejects_constant_input() {
        let z = DMatrix::from_element(10, 3, 2.0);
        assert!(matches!(pca_project(&z, 0.9, SvdMethod::Exact, Default::default()), Err(Error::DegenerateInput)));
        assert!(pca_project(&random(10, 3, 1), 0.0, SvdMethod::Exact, Default::default()).is_err());
    }

    #[test]
    fn fixed_count_projection_is_idempotent() {
        let z = random(60, 12, 12);
        let once = pca_project_components(&z, 4, SvdMethod::Exact, Default::default()).unwrap();
        let twice = pca_project_components(&once.projected, 4, SvdMethod::Exact, Default::default()).unwrap();
        assert!((&twice.projected - &once.projected).amax() < 1e-8);
        assert!(pca_project_components(&z, 13, SvdMethod::Exact, Default::default()).is_err());
    }

    #[test]
    fn projection_is_stable() {
        let z = random(50, 10, 11);
        let once = pca_project(&z, 0.7, SvdMethod::Exact, Default::default()).unwrap();
        assert!(once.components_kept < 10);
        // The output has rank k, so a full-variance pass keeps exactly k.
        let twice = pca_project(&once.projected, 1.0, SvdMethod::Exact, Default::default()).unwrap();
        assert_eq!(twice.components_kept, once.components_kept);
        assert!((&twice.projected - &once.projected).amax() < 1e-8);
        assert_relative_eq!(
            effdim_trace(&once.projected).unwrap().value,
            effdim_trace(&twice.projected).unwrap().value,
            max_relative = 1e-8
        );
    }
}
