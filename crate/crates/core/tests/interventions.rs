mod common;

use common::gaussian_matrix;
use geodsig::intervene::{pca_project_components, SvdMethod, SweepInput};
use geodsig::spectral::RandomizedParams;
use geodsig::synth::{mixture_model, random_orthonormal, MixtureParams};
use geodsig::{effdim_trace, noise_sweep, pca_project, pca_sweep, NoiseKind};
use nalgebra::DMatrix;

fn sweep_input(params: &MixtureParams) -> SweepInput {
    let model = mixture_model(params).unwrap();
    SweepInput {
        model_name: model.name.clone(),
        activations: model.penultimate().clone(),
        labels: model.labels.clone().unwrap(),
        head: model.head.clone().unwrap(),
    }
}

fn project(z: &DMatrix<f64>, threshold: f64) -> geodsig::intervene::PcaProjection {
    pca_project(z, threshold, SvdMethod::Exact, RandomizedParams::default()).unwrap()
}

#[test]
fn effdim_grows_with_noise_level() {
    let input = sweep_input(&MixtureParams::default());
    let schedule: Vec<_> = NoiseKind::ALL.iter().map(|&k| (k, k.default_levels())).collect();
    for seed in 0..5 {
        let report = noise_sweep(&input, &schedule, seed).unwrap();
        for kind in &report.per_kind {
            let mut prev = report.baseline.effdim;
            for row in &kind.outcomes {
                assert!(row.effdim >= prev, "{} seed {seed}: {} after {prev}", kind.name, row.effdim);
                prev = row.effdim;
            }
        }
    }
}

#[test]
fn level_zero_and_full_threshold_change_nothing() {
    let input = sweep_input(&MixtureParams { samples: 1000, ..Default::default() });
    let schedule: Vec<_> = NoiseKind::ALL.iter().map(|&k| (k, vec![0.0])).collect();
    let report = noise_sweep(&input, &schedule, 3).unwrap();
    for row in report.per_kind.iter().flat_map(|k| &k.outcomes) {
        assert!(row.delta_effdim.abs() < 1e-8 * report.baseline.effdim);
        assert!(row.delta_accuracy_pp.abs() < 1e-8);
    }

    let pca = pca_sweep(&input, &[1.0], SvdMethod::Exact, RandomizedParams::default()).unwrap();
    let row = &pca.outcomes[0];
    assert_eq!(row.delta_accuracy_pp, 0.0);
    assert!(row.delta_effdim.abs() < 1e-8 * pca.baseline.effdim);
}

#[test]
fn five_dim_signal_survives_ninety_percent_projection() {
    let params = MixtureParams { samples: 2000, classes: 5, noise: 0.05, ..Default::default() };
    assert!(params.population_explained(5) > 0.9 && params.population_explained(4) < 0.9);
    let input = sweep_input(&params);
    let report = pca_sweep(&input, &[0.90], SvdMethod::Exact, RandomizedParams::default()).unwrap();
    let row = &report.outcomes[0];
    assert_eq!(row.components_kept, Some(5));
    assert!(row.delta_accuracy_pp.abs() <= 0.5, "{}", row.delta_accuracy_pp);
}

#[test]
fn analytic_cumulative_variance_selects_five() {
    // Five directions with variance 10 and 507 with variance 0.01: the top five hold 50/55.07.
    let (m, d) = (2000, 512);
    let basis = random_orthonormal(d, d, 21);
    let mut latent = gaussian_matrix(m, d, 22);
    for (j, mut col) in latent.column_iter_mut().enumerate() {
        col *= if j < 5 { 10f64.sqrt() } else { 0.1 };
    }
    let z = latent * basis.transpose();
    assert_eq!(project(&z, 0.90).components_kept, 5);
}

#[test]
fn kept_components_shrink_with_threshold() {
    let z = gaussian_matrix(120, 30, 5)
        * DMatrix::from_fn(30, 30, |i, j| if i == j { 1.0 / (1.0 + i as f64) } else { 0.0 });
    let mut prev = usize::MAX;
    for t in [1.0, 0.99, 0.95, 0.9, 0.8, 0.7, 0.5, 0.2] {
        let k = project(&z, t).components_kept;
        assert!(k <= prev, "threshold {t}: {k} after {prev}");
        prev = k;
    }
}

#[test]
fn reconstruction_error_matches_discarded_singular_values() {
    let z = gaussian_matrix(25, 8, 9);
    let mut centered = z.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let sv = centered.svd(false, false).singular_values;
    let mut sv: Vec<f64> = sv.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));

    let mut prev = f64::INFINITY;
    for k in 1..=8 {
        let proj = pca_project_components(&z, k, SvdMethod::Exact, RandomizedParams::default()).unwrap();
        let err = (&proj.projected - &z).norm();
        let oracle = sv[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((err - oracle).abs() < 1e-9 * z.norm(), "k = {k}: {err} vs {oracle}");
        assert!(err < prev || (k == 8 && err < 1e-9));
        prev = err;
    }
}

#[test]
fn randomized_projection_agrees_with_exact() {
    let (m, d) = (400, 1200);
    let basis = random_orthonormal(d, 12, 31);
    let z = gaussian_matrix(m, 12, 32) * 3.0 * basis.transpose() + gaussian_matrix(m, d, 33) * 0.05;
    let exact = project(&z, 0.5);
    let fast = pca_project(&z, 0.5, SvdMethod::Randomized, RandomizedParams::default()).unwrap();
    assert_eq!(exact.components_kept, fast.components_kept);
    assert!((&exact.projected - &fast.projected).amax() < 1e-6 * z.amax());
    let (a, b) = (effdim_trace(&exact.projected).unwrap().value, effdim_trace(&fast.projected).unwrap().value);
    assert!((a - b).abs() < 1e-6 * a);
}
