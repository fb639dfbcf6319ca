use std::ffi::{CStr, CString};
use std::ptr;

use geodsig::synth::layered_model;
use geodsig::tensor_io::Dtype;
use geodsig_ffi::*;
use tempfile::tempdir;

fn last_kind() -> Option<String> {
    let p = geodsig_last_error_kind();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned())
}

fn matrix(rows: usize, cols: usize, values: &[f64]) -> *mut GeodsigMatrix {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { geodsig_matrix_new(rows, cols, values.as_ptr(), &mut out) }, GeodsigStatus::Ok);
    out
}

#[test]
fn effdim_of_known_matrices() {
    let square = matrix(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
    let (mut d, mut degenerate) = (0.0, true);
    assert_eq!(unsafe { geodsig_effdim(square, &mut d, &mut degenerate) }, GeodsigStatus::Ok);
    assert_eq!(d, 2.0);
    assert!(!degenerate);
    assert!(last_kind().is_none());

    let flat = matrix(3, 2, &[1.0; 6]);
    assert_eq!(unsafe { geodsig_effdim(flat, &mut d, ptr::null_mut()) }, GeodsigStatus::Ok);
    assert_eq!(d, 0.0);

    let single = matrix(1, 2, &[1.0, 2.0]);
    assert_eq!(unsafe { geodsig_effdim(single, &mut d, ptr::null_mut()) }, GeodsigStatus::InvalidArgument);
    assert_eq!(last_kind().as_deref(), Some("TooFewSamples"));

    unsafe {
        geodsig_matrix_free(square);
        geodsig_matrix_free(flat);
        geodsig_matrix_free(single);
    }
}

#[test]
fn matrix_round_trips_row_major() {
    let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let m = matrix(2, 3, &values);
    let (mut rows, mut cols) = (0, 0);
    assert_eq!(unsafe { geodsig_matrix_shape(m, &mut rows, &mut cols) }, GeodsigStatus::Ok);
    assert_eq!((rows, cols), (2, 3));
    let mut back = [0.0; 6];
    assert_eq!(unsafe { geodsig_matrix_read(m, back.as_mut_ptr(), 6) }, GeodsigStatus::Ok);
    assert_eq!(back, values);
    assert_eq!(unsafe { geodsig_matrix_read(m, back.as_mut_ptr(), 5) }, GeodsigStatus::ShapeMismatch);
    unsafe { geodsig_matrix_free(m) };
}

#[test]
fn null_arguments_are_reported() {
    let mut d = 0.0;
    assert_eq!(unsafe { geodsig_effdim(ptr::null(), &mut d, ptr::null_mut()) }, GeodsigStatus::NullPointer);
    assert_eq!(last_kind().as_deref(), Some("NullPointer"));
    let msg = unsafe { CStr::from_ptr(geodsig_last_error_message()) }.to_str().unwrap();
    assert!(msg.contains("matrix"));
    assert_eq!(unsafe { geodsig_pearson_pvalue(0.5, 10, ptr::null_mut()) }, GeodsigStatus::NullPointer);
    unsafe {
        geodsig_matrix_free(ptr::null_mut());
        geodsig_string_free(ptr::null_mut());
    }
}

#[test]
fn correlation_functions() {
    let x = [1.0, 2.0, 3.0];
    let y = [1.0, 2.0, 4.0];
    let mut r = 0.0;
    assert_eq!(unsafe { geodsig_pearson(x.as_ptr(), y.as_ptr(), 3, &mut r) }, GeodsigStatus::Ok);
    assert!((r - 0.98198).abs() < 1e-5);

    let flat = [2.0; 3];
    assert_eq!(unsafe { geodsig_pearson(x.as_ptr(), flat.as_ptr(), 3, &mut r) }, GeodsigStatus::Numerical);
    assert_eq!(last_kind().as_deref(), Some("ConstantInput"));

    let mut p = 0.0;
    assert_eq!(unsafe { geodsig_pearson_pvalue(0.0, 30, &mut p) }, GeodsigStatus::Ok);
    assert_eq!(p, 1.0);

    let g = [1.0, 3.0, 2.0, 5.0, 4.0, 6.0];
    let a = [2.0, 3.0, 1.0, 6.0, 5.0, 4.0];
    let q = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
    assert_eq!(
        unsafe { geodsig_partial_correlation(g.as_ptr(), a.as_ptr(), q.as_ptr(), 6, &mut r) },
        GeodsigStatus::Ok
    );
    assert!(r.abs() <= 1.0);

    let mut c = 0.0;
    assert_eq!(unsafe { geodsig_total_compression(100.0, 10.0, &mut c) }, GeodsigStatus::Ok);
    assert!((c - (0.1f64).ln()).abs() < 1e-12);
    assert_eq!(unsafe { geodsig_total_compression(0.0, 10.0, &mut c) }, GeodsigStatus::InvalidArgument);
}

#[test]
fn interventions_through_handles() {
    let values: Vec<f64> = (0..60).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
    let z = matrix(20, 3, &values);

    let mut noisy = ptr::null_mut();
    assert_eq!(unsafe { geodsig_perturb(z, GeodsigNoiseKind::Dropout as i32, 1.0, 3, &mut noisy) }, GeodsigStatus::Ok);
    let mut back = vec![1.0; 60];
    unsafe { geodsig_matrix_read(noisy, back.as_mut_ptr(), 60) };
    assert!(back.iter().all(|&v| v == 0.0));
    assert_eq!(unsafe { geodsig_perturb(z, 9, 0.1, 3, &mut noisy) }, GeodsigStatus::InvalidArgument);
    assert_eq!(
        unsafe { geodsig_perturb(z, GeodsigNoiseKind::Dropout as i32, 1.5, 3, &mut noisy) },
        GeodsigStatus::InvalidArgument
    );

    let (mut projected, mut k) = (ptr::null_mut(), 0usize);
    assert_eq!(unsafe { geodsig_pca_project(z, 1.0, &mut projected, &mut k) }, GeodsigStatus::Ok);
    unsafe { geodsig_matrix_read(projected, back.as_mut_ptr(), 60) };
    assert!(back.iter().zip(&values).all(|(a, b)| (a - b).abs() < 1e-8));
    assert!((1..=3).contains(&k));

    unsafe {
        geodsig_matrix_free(z);
        geodsig_matrix_free(noisy);
        geodsig_matrix_free(projected);
    }
}

#[test]
fn dump_signature_and_json() {
    let dir = tempdir().unwrap();
    layered_model(2000, &[10, 5, 2], 16, 0).unwrap().write(dir.path(), Dtype::F32).unwrap();
    let path = CString::new(dir.path().to_str().unwrap()).unwrap();

    let mut dump = ptr::null_mut();
    assert_eq!(unsafe { geodsig_dump_open(path.as_ptr(), &mut dump) }, GeodsigStatus::Ok);
    let (mut depth, mut m) = (0, 0);
    unsafe { geodsig_dump_shape(dump, &mut depth, &mut m) };
    assert_eq!((depth, m), (3, 2000));

    let mut sig = ptr::null_mut();
    assert_eq!(unsafe { geodsig_dump_signature(dump, 500, 0, &mut sig) }, GeodsigStatus::Ok);
    let mut summary = GeodsigSummary::default();
    unsafe { geodsig_signature_summary(sig, &mut summary) };
    assert_eq!(summary.depth, 3);
    assert_eq!(summary.sample_count, 500);
    assert!((summary.input_effdim - 10.0).abs() < 0.6);
    assert!((summary.output_effdim - 2.0).abs() < 0.1);

    let mut effdims = [0.0; 3];
    assert_eq!(unsafe { geodsig_signature_layer_effdims(sig, effdims.as_mut_ptr(), 3) }, GeodsigStatus::Ok);
    assert_eq!(effdims[0], summary.input_effdim);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { geodsig_signature_to_json(sig, &mut json) }, GeodsigStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    assert!(text.contains("\"model_name\": \"synthetic-layered\""));

    // Layers loaded one by one give the same signature.
    let layers: Vec<*mut GeodsigMatrix> = (0..3)
        .map(|i| {
            let mut out = ptr::null_mut();
            assert_eq!(unsafe { geodsig_dump_load_layer(dump, i, 500, 0, &mut out) }, GeodsigStatus::Ok);
            out
        })
        .collect();
    let consts: Vec<*const GeodsigMatrix> = layers.iter().map(|&p| p.cast_const()).collect();
    let mut rebuilt = ptr::null_mut();
    assert_eq!(unsafe { geodsig_signature_from_layers(consts.as_ptr(), 3, &mut rebuilt) }, GeodsigStatus::Ok);
    let mut again = GeodsigSummary::default();
    unsafe { geodsig_signature_summary(rebuilt, &mut again) };
    assert_eq!(again, summary);

    assert_eq!(
        unsafe { geodsig_signature_from_layers(consts.as_ptr(), 1, &mut rebuilt) },
        GeodsigStatus::MalformedInput
    );
    assert_eq!(last_kind().as_deref(), Some("TooFewLayers"));

    unsafe {
        geodsig_string_free(json);
        geodsig_signature_free(sig);
        geodsig_signature_free(rebuilt);
        layers.into_iter().for_each(|p| geodsig_matrix_free(p));
        geodsig_dump_free(dump);
    }
}

#[test]
fn missing_dump_is_an_io_error() {
    let path = CString::new("/nonexistent/geodsig-dump").unwrap();
    let mut dump = ptr::null_mut();
    assert_eq!(unsafe { geodsig_dump_open(path.as_ptr(), &mut dump) }, GeodsigStatus::Io);
    assert!(dump.is_null());
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(geodsig_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
