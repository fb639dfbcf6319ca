mod common;

use std::fs;

use common::gaussian_matrix;
use geodsig::tensor_io::{
    manifest_to_string, parse_manifest, read_manifest, write_dump, write_manifest, Dtype, DumpContents, HeadEntry,
    LayerEntry,
};
use geodsig::{Dump, DumpManifest, Error, LinearHead};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use tempfile::tempdir;

fn contents<'a>(layers: &'a [DMatrix<f64>], labels: &'a [u32], head: &'a LinearHead, dtype: Dtype) -> DumpContents<'a> {
    DumpContents {
        model_name: "roundtrip".into(),
        family: "test".into(),
        param_count: 1234,
        reported_accuracy: Some(0.915),
        layers: layers.iter().enumerate().map(|(i, z)| (format!("block{i}"), z)).collect(),
        labels: Some(labels),
        head: Some(head),
        dtype,
    }
}

fn fixture_parts() -> (Vec<DMatrix<f64>>, Vec<u32>, LinearHead) {
    let layers = vec![gaussian_matrix(30, 7, 1), gaussian_matrix(30, 5, 2), gaussian_matrix(30, 4, 3)];
    let labels = (0..30).map(|i| i % 3).collect();
    let head = LinearHead::new(gaussian_matrix(3, 4, 4), DVector::from_vec(vec![0.5, -1.0, 0.25])).unwrap();
    (layers, labels, head)
}

#[test]
fn f64_dump_round_trips_exactly() {
    let dir = tempdir().unwrap();
    let (layers, labels, head) = fixture_parts();
    let written = write_dump(dir.path(), &contents(&layers, &labels, &head, Dtype::F64)).unwrap();
    let dump = Dump::open(dir.path()).unwrap();
    assert_eq!(dump.manifest, written);
    assert_eq!(dump.depth(), 3);
    for (i, z) in layers.iter().enumerate() {
        assert_eq!(&dump.load_layer(i, None, 0).unwrap().data, z);
    }
    assert_eq!(dump.load_labels(None).unwrap(), labels);
    let loaded = dump.load_head().unwrap();
    assert!((loaded.weights - &head.weights).amax() < 1e-6);
    assert!((loaded.bias - &head.bias).amax() < 1e-6);
}

#[test]
fn f32_dump_round_trips_to_single_precision() {
    let dir = tempdir().unwrap();
    let (layers, labels, head) = fixture_parts();
    write_dump(dir.path(), &contents(&layers, &labels, &head, Dtype::F32)).unwrap();
    let dump = Dump::open(dir.path()).unwrap();
    for (i, z) in layers.iter().enumerate() {
        let loaded = dump.load_layer(i, None, 0).unwrap().data;
        assert!((loaded - z).amax() < 1e-6 * z.amax());
    }
}

#[test]
fn subsampling_is_deterministic_and_row_consistent() {
    let dir = tempdir().unwrap();
    let (layers, labels, head) = fixture_parts();
    write_dump(dir.path(), &contents(&layers, &labels, &head, Dtype::F64)).unwrap();
    let dump = Dump::open(dir.path()).unwrap();

    let a = dump.load_layer(1, Some(12), 7).unwrap();
    let b = dump.load_layer(1, Some(12), 7).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows(), 12);

    let rows = dump.indices(Some(12), 7).unwrap().unwrap();
    for (local, &r) in rows.iter().enumerate() {
        assert_eq!(a.data.row(local), layers[1].row(r));
    }
    let sub_labels = dump.load_labels(Some(&rows)).unwrap();
    assert_eq!(sub_labels, rows.iter().map(|&r| labels[r]).collect::<Vec<_>>());

    let full = dump.load_layer(0, Some(30), 7).unwrap();
    assert_eq!(full.data, layers[0]);
    assert!(matches!(dump.load_layer(0, Some(31), 7), Err(Error::SampleLimitTooLarge { limit: 31, available: 30 })));
}

#[test]
fn truncated_layer_file_is_reported() {
    let dir = tempdir().unwrap();
    let (layers, labels, head) = fixture_parts();
    let manifest = write_dump(dir.path(), &contents(&layers, &labels, &head, Dtype::F32)).unwrap();
    let path = dir.path().join(&manifest.layers[1].file);
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
    match Dump::open(dir.path()) {
        Err(Error::ShortFile { needed, found, .. }) => assert_eq!(needed, found + 4),
        other => panic!("expected ShortFile, got {other:?}"),
    }
}

#[test]
fn non_finite_value_reports_position() {
    let dir = tempdir().unwrap();
    let (mut layers, labels, head) = fixture_parts();
    layers[2][(17, 3)] = f64::NAN;
    write_dump(dir.path(), &contents(&layers, &labels, &head, Dtype::F32)).unwrap();
    let dump = Dump::open(dir.path()).unwrap();
    assert!(matches!(dump.load_layer(2, None, 0), Err(Error::NonFiniteValue { layer: 2, row: 17, col: 3 })));
    assert!(dump.load_layer(1, None, 0).is_ok());
}

#[test]
fn head_and_labels_absent() {
    let dir = tempdir().unwrap();
    let (layers, _, _) = fixture_parts();
    write_dump(
        dir.path(),
        &DumpContents {
            model_name: "bare".into(),
            family: "test".into(),
            param_count: 1,
            reported_accuracy: None,
            layers: layers.iter().map(|z| ("l".to_string(), z)).collect(),
            labels: None,
            head: None,
            dtype: Dtype::F32,
        },
    )
    .unwrap();
    let dump = Dump::open(dir.path()).unwrap();
    assert!(matches!(dump.load_head(), Err(Error::HeadAbsent)));
    assert!(matches!(dump.load_labels(None), Err(Error::LabelsAbsent)));
}

#[test]
fn manifest_file_round_trip_is_canonical() {
    let dir = tempdir().unwrap();
    let (layers, labels, head) = fixture_parts();
    write_dump(dir.path(), &contents(&layers, &labels, &head, Dtype::F32)).unwrap();
    let path = dir.path().join("manifest.json");
    let original = fs::read_to_string(&path).unwrap();
    let copy = dir.path().join("copy.json");
    write_manifest(&copy, &read_manifest(&path).unwrap()).unwrap();
    assert_eq!(fs::read_to_string(copy).unwrap(), original);
}

fn manifest_strategy() -> impl Strategy<Value = DumpManifest> {
    (
        "[a-z][a-z0-9_-]{0,12}",
        "[a-z]{1,8}",
        1u64..u64::MAX / 2,
        proptest::option::of(0.0f64..=1.0),
        1usize..5000,
        proptest::collection::vec((1usize..4096, prop_oneof![Just(Dtype::F32), Just(Dtype::F64)]), 2..8),
        any::<bool>(),
        proptest::option::of(2usize..50),
    )
        .prop_map(|(name, family, params, acc, m, shapes, labels, classes)| {
            let layers: Vec<LayerEntry> = shapes
                .iter()
                .enumerate()
                .map(|(index, &(cols, dtype))| LayerEntry {
                    name: format!("layer{index}"),
                    index,
                    rows: m,
                    cols,
                    dtype,
                    file: format!("layer_{index}.bin"),
                    byte_offset: 0,
                })
                .collect();
            let d = layers.last().unwrap().cols;
            DumpManifest {
                model_name: name,
                family,
                param_count: params,
                reported_accuracy: acc,
                sample_count: m,
                layers,
                labels_file: labels.then(|| "labels.u32".into()),
                head: classes.map(|k| HeadEntry {
                    classes: k,
                    cols: d,
                    dtype: Dtype::F32,
                    weights_file: "head_w.f32".into(),
                    bias_file: "head_b.f32".into(),
                }),
            }
        })
}

proptest! {
    #[test]
    fn manifest_text_round_trips(manifest in manifest_strategy()) {
        let text = manifest_to_string(&manifest);
        let parsed = parse_manifest(&text).unwrap();
        prop_assert_eq!(&parsed, &manifest);
        prop_assert_eq!(manifest_to_string(&parsed), text);
    }
}
