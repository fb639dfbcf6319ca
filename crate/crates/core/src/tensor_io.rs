//! On-disk activation dumps.
//!
//! A dump is a directory holding a `manifest.json` plus raw little-endian,
//! row-major matrices (one sample per row):
//!
//! ```text
//! dump/
//!   manifest.json
//!   labels.u32          one u32 class index per sample (optional)
//!   head_w.f32          K x d classifier weights (optional)
//!   head_b.f32          K classifier biases (optional)
//!   layer_0.f32         m x d_0 activations of the model input
//!   ...
//!   layer_<L-1>.f32     m x d_{L-1} pre-classifier activations
//! ```
//!
//! Values are always widened to `f64` on load.

use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LABELS_FILE: &str = "labels.u32";
pub const HEAD_WEIGHTS_FILE: &str = "head_w.f32";
pub const HEAD_BIAS_FILE: &str = "head_b.f32";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn extension(self) -> &'static str {
        match self {
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
        }
    }

    fn decode(self, bytes: &[u8], out: &mut Vec<f64>) {
        match self {
            Dtype::F32 => {
                out.extend(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            }
            Dtype::F64 => out.extend(
                bytes.chunks_exact(8).map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]])),
            ),
        }
    }

    fn encode(self, values: impl Iterator<Item = f64>, out: &mut Vec<u8>) {
        match self {
            Dtype::F32 => values.for_each(|v| out.extend_from_slice(&(v as f32).to_le_bytes())),
            Dtype::F64 => values.for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub name: String,
    pub index: usize,
    pub rows: usize,
    pub cols: usize,
    pub dtype: Dtype,
    pub file: String,
    pub byte_offset: u64,
}

impl LayerEntry {
    pub fn byte_len(&self) -> u64 {
        (self.rows * self.cols * self.dtype.size()) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadEntry {
    pub classes: usize,
    pub cols: usize,
    pub dtype: Dtype,
    pub weights_file: String,
    pub bias_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpManifest {
    pub model_name: String,
    pub family: String,
    pub param_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_accuracy: Option<f64>,
    pub sample_count: usize,
    pub layers: Vec<LayerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<HeadEntry>,
}

impl DumpManifest {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// The last layer, which feeds the classifier head.
    pub fn penultimate(&self) -> &LayerEntry {
        self.layers.last().expect("validated manifest has layers")
    }

    pub fn validate(&self) -> Result<()> {
        let violation = |msg: String| Err(Error::InvariantViolation(msg));
        if self.param_count == 0 {
            return violation("param_count must be positive".into());
        }
        if self.sample_count == 0 {
            return violation("sample_count must be positive".into());
        }
        if let Some(acc) = self.reported_accuracy {
            if !(0.0..=1.0).contains(&acc) {
                return violation(format!("reported_accuracy {acc} outside [0, 1]"));
            }
        }
        if self.layers.len() < 2 {
            return Err(Error::TooFewLayers(self.layers.len()));
        }
        for (pos, layer) in self.layers.iter().enumerate() {
            if layer.index != pos {
                return violation(format!(
                    "layer indices must be 0..L-1 in order; position {pos} has index {}",
                    layer.index
                ));
            }
            if layer.rows != self.sample_count {
                return violation(format!(
                    "layer {pos} has {} rows but sample_count is {}",
                    layer.rows, self.sample_count
                ));
            }
            if layer.cols == 0 {
                return violation(format!("layer {pos} has zero columns"));
            }
        }
        if let Some(head) = &self.head {
            if head.classes < 2 {
                return violation(format!("head must have at least 2 classes, found {}", head.classes));
            }
            let d = self.penultimate().cols;
            if head.cols != d {
                return Err(Error::ShapeMismatch(format!(
                    "head has {} columns but penultimate layer has {d}",
                    head.cols
                )));
            }
        }
        Ok(())
    }
}

/// One layer's activations, widened to f64. Rows are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    pub data: DMatrix<f64>,
    pub layer_index: usize,
    pub dtype: Dtype,
}

impl ActivationMatrix {
    pub fn new(data: DMatrix<f64>) -> Self {
        ActivationMatrix { data, layer_index: 0, dtype: Dtype::F64 }
    }

    pub fn from_rows(rows: usize, cols: usize, row_major: &[f64]) -> Self {
        Self::new(DMatrix::from_row_slice(rows, cols, row_major))
    }

    pub fn with_layer_index(mut self, index: usize) -> Self {
        self.layer_index = index;
        self
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }
}

/// Linear classifier `logits = W z + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    /// K x d.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl LinearHead {
    pub fn new(weights: DMatrix<f64>, bias: DVector<f64>) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::ShapeMismatch(format!(
                "head weights have {} rows but bias has {} entries",
                weights.nrows(),
                bias.len()
            )));
        }
        if weights.nrows() < 2 {
            return Err(Error::ShapeMismatch("head needs at least 2 classes".into()));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("head contains non-finite values".into()));
        }
        Ok(LinearHead { weights, bias })
    }

    pub fn classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn cols(&self) -> usize {
        self.weights.ncols()
    }
}

/// Parse and validate a manifest. `path` may name the manifest itself or the
/// dump directory containing it.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<DumpManifest> {
    let path = path.as_ref();
    let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_manifest(&text)
}

pub fn parse_manifest(text: &str) -> Result<DumpManifest> {
    let manifest: DumpManifest = serde_json::from_str(text).map_err(|e| Error::MalformedManifest(e.to_string()))?;
    manifest.validate()?;
    Ok(manifest)
}

/// Canonical manifest text: pretty JSON in field declaration order with a
/// trailing newline.
pub fn manifest_to_string(manifest: &DumpManifest) -> String {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    text
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &DumpManifest) -> Result<()> {
    manifest.validate()?;
    let path = path.as_ref();
    std::fs::write(path, manifest_to_string(manifest)).map_err(|e| Error::io(path, e))
}

/// Row indices for a subsample: `None` means every row in file order.
///
/// Shuffles `0..m` with a ChaCha8 generator seeded from `seed`, keeps the
/// first `limit` and sorts them so reads stay sequential.
pub fn sample_indices(m: usize, limit: Option<usize>, seed: u64) -> Result<Option<Vec<usize>>> {
    match limit {
        None => Ok(None),
        Some(limit) if limit > m => Err(Error::SampleLimitTooLarge { limit, available: m }),
        Some(limit) if limit == m => Ok(None),
        Some(limit) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx: Vec<usize> = (0..m).collect();
            idx.shuffle(&mut rng);
            idx.truncate(limit);
            idx.sort_unstable();
            Ok(Some(idx))
        }
    }
}

/// An opened dump directory with its validated manifest.
#[derive(Debug, Clone)]
pub struct Dump {
    pub dir: PathBuf,
    pub manifest: DumpManifest,
}

impl Dump {
    /// Read the manifest and check that every referenced file is long enough.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let manifest = read_manifest(dir.join(MANIFEST_FILE))?;
        let dump = Dump { dir, manifest };
        for layer in &dump.manifest.layers {
            dump.check_len(&layer.file, layer.byte_offset + layer.byte_len())?;
        }
        if let Some(labels) = &dump.manifest.labels_file {
            dump.check_len(labels, (dump.manifest.sample_count * 4) as u64)?;
        }
        if let Some(head) = &dump.manifest.head {
            let size = head.dtype.size();
            dump.check_len(&head.weights_file, (head.classes * head.cols * size) as u64)?;
            dump.check_len(&head.bias_file, (head.classes * size) as u64)?;
        }
        Ok(dump)
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn check_len(&self, file: &str, needed: u64) -> Result<()> {
        let path = self.path(file);
        let found = std::fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len();
        if found < needed {
            return Err(Error::ShortFile { path, needed, found });
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        self.manifest.sample_count
    }

    pub fn depth(&self) -> usize {
        self.manifest.depth()
    }

    pub fn indices(&self, sample_limit: Option<usize>, seed: u64) -> Result<Option<Vec<usize>>> {
        sample_indices(self.sample_count(), sample_limit, seed)
    }

    /// Load one layer, optionally subsampled to `sample_limit` rows.
    pub fn load_layer(&self, index: usize, sample_limit: Option<usize>, seed: u64) -> Result<ActivationMatrix> {
        let rows = self.indices(sample_limit, seed)?;
        self.load_layer_rows(index, rows.as_deref())
    }

    /// Load one layer restricted to the given file rows (all rows when `None`).
    pub fn load_layer_rows(&self, index: usize, rows: Option<&[usize]>) -> Result<ActivationMatrix> {
        let entry = self.manifest.layers.get(index).ok_or(Error::LayerOutOfRange(index))?;
        let path = self.path(&entry.file);
        let needed = entry.byte_offset + entry.byte_len();
        let mut file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let found = file.metadata().map_err(|e| Error::io(&path, e))?.len();
        if found < needed {
            return Err(Error::ShortFile { path, needed, found });
        }

        let row_bytes = entry.cols * entry.dtype.size();
        let n_rows = rows.map_or(entry.rows, <[usize]>::len);
        let mut values = Vec::with_capacity(n_rows * entry.cols);
        let mut buf = Vec::new();
        match rows {
            None => {
                buf.resize(entry.byte_len() as usize, 0);
                file.seek(SeekFrom::Start(entry.byte_offset))
                    .and_then(|_| file.read_exact(&mut buf))
                    .map_err(|e| Error::io(&path, e))?;
                entry.dtype.decode(&buf, &mut values);
            }
            Some(rows) => {
                buf.resize(row_bytes, 0);
                for &r in rows {
                    if r >= entry.rows {
                        return Err(Error::InvalidArgument(format!("row {r} out of range")));
                    }
                    file.seek(SeekFrom::Start(entry.byte_offset + (r * row_bytes) as u64))
                        .and_then(|_| file.read_exact(&mut buf))
                        .map_err(|e| Error::io(&path, e))?;
                    entry.dtype.decode(&buf, &mut values);
                }
            }
        }

        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let local_row = pos / entry.cols;
            let row = rows.map_or(local_row, |r| r[local_row]);
            return Err(Error::NonFiniteValue { layer: index, row, col: pos % entry.cols });
        }

        Ok(ActivationMatrix {
            data: DMatrix::from_row_slice(n_rows, entry.cols, &values),
            layer_index: index,
            dtype: entry.dtype,
        })
    }

    pub fn load_head(&self) -> Result<LinearHead> {
        let head = self.manifest.head.as_ref().ok_or(Error::HeadAbsent)?;
        let d = self.manifest.penultimate().cols;
        if head.cols != d {
            return Err(Error::ShapeMismatch(format!("head has {} columns but penultimate layer has {d}", head.cols)));
        }
        let weights = self.read_values(&head.weights_file, head.dtype, head.classes * head.cols)?;
        let bias = self.read_values(&head.bias_file, head.dtype, head.classes)?;
        LinearHead::new(DMatrix::from_row_slice(head.classes, head.cols, &weights), DVector::from_vec(bias))
    }

    /// Class labels for the given file rows (all rows when `None`).
    pub fn load_labels(&self, rows: Option<&[usize]>) -> Result<Vec<u32>> {
        let file = self.manifest.labels_file.as_ref().ok_or(Error::LabelsAbsent)?;
        let path = self.path(file);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let m = self.sample_count();
        if bytes.len() < m * 4 {
            return Err(Error::ShortFile { path, needed: (m * 4) as u64, found: bytes.len() as u64 });
        }
        let all: Vec<u32> =
            bytes[..m * 4].chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Ok(match rows {
            None => all,
            Some(rows) => rows.iter().map(|&r| all[r]).collect(),
        })
    }

    fn read_values(&self, file: &str, dtype: Dtype, count: usize) -> Result<Vec<f64>> {
        let path = self.path(file);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let needed = count * dtype.size();
        if bytes.len() < needed {
            return Err(Error::ShortFile { path, needed: needed as u64, found: bytes.len() as u64 });
        }
        let mut out = Vec::with_capacity(count);
        dtype.decode(&bytes[..needed], &mut out);
        Ok(out)
    }
}

/// Everything needed to write a dump directory.
#[derive(Debug, Clone)]
pub struct DumpContents<'a> {
    pub model_name: String,
    pub family: String,
    pub param_count: u64,
    pub reported_accuracy: Option<f64>,
    /// Named layers, input first, pre-classifier last.
    pub layers: Vec<(String, &'a DMatrix<f64>)>,
    pub labels: Option<&'a [u32]>,
    pub head: Option<&'a LinearHead>,
    pub dtype: Dtype,
}

pub fn write_dump(dir: impl AsRef<Path>, contents: &DumpContents<'_>) -> Result<DumpManifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let m = contents.layers.first().map_or(0, |(_, z)| z.nrows());
    let dtype = contents.dtype;

    let mut layers = Vec::with_capacity(contents.layers.len());
    for (index, (name, z)) in contents.layers.iter().enumerate() {
        let file = format!("layer_{index}.{}", dtype.extension());
        write_matrix(&dir.join(&file), z, dtype)?;
        layers.push(LayerEntry {
            name: name.clone(),
            index,
            rows: z.nrows(),
            cols: z.ncols(),
            dtype,
            file,
            byte_offset: 0,
        });
    }

    let labels_file = match contents.labels {
        Some(labels) => {
            let mut bytes = Vec::with_capacity(labels.len() * 4);
            labels.iter().for_each(|l| bytes.extend_from_slice(&l.to_le_bytes()));
            write_bytes(&dir.join(LABELS_FILE), &bytes)?;
            Some(LABELS_FILE.to_string())
        }
        None => None,
    };

    let head = match contents.head {
        Some(head) => {
            // The head is always stored as f32, matching the external layout.
            write_matrix(&dir.join(HEAD_WEIGHTS_FILE), &head.weights, Dtype::F32)?;
            let mut bytes = Vec::new();
            Dtype::F32.encode(head.bias.iter().copied(), &mut bytes);
            write_bytes(&dir.join(HEAD_BIAS_FILE), &bytes)?;
            Some(HeadEntry {
                classes: head.classes(),
                cols: head.cols(),
                dtype: Dtype::F32,
                weights_file: HEAD_WEIGHTS_FILE.into(),
                bias_file: HEAD_BIAS_FILE.into(),
            })
        }
        None => None,
    };

    let manifest = DumpManifest {
        model_name: contents.model_name.clone(),
        family: contents.family.clone(),
        param_count: contents.param_count,
        reported_accuracy: contents.reported_accuracy,
        sample_count: m,
        layers,
        labels_file,
        head,
    };
    write_manifest(dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn write_matrix(path: &Path, z: &DMatrix<f64>, dtype: Dtype) -> Result<()> {
    let mut bytes = Vec::with_capacity(z.len() * dtype.size());
    let row_major = (0..z.nrows()).flat_map(|i| (0..z.ncols()).map(move |j| z[(i, j)]));
    dtype.encode(row_major, &mut bytes);
    write_bytes(path, &bytes)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}
