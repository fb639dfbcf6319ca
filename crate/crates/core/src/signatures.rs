//! Per-model geometric signatures built from per-layer effective dimensions.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{effdim_trace, EffDimValue};
use crate::tensor_io::{ActivationMatrix, Dump};

/// Feature names of [`GeometrySignature::vector`], in order.
pub const SIGNATURE_FEATURES: [&str; 6] = ["C", "d_1", "d_out", "d_min", "d_max", "L"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySignature {
    pub per_layer_effdim: Vec<f64>,
    /// Layers with zero variance; their entries in `per_layer_effdim` are 0.
    #[serde(default)]
    pub degenerate_layers: Vec<usize>,
    pub total_compression: f64,
    pub output_effdim: f64,
    pub bottleneck_effdim: f64,
    pub max_effdim: f64,
    pub transformation_magnitude: f64,
    pub depth: usize,
    pub sample_count: usize,
}

impl GeometrySignature {
    pub fn input_effdim(&self) -> f64 {
        self.per_layer_effdim[0]
    }

    /// `[C, d_1, d_out, d_min, d_max, L]`.
    pub fn vector(&self) -> [f64; 6] {
        [
            self.total_compression,
            self.input_effdim(),
            self.output_effdim,
            self.bottleneck_effdim,
            self.max_effdim,
            self.depth as f64,
        ]
    }

    /// Assemble a signature from already computed per-layer values.
    pub fn from_effdims(values: &[EffDimValue], sample_count: usize) -> Result<Self> {
        let depth = values.len();
        if depth < 2 {
            return Err(Error::TooFewLayers(depth));
        }
        if values[0].degenerate {
            return Err(Error::DegenerateEndpoint(0));
        }
        if values[depth - 1].degenerate {
            return Err(Error::DegenerateEndpoint(depth - 1));
        }
        let per_layer_effdim: Vec<f64> = values.iter().map(|v| v.value).collect();
        let degenerate_layers = values.iter().enumerate().filter(|(_, v)| v.degenerate).map(|(i, _)| i).collect();
        let live = values.iter().filter(|v| !v.degenerate).map(|v| v.value);
        let bottleneck_effdim = live.clone().fold(f64::INFINITY, f64::min);
        let max_effdim = live.fold(f64::NEG_INFINITY, f64::max);
        let total_compression = total_compression(per_layer_effdim[0], per_layer_effdim[depth - 1])?;
        Ok(GeometrySignature {
            output_effdim: per_layer_effdim[depth - 1],
            per_layer_effdim,
            degenerate_layers,
            total_compression,
            bottleneck_effdim,
            max_effdim,
            transformation_magnitude: total_compression.abs(),
            depth,
            sample_count,
        })
    }
}

/// `ln(d_last / d_first)`; negative when the network compresses.
pub fn total_compression(d_first: f64, d_last: f64) -> Result<f64> {
    for d in [d_first, d_last] {
        if !d.is_finite() || d <= 0.0 {
            return Err(Error::NonPositiveDimension(d));
        }
    }
    Ok((d_last / d_first).ln())
}

/// Effective dimension of every layer plus the summary scalars.
pub fn extract_signature(layers: &[ActivationMatrix]) -> Result<GeometrySignature> {
    if layers.len() < 2 {
        return Err(Error::TooFewLayers(layers.len()));
    }
    let m = layers[0].rows();
    if let Some((layer, z)) = layers.iter().enumerate().find(|(_, z)| z.rows() != m) {
        return Err(Error::MixedSampleCounts { layer, rows: z.rows(), expected: m });
    }
    let values = layers.par_iter().map(|z| effdim_trace(&z.data)).collect::<Result<Vec<_>>>()?;
    GeometrySignature::from_effdims(&values, m)
}

/// Signature of every layer in a dump, all layers sharing one row subset.
pub fn dump_signature(dump: &Dump, sample_limit: Option<usize>, seed: u64) -> Result<SignatureRecord> {
    let rows = dump.indices(sample_limit, seed)?;
    let values = (0..dump.depth())
        .into_par_iter()
        .map(|i| effdim_trace(&dump.load_layer_rows(i, rows.as_deref())?.data))
        .collect::<Result<Vec<_>>>()?;
    let m = rows.as_ref().map_or(dump.sample_count(), Vec::len);
    let manifest = &dump.manifest;
    Ok(SignatureRecord {
        model_name: manifest.model_name.clone(),
        family: manifest.family.clone(),
        param_count: manifest.param_count,
        accuracy: manifest.reported_accuracy,
        signature: GeometrySignature::from_effdims(&values, m)?,
    })
}

pub fn signature_vector(sig: &GeometrySignature) -> [f64; 6] {
    sig.vector()
}

/// A signature tagged with model metadata, the unit written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureRecord {
    pub model_name: String,
    pub family: String,
    pub param_count: u64,
    pub accuracy: Option<f64>,
    pub signature: GeometrySignature,
}

pub const SIGNATURE_CSV_HEADER: [&str; 11] =
    ["model_name", "family", "param_count", "accuracy", "C", "d_1", "d_out", "d_min", "d_max", "L", "abs_C"];

impl SignatureRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn csv_row(&self) -> Vec<String> {
        let sig = &self.signature;
        vec![
            self.model_name.clone(),
            self.family.clone(),
            self.param_count.to_string(),
            self.accuracy.map(|a| a.to_string()).unwrap_or_default(),
            sig.total_compression.to_string(),
            sig.input_effdim().to_string(),
            sig.output_effdim.to_string(),
            sig.bottleneck_effdim.to_string(),
            sig.max_effdim.to_string(),
            sig.depth.to_string(),
            sig.transformation_magnitude.to_string(),
        ]
    }
}

/// Write records as CSV with [`SIGNATURE_CSV_HEADER`].
pub fn write_signature_csv<W: Write>(out: W, records: &[SignatureRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::MalformedCsv(e.to_string());
    w.write_record(SIGNATURE_CSV_HEADER).map_err(err)?;
    for r in records {
        w.write_record(r.csv_row()).map_err(err)?;
    }
    w.flush().map_err(|e| Error::MalformedCsv(e.to_string()))
}
