//! Layer-wise effective-dimension signatures of neural network activations.
//!
//! Reads activation dumps, computes per-layer effective dimension and the
//! derived signature, correlates signatures with accuracy across a corpus of
//! models, and runs noise and PCA interventions on pre-classifier features.

pub mod cli;
pub mod config;
pub mod error;
pub mod intervene;
pub mod plot;
pub mod seed;
pub mod signatures;
pub mod spectral;
pub mod stats;
pub mod synth;
pub mod tensor_io;

pub use error::{Error, Result};
pub use intervene::{evaluate_head, noise_sweep, pca_project, pca_sweep, perturb, NoiseKind, NoiseSpec};
pub use signatures::{extract_signature, total_compression, GeometrySignature, SignatureRecord};
pub use spectral::{effdim_trace, eigenspectrum, EffDimValue, EigenSpectrum, SpectrumMethod};
pub use tensor_io::{ActivationMatrix, Dump, DumpManifest, LinearHead};
