//! Desk-scale controlled SMILES generation with a diffusion language model.
//!
//! The crate is organized around the pipeline:
//!
//! - [`chem`] - SMILES parsing, validity, canonicalization, randomization
//! - [`analysis`] - scaffolds, fingerprints, descriptors, corpus statistics
//! - [`numeric`] - dense tensors with reverse-mode differentiation
//! - [`diffusion`] - vocabulary, noise schedule, embedding bridge, denoisers
//! - [`guidance`] - structure/property control modules and the two-phase sampler
//! - [`training`] - pretraining and control-module fine-tuning
//! - [`eval`] - generation metrics and report rendering

pub mod analysis;
pub mod chem;
pub mod diffusion;
pub mod eval;
pub mod guidance;
pub mod numeric;
pub mod training;

pub use chem::MoleculeGraph;
pub use numeric::Tensor;
