//! Emotion-recognition toolkit for multimodal biosignal studies.
//!
//! The crate covers the whole batch pipeline: the dataset model and on-disk
//! format ([`dataset`]), DSP kernels ([`dsp`]), trial conditioning with CAR and
//! FastICA ([`preprocessing`]), the EEG/EDA/BVP/temperature feature set
//! ([`features`]), clustering, cluster validation and ground-truth labeling
//! ([`labeling`]), SMO and L1-linear SVMs ([`svm`]), nested leave-one-clip-out
//! evaluation ([`evaluation`]), repeated-measures statistics ([`stats`]) and a
//! seeded synthetic data generator ([`synth`]).

pub mod dataset;
pub mod dsp;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod labeling;
pub mod preprocessing;
pub mod seeds;
pub mod stats;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
