//! Domain-agnostic Fourier neural operators on irregular and evolving
//! domains, with the supporting pieces needed to train and exercise them at
//! desk scale: a dense-tensor reverse-mode tape, 2D spectral convolutions,
//! geometry encodings (characteristic fields and their tanh smoothing), a
//! bond-based peridynamics simulator for ground truth, dataset generation,
//! and a CLI that ties everything together.

pub mod cli;
pub mod container;
pub mod data;
pub mod error;
pub mod geometry;
pub mod math;
pub mod operator;
pub mod peridynamics;
pub mod tape;
pub mod spectral;
pub mod training;
pub mod tensor;

pub use error::{Error, Result};
