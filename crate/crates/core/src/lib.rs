//! Quantum neural network layers simulated on dense state vectors, with
//! classical backpropagation through stacked layers.

pub mod approx;
pub mod data;
pub mod error;
pub mod grad;
pub mod layers;
pub mod network;
pub mod pqc;
pub mod simcore;

pub use error::{QdnnError, Result};
