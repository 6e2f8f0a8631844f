//! Simulation of multi-round federated learning with linear SVMs on random
//! Fourier features, together with the generalization bounds that explain
//! how the number of communication rounds affects test error.
//!
//! The pieces compose in this order: [`data`] loads and partitions MNIST,
//! [`features`] maps inputs through a frozen random Fourier map, [`fl`]
//! runs rounds of local [`trainer`] SGD followed by averaging, [`risk`]
//! scores the result, [`bounds`] evaluates the bounds, and [`experiment`]
//! repeats everything over seeds and grids.

pub mod bounds;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod features;
pub mod fl;
pub mod risk;
pub mod rng;
pub mod selftest;
pub mod trainer;

pub use error::{Error, Result};
