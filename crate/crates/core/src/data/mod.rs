//! Dataset ingestion: IDX decoding, binary task extraction, standardization,
//! client partitioning and heterogeneity noise.

mod idx;
mod noise;
mod partition;
pub mod synthetic;
mod task;

pub use idx::{decode_images, decode_labels, load_mnist_idx, RawImageSet, IMAGES_MAGIC, LABELS_MAGIC};
pub use noise::{inject_client_noise, NoisyClients};
pub use partition::{distribute_to_clients, ClientData};
pub use task::{extract_binary_task, standardize, Standardizer};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }
}

/// A feature vector with its binary label.
///
/// The same type is used in pixel space (length 784 after standardization)
/// and in random-feature space (length `d`).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Label,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Label) -> Self {
        Self { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}
