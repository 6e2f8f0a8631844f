//! Random Fourier features for the RBF kernel `exp(-gamma * |x - x'|^2)`.
//!
//! `z(x)_i = sqrt(2/d) * cos(<omega_i, x> + phase_i)` with
//! `omega_i ~ N(0, 2 gamma I)` and `phase_i ~ U[0, 2 pi)`. The map is built
//! once per run and shared by every client, round and trial.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::rng::{self, PolarGaussian};

pub const MNIST_INPUT_DIM: usize = 784;

/// Rows mapped per matrix product in [`FeatureMap::map_batch`].
const BATCH_ROWS: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    /// `d x input_dim` frequency matrix.
    omega: Array2<f64>,
    phase: Array1<f64>,
    gamma: f64,
    seed: u64,
}

impl FeatureMap {
    /// Builds a frozen map; identical `(input_dim, gamma, d, seed)` give
    /// identical maps.
    pub fn new(input_dim: usize, gamma: f64, d: usize, seed: u64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel gamma must be > 0, got {gamma}")));
        }
        if d == 0 || input_dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "feature dimensions must be positive (d={d}, input={input_dim})"
            )));
        }
        let mut stream = rng::stream(seed);
        let mut gauss = PolarGaussian::new();
        let std = (2.0 * gamma).sqrt();
        let omega = Array2::from_shape_simple_fn((d, input_dim), || std * gauss.sample(&mut stream));
        let phase = Array1::from_shape_simple_fn(d, || stream.random::<f64>() * std::f64::consts::TAU);
        Ok(Self {
            omega,
            phase,
            gamma,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.omega.ncols()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn omega(&self) -> ArrayView2<'_, f64> {
        self.omega.view()
    }

    fn scale(&self) -> f64 {
        (2.0 / self.dim() as f64).sqrt()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let scale = self.scale();
        Ok(self
            .omega
            .rows()
            .into_iter()
            .zip(&self.phase)
            .map(|(row, &b)| {
                let proj: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
                scale * (proj + b).cos()
            })
            .collect())
    }

    /// Maps many samples at once through a blocked matrix product.
    pub fn map_batch(&self, samples: &[Sample]) -> Result<Vec<Sample>> {
        let input = self.input_dim();
        if let Some(bad) = samples.iter().find(|s| s.dim() != input) {
            return Err(Error::Dimension {
                expected: input,
                got: bad.dim(),
            });
        }
        let scale = self.scale();
        let omega_t = self.omega.t();
        let mut out = Vec::with_capacity(samples.len());
        for block in samples.chunks(BATCH_ROWS) {
            let flat: Vec<f64> = block.iter().flat_map(|s| s.x.iter().copied()).collect();
            let x = Array2::from_shape_vec((block.len(), input), flat).expect("shape checked above");
            let mut proj = x.dot(&omega_t);
            proj += &self.phase.view().insert_axis(Axis(0));
            proj.mapv_inplace(|v| scale * v.cos());
            out.extend(
                proj.rows()
                    .into_iter()
                    .zip(block)
                    .map(|(row, s)| Sample::new(row.to_vec(), s.y)),
            );
        }
        Ok(out)
    }
}

/// Builds the MNIST-sized map (784 inputs).
pub fn build_feature_map(gamma: f64, d: usize, seed: u64) -> Result<FeatureMap> {
    FeatureMap::new(MNIST_INPUT_DIM, gamma, d, seed)
}

pub fn rbf_kernel(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::gaussian_blobs;
    use crate::data::Label;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn default_dimension_and_determinism() {
        let a = build_feature_map(0.05, 4000, 1).unwrap();
        assert_eq!(a.dim(), 4000);
        assert_eq!(a.input_dim(), 784);
        let b = build_feature_map(0.05, 4000, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, build_feature_map(0.05, 4000, 2).unwrap());
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(build_feature_map(-1.0, 10, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_feature_map(0.0, 10, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_feature_map(0.05, 0, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn frequency_variance_is_two_gamma() {
        let map = FeatureMap::new(50, 0.3, 2000, 4).unwrap();
        let n = map.omega.len() as f64;
        let mean = map.omega.sum() / n;
        let var = map.omega.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((var - 0.6).abs() < 0.01, "var {var}");
        assert!(map.phase.iter().all(|&p| (0.0..std::f64::consts::TAU).contains(&p)));
    }

    #[test]
    fn outputs_bounded_by_scale() {
        let map = FeatureMap::new(10, 0.5, 64, 8).unwrap();
        let bound = (2.0f64 / 64.0).sqrt();
        for s in gaussian_blobs(20, 10, 3.0, 2.0, 1) {
            let z = map.apply(&s.x).unwrap();
            assert_eq!(z.len(), 64);
            assert!(z.iter().all(|v| v.abs() <= bound + 1e-15));
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let map = FeatureMap::new(10, 0.5, 4, 8).unwrap();
        assert!(matches!(
            map.apply(&[0.0; 9]),
            Err(Error::Dimension { expected: 10, got: 9 })
        ));
        assert!(map.map_batch(&[Sample::new(vec![0.0; 3], Label::Pos)]).is_err());
    }

    #[test]
    fn batch_agrees_with_single() {
        let map = FeatureMap::new(30, 0.05, 200, 8).unwrap();
        let samples = gaussian_blobs(700, 30, 2.0, 1.0, 6);
        let batch = map.map_batch(&samples).unwrap();
        for (s, z) in samples.iter().zip(&batch) {
            let single = map.apply(&s.x).unwrap();
            assert_eq!(z.y, s.y);
            for (a, b) in single.iter().zip(&z.x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_inner_product_near_one() {
        let map = FeatureMap::new(30, 0.05, 4000, 2).unwrap();
        for s in gaussian_blobs(10, 30, 2.0, 1.0, 6) {
            let z = map.apply(&s.x).unwrap();
            assert!((dot(&z, &z) - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn kernel_error_shrinks_with_dimension() {
        let gamma = 0.05;
        let data = gaussian_blobs(200, 30, 2.0, 1.0, 12);
        let err = |d: usize| {
            let map = FeatureMap::new(30, gamma, d, 99).unwrap();
            let z = map.map_batch(&data).unwrap();
            (0..100)
                .map(|i| {
                    let (a, b) = (2 * i, 2 * i + 1);
                    (dot(&z[a].x, &z[b].x) - rbf_kernel(gamma, &data[a].x, &data[b].x)).abs()
                })
                .sum::<f64>()
                / 100.0
        };
        let (small, large) = (err(100), err(4000));
        assert!(large <= 0.05, "{large}");
        assert!(large <= small, "{large} vs {small}");
    }
}
