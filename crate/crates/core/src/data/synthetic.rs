//! Small synthetic binary tasks for examples and tests that should not
//! depend on MNIST being present.

use rand::Rng;

use super::{Label, Sample};
use crate::rng::{self, PolarGaussian};

/// Two isotropic Gaussian classes centred at `+center` and `-center`, where
/// `center` is a random unit direction drawn from `seed` and scaled by
/// `separation / 2`, so train and test parts must come from one call.
/// Labels alternate in expectation (each draw is a fair coin).
pub fn gaussian_blobs(count: usize, dim: usize, separation: f64, noise: f64, seed: u64) -> Vec<Sample> {
    let mut stream = rng::stream(seed);
    let mut gauss = PolarGaussian::new();
    let mut center: Vec<f64> = (0..dim).map(|_| gauss.sample(&mut stream)).collect();
    let norm = center.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    center.iter_mut().for_each(|v| *v *= 0.5 * separation / norm);

    (0..count)
        .map(|_| {
            let y = if stream.random::<bool>() { Label::Pos } else { Label::Neg };
            let x = center
                .iter()
                .map(|&c| y.sign() * c + noise * gauss.sample(&mut stream))
                .collect();
            Sample::new(x, y)
        })
        .collect()
}
