use std::borrow::Cow;

use rand::seq::SliceRandom;

use super::{ClientData, Sample};
use crate::error::{Error, Result};
use crate::rng::{self, PolarGaussian};

/// Clients after heterogeneity noise, each paired with its own test view.
#[derive(Debug, Clone)]
pub struct NoisyClients<'a> {
    pub clients: Vec<ClientData>,
    /// Test set seen by each client, in the same order as `clients`.
    /// Clean clients borrow the shared test set.
    pub tests: Vec<Cow<'a, [Sample]>>,
    pub noisy: Vec<bool>,
}

/// Number of clients that receive noise for a given fraction.
pub(crate) fn noisy_count(fraction: f64, clients: usize) -> usize {
    // Guard against products such as 0.3 * 10 = 3.0000000000000004.
    ((fraction * clients as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Picks which client positions are noisy: the first `ceil(fraction * K)`
/// positions of a seeded shuffle.
pub(crate) fn select_noisy(fraction: f64, clients: usize, seed: u64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..clients).collect();
    order.shuffle(&mut rng::stream(rng::derive_seed(seed, &[0])));
    let mut noisy = vec![false; clients];
    for &pos in &order[..noisy_count(fraction, clients).min(clients)] {
        noisy[pos] = true;
    }
    noisy
}

pub(crate) fn add_noise(samples: &mut [Sample], sigma: f64, seed: u64) {
    let mut stream = rng::stream(seed);
    let mut gauss = PolarGaussian::new();
    for s in samples {
        for v in &mut s.x {
            *v += sigma * gauss.sample(&mut stream);
        }
    }
}

pub(crate) fn train_noise_seed(seed: u64, client_id: usize) -> u64 {
    rng::derive_seed(seed, &[1, client_id as u64])
}

pub(crate) fn test_noise_seed(seed: u64, client_id: usize) -> u64 {
    rng::derive_seed(seed, &[2, client_id as u64])
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every feature of the training
/// samples and of a private test copy for a seeded `fraction` of clients.
pub fn inject_client_noise<'a>(
    clients: &[ClientData],
    test: &'a [Sample],
    sigma: f64,
    fraction: f64,
    seed: u64,
) -> Result<NoisyClients<'a>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!("noise fraction {fraction} outside [0, 1]")));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise sigma {sigma} must be >= 0")));
    }
    let noisy = select_noisy(fraction, clients.len(), seed);
    let mut out_clients = Vec::with_capacity(clients.len());
    let mut tests = Vec::with_capacity(clients.len());
    for (client, &is_noisy) in clients.iter().zip(&noisy) {
        let mut client = client.clone();
        if is_noisy && sigma > 0.0 {
            let mut flat: Vec<Sample> = client.rounds.concat();
            add_noise(&mut flat, sigma, train_noise_seed(seed, client.client_id));
            let mut it = flat.into_iter();
            for chunk in &mut client.rounds {
                for slot in chunk.iter_mut() {
                    *slot = it.next().expect("sizes preserved");
                }
            }
            let mut own = test.to_vec();
            add_noise(&mut own, sigma, test_noise_seed(seed, client.client_id));
            tests.push(Cow::Owned(own));
        } else {
            tests.push(Cow::Borrowed(test));
        }
        out_clients.push(client);
    }
    Ok(NoisyClients {
        clients: out_clients,
        tests,
        noisy,
    })
}
