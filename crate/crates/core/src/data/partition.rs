use rand::seq::SliceRandom;

use super::Sample;
use crate::error::{Error, Result};
use crate::rng;

/// One client's local dataset, already split into per-round chunks.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientData<T = Sample> {
    pub client_id: usize,
    /// `rounds[r]` is the chunk used exclusively in round `r + 1`.
    pub rounds: Vec<Vec<T>>,
}

impl<T> ClientData<T> {
    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn len(&self) -> usize {
        self.rounds.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples(&self) -> impl Iterator<Item = &T> {
        self.rounds.iter().flatten()
    }

    /// Applies `f` to every element, keeping the round structure.
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> ClientData<U> {
        ClientData {
            client_id: self.client_id,
            rounds: self
                .rounds
                .iter()
                .map(|chunk| chunk.iter().map(&mut f).collect())
                .collect(),
        }
    }
}

/// Draws `clients * per_client` items uniformly without replacement from
/// `pool` and deals them out in draw order: client `k` receives the `k`-th
/// block of `per_client` draws, cut into `rounds` consecutive chunks.
pub fn distribute_to_clients<T: Clone>(
    pool: &[T],
    clients: usize,
    per_client: usize,
    rounds: usize,
    seed: u64,
) -> Result<Vec<ClientData<T>>> {
    if clients == 0 || per_client == 0 || rounds == 0 {
        return Err(Error::InvalidParameter(format!(
            "K, n and R must be positive (K={clients}, n={per_client}, R={rounds})"
        )));
    }
    if per_client % rounds != 0 {
        return Err(Error::Divisibility {
            n: per_client,
            rounds,
        });
    }
    let needed = clients * per_client;
    if pool.len() < needed {
        return Err(Error::Capacity {
            needed,
            available: pool.len(),
        });
    }

    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut rng::stream(seed));

    let chunk = per_client / rounds;
    let out = order[..needed]
        .chunks_exact(per_client)
        .enumerate()
        .map(|(client_id, drawn)| ClientData {
            client_id,
            rounds: drawn
                .chunks_exact(chunk)
                .map(|ids| ids.iter().map(|&i| pool[i].clone()).collect())
                .collect(),
        })
        .collect();
    Ok(out)
}
