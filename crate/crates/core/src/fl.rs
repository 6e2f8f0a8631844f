//! The R-round protocol: every client trains locally from the last aggregate
//! on its chunk for the round, then the server averages the local models.

use crate::data::{ClientData, Sample};
use crate::error::{Error, Result};
use crate::rng;
use crate::trainer::{train_round, Model, TrainerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct FlConfig {
    pub clients: usize,
    pub rounds: usize,
    /// Samples per client over all rounds.
    pub per_client: usize,
    pub trainer: TrainerConfig,
    pub seed: u64,
}

impl FlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clients == 0 || self.rounds == 0 || self.per_client == 0 {
            return Err(Error::InvalidParameter(format!(
                "K, R and n must be positive (K={}, R={}, n={})",
                self.clients, self.rounds, self.per_client
            )));
        }
        if self.per_client % self.rounds != 0 {
            return Err(Error::Divisibility {
                n: self.per_client,
                rounds: self.rounds,
            });
        }
        self.trainer.validate()
    }

    pub fn chunk_len(&self) -> usize {
        self.per_client / self.rounds
    }
}

/// Models produced in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// Local models ordered by client id.
    pub locals: Vec<Model>,
    pub aggregate: Model,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundTrace {
    pub rounds: Vec<RoundRecord>,
}

impl RoundTrace {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// The aggregate that initialised round `r` (1-based), i.e. the one
    /// produced by round `r - 1`; `None` for round 1, which starts at zero.
    pub fn init_of(&self, round: usize) -> Option<&Model> {
        round.checked_sub(2).map(|i| &self.rounds[i].aggregate)
    }
}

/// Coordinatewise arithmetic mean.
pub fn aggregate(models: &[Model]) -> Result<Model> {
    let first = models.first().ok_or(Error::EmptyInput("aggregate needs at least one model"))?;
    let dim = first.dim();
    let mut sum = vec![0.0; dim];
    for m in models {
        if m.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: m.dim(),
            });
        }
        for (acc, &v) in sum.iter_mut().zip(m.weights()) {
            *acc += v;
        }
    }
    let k = models.len() as f64;
    sum.iter_mut().for_each(|v| *v /= k);
    Ok(Model::from_vec(sum))
}

/// Seed for the local training of `client_id` in `round` (1-based).
pub fn local_seed(master: u64, client_id: usize, round: usize) -> u64 {
    rng::derive_seed(master, &[client_id as u64, round as u64])
}

/// Receives every local training call the simulator makes.
pub trait RoundObserver {
    fn local_update(&mut self, round: usize, client_id: usize, chunk: &[Sample]);
}

impl RoundObserver for () {
    fn local_update(&mut self, _: usize, _: usize, _: &[Sample]) {}
}

/// Runs the protocol from the zero model and returns the final aggregate with
/// the full trace.
pub fn run_fl(clients: &[ClientData], cfg: &FlConfig) -> Result<(Model, RoundTrace)> {
    run_fl_observed(clients, cfg, &mut ())
}

pub fn run_fl_observed(
    clients: &[ClientData],
    cfg: &FlConfig,
    observer: &mut impl RoundObserver,
) -> Result<(Model, RoundTrace)> {
    cfg.validate()?;
    if clients.len() != cfg.clients {
        return Err(Error::Config(format!(
            "{} clients supplied for K = {}",
            clients.len(),
            cfg.clients
        )));
    }
    for c in clients {
        if c.num_rounds() != cfg.rounds || c.rounds.iter().any(|r| r.len() != cfg.chunk_len()) {
            return Err(Error::Config(format!(
                "client {} does not hold {} chunks of {} samples",
                c.client_id,
                cfg.rounds,
                cfg.chunk_len()
            )));
        }
    }
    let dim = clients[0].rounds[0][0].dim();

    // Aggregation order follows client id so that reordering the input list
    // leaves every aggregate bitwise unchanged.
    let mut by_id: Vec<&ClientData> = clients.iter().collect();
    by_id.sort_by_key(|c| c.client_id);
    if by_id.windows(2).any(|w| w[0].client_id == w[1].client_id) {
        return Err(Error::Config("duplicate client ids".into()));
    }

    let mut current = Model::zeros(dim);
    let mut trace = RoundTrace {
        rounds: Vec::with_capacity(cfg.rounds),
    };
    for round in 1..=cfg.rounds {
        let mut locals = Vec::with_capacity(by_id.len());
        for client in &by_id {
            let chunk = &client.rounds[round - 1];
            observer.local_update(round, client.client_id, chunk);
            let seed = local_seed(cfg.seed, client.client_id, round);
            locals.push(train_round(&current, chunk, &cfg.trainer, seed)?.model);
        }
        current = aggregate(&locals)?;
        trace.rounds.push(RoundRecord {
            locals,
            aggregate: current.clone(),
        });
    }
    Ok((current, trace))
}
