//! Local mini-batch hinge-loss SGD run by each client within one round.

use rand::seq::SliceRandom;

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::rng;

/// Linear classifier weights in feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    w: Vec<f64>,
}

impl Model {
    pub fn zeros(dim: usize) -> Self {
        Self { w: vec![0.0; dim] }
    }

    pub fn from_vec(w: Vec<f64>) -> Self {
        Self { w }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.w
    }

    pub fn norm(&self) -> f64 {
        norm(&self.w)
    }

    /// `<x, w>`; callers check dimensions.
    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.w, x)
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    /// Zero epochs makes the local update the identity.
    pub epochs: usize,
    pub batch_size: usize,
    pub eta0: f64,
    /// Factor applied to the learning rate when progress stalls.
    pub lr_decay: f64,
    /// Consecutive stalled epochs that trigger a decay.
    pub patience: usize,
    /// Required drop of the epoch loss below the best-so-far.
    pub min_improvement: f64,
    pub l2: f64,
    /// Project onto the unit ball after every step.
    pub project: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 1,
            eta0: 0.01,
            lr_decay: 0.2,
            patience: 10,
            min_improvement: 0.01,
            l2: 1e-4,
            project: false,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        if self.batch_size == 0 {
            return bad("batch size must be >= 1".into());
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad(format!("eta0 must be > 0, got {}", self.eta0));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad(format!("lr_decay must lie in (0, 1], got {}", self.lr_decay));
        }
        if self.patience == 0 {
            return bad("patience must be >= 1".into());
        }
        if !(self.min_improvement >= 0.0) {
            return bad(format!("min_improvement must be >= 0, got {}", self.min_improvement));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 must be >= 0, got {}", self.l2));
        }
        Ok(())
    }
}

/// `max(0, 1 - y <x, w>)`.
pub fn hinge_loss(x: &[f64], y: crate::data::Label, w: &Model) -> Result<f64> {
    w.check_dim(x)?;
    Ok((1.0 - y.sign() * w.score(x)).max(0.0))
}

/// Scratch state for repeated steps without reallocating the gradient.
struct Stepper {
    grad: Vec<f64>,
}

impl Stepper {
    fn new(dim: usize) -> Self {
        Self { grad: vec![0.0; dim] }
    }

    /// One projected subgradient step on `w`; returns the summed pre-update
    /// hinge loss of the batch.
    fn step<'a>(
        &mut self,
        w: &mut [f64],
        batch: impl Iterator<Item = &'a Sample>,
        eta: f64,
        l2: f64,
        project: bool,
    ) -> f64 {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
        let mut count = 0usize;
        let mut loss = 0.0;
        for s in batch {
            count += 1;
            let y = s.y.sign();
            let margin = y * dot(w, &s.x);
            if margin < 1.0 {
                loss += 1.0 - margin;
                for (g, &v) in self.grad.iter_mut().zip(&s.x) {
                    *g += y * v;
                }
            }
        }
        let inv_b = 1.0 / count as f64;
        for (wj, &gj) in w.iter_mut().zip(&self.grad) {
            *wj -= eta * (l2 * *wj - gj * inv_b);
        }
        if project {
            let n = norm(w);
            if n > 1.0 {
                w.iter_mut().for_each(|v| *v /= n);
            }
        }
        loss
    }
}

fn check_samples(w: &Model, samples: &[Sample]) -> Result<()> {
    samples.iter().try_for_each(|s| w.check_dim(&s.x))
}

/// One mini-batch step:
/// `w <- Proj(w - eta * ((1/b) * sum of hinge subgradients + l2 * w))`.
pub fn sgd_step(w: &Model, batch: &[Sample], eta: f64, cfg: &TrainerConfig) -> Result<Model> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("sgd_step needs a non-empty batch"));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("learning rate must be > 0, got {eta}")));
    }
    check_samples(w, batch)?;
    let mut out = w.w.clone();
    Stepper::new(w.dim()).step(&mut out, batch.iter(), eta, cfg.l2, cfg.project);
    Ok(Model { w: out })
}

/// Result of one client's local training in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub model: Model,
    /// Mean pre-update hinge loss over each epoch's pass.
    pub epoch_losses: Vec<f64>,
    /// Learning rate in force during each epoch.
    pub epoch_lrs: Vec<f64>,
}

pub(crate) fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    rng::derive_seed(seed, &[epoch as u64])
}

/// Runs `cfg.epochs` passes over `chunk` starting from `w_init`.
///
/// Each epoch visits the chunk in a fresh permutation drawn from a stream
/// derived from `(seed, epoch)` and walks it in consecutive batches of
/// `batch_size` (the last batch may be shorter). The learning rate starts at
/// `eta0` and is multiplied by `lr_decay` once the epoch loss has failed to
/// beat the round's best by `min_improvement` for `patience` epochs in a row.
pub fn train_round(w_init: &Model, chunk: &[Sample], cfg: &TrainerConfig, seed: u64) -> Result<RoundOutcome> {
    train_round_observed(w_init, chunk, cfg, seed, |_| {})
}

/// [`train_round`] with a callback receiving the weights after every step.
pub fn train_round_observed(
    w_init: &Model,
    chunk: &[Sample],
    cfg: &TrainerConfig,
    seed: u64,
    mut on_step: impl FnMut(&[f64]),
) -> Result<RoundOutcome> {
    if chunk.is_empty() {
        return Err(Error::EmptyInput("train_round needs a non-empty chunk"));
    }
    cfg.validate()?;
    check_samples(w_init, chunk)?;

    let mut w = w_init.w.clone();
    let mut stepper = Stepper::new(w.len());
    let mut eta = cfg.eta0;
    let mut best = f64::INFINITY;
    let mut stalled = 0usize;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut epoch_lrs = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = Vec::with_capacity(chunk.len());

    for epoch in 0..cfg.epochs {
        order.clear();
        order.extend(0..chunk.len());
        order.shuffle(&mut rng::stream(epoch_seed(seed, epoch)));

        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            total += stepper.step(&mut w, batch.iter().map(|&i| &chunk[i]), eta, cfg.l2, cfg.project);
            on_step(&w);
        }
        let loss = total / chunk.len() as f64;
        epoch_losses.push(loss);
        epoch_lrs.push(eta);

        if loss > best - cfg.min_improvement {
            stalled += 1;
        } else {
            stalled = 0;
        }
        if loss < best {
            best = loss;
        }
        if stalled >= cfg.patience {
            eta *= cfg.lr_decay;
            stalled = 0;
        }
    }

    Ok(RoundOutcome {
        model: Model { w },
        epoch_losses,
        epoch_lrs,
    })
}
