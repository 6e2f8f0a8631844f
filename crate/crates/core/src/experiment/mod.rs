//! Monte-Carlo harness: repeated client draws and FL runs, sweeps over
//! `(K, R, n)`, bound attachment and CSV persistence.
//!
//! Trial `i` of a sweep draws all of its randomness from
//! `(master_seed, i)`, so trials can run in any order or in parallel and the
//! same trial index sees the same client draw at every grid point sharing
//! `(K, n)`.

mod config;
mod results;

use std::borrow::Cow;
use std::path::Path;

use rayon::prelude::*;

pub use config::{GridPoint, SweepConfig};
pub use results::{format_sig9, read_csv, read_csv_from, write_csv, write_csv_to, CSV_HEADER};

use crate::bounds::{self, BoundParams};
use crate::data::{self, distribute_to_clients, ClientData, Sample, Standardizer};
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::fl::{run_fl, FlConfig};
use crate::risk::{empirical_margin_risk, population_risk, RiskReport};
use crate::rng::{derive_seed, stream, PolarGaussian};
use crate::trainer::{Model, TrainerConfig};

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Environment variable capping the trial worker count.
pub const THREADS_ENV: &str = "FEDGEN_THREADS";

const TAG_MAP: u64 = 0;
const TAG_DATA: u64 = 1;
const TAG_FL: u64 = 2;
const TAG_NOISE: u64 = 3;

/// Seeds of one Monte-Carlo trial, all derived from `(master, trial)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    /// Client draw from the pool.
    pub data: u64,
    /// Master seed handed to the FL run.
    pub fl: u64,
    /// Heterogeneity noise.
    pub noise: u64,
}

pub fn trial_seeds(master: u64, trial: usize) -> TrialSeeds {
    let t = trial as u64;
    TrialSeeds {
        data: derive_seed(master, &[TAG_DATA, t]),
        fl: derive_seed(master, &[TAG_FL, t]),
        noise: derive_seed(master, &[TAG_NOISE, t]),
    }
}

/// Standardized binary task in pixel space.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub pool: Vec<Sample>,
    pub test: Vec<Sample>,
    pub standardizer: Standardizer,
}

/// Loads the MNIST train/test IDX pairs from `dir`, extracts the
/// `pos`/`neg` digit task and standardizes both sets with training
/// statistics.
pub fn load_mnist_task(dir: &Path, pos: u8, neg: u8) -> Result<TaskData> {
    let train = data::load_mnist_idx(&dir.join(TRAIN_IMAGES), &dir.join(TRAIN_LABELS))?;
    let test = data::load_mnist_idx(&dir.join(TEST_IMAGES), &dir.join(TEST_LABELS))?;
    let train = data::extract_binary_task(&train, pos, neg)?;
    let test = data::extract_binary_task(&test, pos, neg)?;
    let (pool, mut others, standardizer) = data::standardize(&train, &[&test])?;
    Ok(TaskData {
        pool,
        test: others.pop().expect("one extra set"),
        standardizer,
    })
}

/// Loads the 1-vs-6 task from `dir` and builds the run's feature map from
/// `cfg.gamma`, `cfg.rff_dim` and `cfg.seed`.
pub fn prepare_mnist(dir: &Path, cfg: &SweepConfig) -> Result<Experiment> {
    cfg.validate()?;
    let task = load_mnist_task(dir, 1, 6)?;
    let map = FeatureMap::new(
        task.pool[0].dim(),
        cfg.gamma,
        cfg.rff_dim,
        derive_seed(cfg.seed, &[TAG_MAP]),
    )?;
    Experiment::new(task.pool, task.test, map)
}

/// `key=value` summary of a row.
pub fn row_line(row: &SweepRow) -> String {
    format!(
        "K={} R={} n={} M={} heterogeneous={} gen_mean={} gen_std={} emp_mean={} pop_mean={} bound_t5={}",
        row.clients,
        row.rounds,
        row.n,
        row.trials,
        row.heterogeneous,
        format_sig9(row.gen_mean),
        format_sig9(row.gen_std),
        format_sig9(row.emp_mean),
        format_sig9(row.pop_mean),
        format_sig9(row.bound_t5),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heterogeneity {
    pub sigma: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSettings {
    pub theta: f64,
    pub heterogeneity: Option<Heterogeneity>,
}

/// One line of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub clients: usize,
    pub rounds: usize,
    pub n: usize,
    pub trials: usize,
    pub theta: f64,
    pub q: f64,
    pub radius: f64,
    pub heterogeneous: bool,
    pub master_seed: u64,
    pub gen_mean: f64,
    pub gen_std: f64,
    pub emp_mean: f64,
    pub pop_mean: f64,
    pub bound_t5: f64,
}

impl SweepRow {
    pub fn point(&self) -> GridPoint {
        GridPoint {
            clients: self.clients,
            rounds: self.rounds,
            n: self.n,
        }
    }

    /// Standard error of `gen_mean`.
    pub fn gen_se(&self) -> f64 {
        self.gen_std / (self.trials as f64).sqrt()
    }
}

/// Standard error of the difference of two rows' `gen_mean`.
pub fn pooled_se(a: &SweepRow, b: &SweepRow) -> f64 {
    (a.gen_se().powi(2) + b.gen_se().powi(2)).sqrt()
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Data and feature map shared by every trial of a run.
pub struct Experiment {
    pool: Vec<Sample>,
    test: Vec<Sample>,
    map: FeatureMap,
    pool_features: Vec<Sample>,
    test_features: Vec<Sample>,
    radius: f64,
}

impl Experiment {
    /// Takes pixel-space data and maps it once through `map`.
    pub fn new(pool: Vec<Sample>, test: Vec<Sample>, map: FeatureMap) -> Result<Self> {
        if pool.is_empty() || test.is_empty() {
            return Err(Error::EmptyInput("experiment needs a training pool and a test set"));
        }
        let pool_features = map.map_batch(&pool)?;
        let test_features = map.map_batch(&test)?;
        let radius = bounds::estimate_radius(&pool_features);
        Ok(Self {
            pool,
            test,
            map,
            pool_features,
            test_features,
            radius,
        })
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn pool(&self) -> &[Sample] {
        &self.pool
    }

    pub fn pool_features(&self) -> &[Sample] {
        &self.pool_features
    }

    pub fn test_features(&self) -> &[Sample] {
        &self.test_features
    }

    /// Largest feature-space norm over the pool.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Clients of trial `trial` in feature space with their test views.
    pub fn draw_clients(
        &self,
        fl: &FlConfig,
        heterogeneity: Option<Heterogeneity>,
        master_seed: u64,
        trial: usize,
    ) -> Result<(Vec<ClientData>, Vec<Cow<'_, [Sample]>>)> {
        let seeds = trial_seeds(master_seed, trial);
        let ids: Vec<usize> = (0..self.pool.len()).collect();
        let drawn = distribute_to_clients(&ids, fl.clients, fl.per_client, fl.rounds, seeds.data)?;

        let Some(h) = heterogeneity.filter(|h| h.sigma > 0.0 && h.fraction > 0.0) else {
            let clients = drawn
                .iter()
                .map(|c| c.map(|&i| self.pool_features[i].clone()))
                .collect();
            return Ok((clients, vec![Cow::Borrowed(self.test_features.as_slice())]));
        };

        let pixel: Vec<ClientData> = drawn.iter().map(|c| c.map(|&i| self.pool[i].clone())).collect();
        let noisy = data::inject_client_noise(
            &pixel,
            &self.test,
            h.sigma,
            h.fraction,
            seeds.noise,
        )?;
        let mut clients = Vec::with_capacity(drawn.len());
        let mut tests = Vec::with_capacity(drawn.len());
        for (((ids, noisy_client), test), &is_noisy) in drawn
            .iter()
            .zip(&noisy.clients)
            .zip(&noisy.tests)
            .zip(&noisy.noisy)
        {
            if is_noisy {
                let mut rounds = Vec::with_capacity(noisy_client.rounds.len());
                for chunk in &noisy_client.rounds {
                    rounds.push(self.map.map_batch(chunk)?);
                }
                clients.push(ClientData {
                    client_id: noisy_client.client_id,
                    rounds,
                });
                tests.push(Cow::Owned(self.map.map_batch(test)?));
            } else {
                clients.push(ids.map(|&i| self.pool_features[i].clone()));
                tests.push(Cow::Borrowed(self.test_features.as_slice()));
            }
        }
        Ok((clients, tests))
    }

    /// Contraction ratios of one local round on `pairs` random chunks of
    /// `chunk_len` pool samples, each trained from two random unit-norm
    /// initial models.
    pub fn estimate_q(&self, chunk_len: usize, pairs: usize, trainer: &TrainerConfig, seed: u64) -> Result<Vec<f64>> {
        if chunk_len == 0 || pairs == 0 {
            return Err(Error::InvalidParameter("chunk length and pair count must be >= 1".into()));
        }
        let dim = self.map.dim();
        let ids: Vec<usize> = (0..self.pool.len()).collect();
        let mut ratios = Vec::with_capacity(pairs);
        for p in 0..pairs {
            let pseed = derive_seed(seed, &[p as u64]);
            let drawn = distribute_to_clients(&ids, 1, chunk_len, 1, derive_seed(pseed, &[0]))?;
            let chunk: Vec<Sample> = drawn[0].rounds[0].iter().map(|&i| self.pool_features[i].clone()).collect();
            let mut inits = [vec![0.0; dim], vec![0.0; dim]];
            for (j, w) in inits.iter_mut().enumerate() {
                let mut rng = stream(derive_seed(pseed, &[1, j as u64]));
                PolarGaussian::new().fill(&mut rng, 1.0, w);
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                w.iter_mut().for_each(|v| *v /= norm);
            }
            let [a, b] = inits;
            ratios.push(bounds::estimate_contraction(
                &chunk,
                trainer,
                &Model::from_vec(a),
                &Model::from_vec(b),
                derive_seed(pseed, &[2]),
            )?);
        }
        Ok(ratios)
    }

    /// One Monte-Carlo draw: fresh client datasets, a full FL run, and the
    /// risks of the final aggregate. `fl.seed` is the master seed.
    pub fn run_trial(&self, fl: &FlConfig, settings: &TrialSettings, trial: usize) -> Result<RiskReport> {
        fl.validate()?;
        let (clients, tests) = self.draw_clients(fl, settings.heterogeneity, fl.seed, trial)?;
        let run_cfg = FlConfig {
            seed: trial_seeds(fl.seed, trial).fl,
            ..fl.clone()
        };
        let (model, _) = run_fl(&clients, &run_cfg)?;
        let train: Vec<Sample> = clients.iter().flat_map(|c| c.samples().cloned()).collect();
        let emp = empirical_margin_risk(&train, &model, settings.theta)?;
        let pop = population_risk(&tests, &model)?;
        Ok(RiskReport::new(emp, pop, settings.theta))
    }

    /// Runs `trials` trials of one grid point on the worker pool and returns
    /// the reports in trial order.
    pub fn run_point(
        &self,
        point: GridPoint,
        trials: usize,
        cfg: &SweepConfig,
    ) -> Result<Vec<RiskReport>> {
        let fl = FlConfig {
            clients: point.clients,
            rounds: point.rounds,
            per_client: point.n,
            trainer: cfg.trainer.clone(),
            seed: cfg.seed,
        };
        fl.validate().map_err(|e| Error::Config(format!("grid point {point}: {e}")))?;
        let needed = point.clients * point.n;
        if needed > self.pool.len() {
            return Err(Error::Config(format!(
                "grid point {point}: {}",
                Error::Capacity {
                    needed,
                    available: self.pool.len()
                }
            )));
        }
        let settings = TrialSettings {
            theta: cfg.theta,
            heterogeneity: cfg.heterogeneous.then_some(Heterogeneity {
                sigma: cfg.noise_sigma,
                fraction: cfg.noise_fraction,
            }),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(worker_threads())
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| self.run_trial(&fl, &settings, t))
                .collect()
        })
    }

    /// Averages `cfg.trials` trials at every grid point and attaches the
    /// FSVM bound. Rows come back in grid order.
    pub fn run_sweep(&self, grid: &[GridPoint], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
        self.run_sweep_with(grid, cfg, |_| {})
    }

    /// [`Experiment::run_sweep`] with a callback after each finished row.
    pub fn run_sweep_with(
        &self,
        grid: &[GridPoint],
        cfg: &SweepConfig,
        mut on_row: impl FnMut(&SweepRow),
    ) -> Result<Vec<SweepRow>> {
        cfg.validate()?;
        let radius = cfg.b_override.unwrap_or(self.radius);
        let mut rows = Vec::with_capacity(grid.len());
        for &point in grid {
            let reports = self.run_point(point, cfg.trials, cfg)?;
            let row = summarize(point, &reports, cfg, radius)?;
            on_row(&row);
            rows.push(row);
        }
        Ok(rows)
    }
}

/// Collapses a point's trial reports into a row.
pub fn summarize(point: GridPoint, reports: &[RiskReport], cfg: &SweepConfig, radius: f64) -> Result<SweepRow> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no trial reports to summarize"));
    }
    let gens: Vec<f64> = reports.iter().map(|r| r.gen).collect();
    let (gen_mean, gen_std) = mean_std(&gens);
    let emp_mean = reports.iter().map(|r| r.emp_margin).sum::<f64>() / reports.len() as f64;
    let pop_mean = reports.iter().map(|r| r.pop).sum::<f64>() / reports.len() as f64;
    let params = BoundParams {
        n: point.n,
        clients: point.clients,
        rounds: point.rounds,
        theta: cfg.theta,
        radius,
        q: cfg.q,
        alpha: cfg.alpha,
        c_scale: 1.0,
    };
    let bound_t5 = if cfg.theta > 0.0 {
        bounds::fsvm_bound(&params)?
    } else {
        f64::INFINITY
    };
    Ok(SweepRow {
        clients: point.clients,
        rounds: point.rounds,
        n: point.n,
        trials: reports.len(),
        theta: cfg.theta,
        q: cfg.q,
        radius,
        heterogeneous: cfg.heterogeneous,
        master_seed: cfg.seed,
        gen_mean,
        gen_std,
        emp_mean,
        pop_mean,
        bound_t5,
    })
}
