//! Small oracle suite run by `fedgen selftest`: each check recomputes a
//! hand-derived value through the public API.

use std::fmt::Write as _;

use crate::bounds::{self, BoundParams};
use crate::data::{self, ClientData, Label, RawImageSet, Sample};
use crate::error::Result;
use crate::experiment::{self, SweepRow};
use crate::features::FeatureMap;
use crate::fl::{aggregate, run_fl, FlConfig};
use crate::risk::{empirical_margin_risk, population_risk};
use crate::rng::splitmix64;
use crate::trainer::{sgd_step, train_round, Model, TrainerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<std::result::Result<(), String>>;

fn close(got: f64, want: f64, tol: f64) -> std::result::Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("got {got}, expected {want} (tol {tol})"))
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sample(x: &[f64], y: f64) -> Sample {
    Sample::new(x.to_vec(), Label::from_sign(y))
}

fn bound_params(rounds: usize) -> BoundParams {
    BoundParams {
        n: 100,
        clients: 10,
        rounds,
        theta: 0.5,
        radius: 1.0,
        q: 0.5,
        alpha: 1.0,
        c_scale: 1.0,
    }
}

fn rng_splitmix() -> Result<std::result::Result<(), String>> {
    Ok(ensure(splitmix64(0) == 0xe220_a839_7b1d_cdaf, || {
        format!("splitmix64(0) = {:#x}", splitmix64(0))
    }))
}

fn data_idx() -> Result<std::result::Result<(), String>> {
    let raw = RawImageSet::new(2, 2, vec![0, 1, 2, 3, 250, 251, 252, 253], vec![7, 3])?;
    let (img, lab) = raw.to_idx_bytes();
    let (count, rows, cols, pixels) = data::decode_images(&img)?;
    let labels = data::decode_labels(&lab)?;
    Ok(ensure(
        count == 2 && rows == 2 && cols == 2 && pixels == raw.pixels && labels == raw.labels,
        || "IDX round trip changed the fixture".into(),
    ))
}

fn data_standardize() -> Result<std::result::Result<(), String>> {
    // Column [1, 2, 3]: mean 2, population std sqrt(2/3).
    let train: Vec<Sample> = [1.0, 2.0, 3.0].iter().map(|&v| sample(&[v], 1.0)).collect();
    let (out, _, _) = data::standardize(&train, &[])?;
    Ok(close(out[2].x[0], 1.0 / (2.0f64 / 3.0).sqrt(), 1e-12))
}

fn data_partition() -> Result<std::result::Result<(), String>> {
    let pool: Vec<usize> = (0..1000).collect();
    let clients = data::distribute_to_clients(&pool, 10, 100, 5, 1)?;
    Ok(ensure(
        clients.len() == 10 && clients.iter().all(|c| c.num_rounds() == 5 && c.rounds.iter().all(|r| r.len() == 20)),
        || "expected 10 clients with 5 chunks of 20".into(),
    ))
}

fn data_noise() -> Result<std::result::Result<(), String>> {
    let clients: Vec<ClientData> = (0..10)
        .map(|id| ClientData {
            client_id: id,
            rounds: vec![vec![sample(&[0.0, 0.0], 1.0)]],
        })
        .collect();
    let test = [sample(&[0.0, 0.0], 1.0)];
    let out = data::inject_client_noise(&clients, &test, 0.2, 0.2, 4)?;
    let count = out.noisy.iter().filter(|&&b| b).count();
    Ok(ensure(count == 2, || format!("{count} noisy clients, expected 2")))
}

fn features_batch() -> Result<std::result::Result<(), String>> {
    let map = FeatureMap::new(3, 0.5, 64, 9)?;
    let xs = vec![sample(&[0.1, -0.4, 2.0], 1.0), sample(&[1.0, 0.0, -1.0], -1.0)];
    let batch = map.map_batch(&xs)?;
    let mut worst = 0.0f64;
    for (s, b) in xs.iter().zip(&batch) {
        for (u, v) in map.apply(&s.x)?.iter().zip(&b.x) {
            worst = worst.max((u - v).abs());
        }
    }
    Ok(close(worst, 0.0, 1e-12))
}

fn trainer_step() -> Result<std::result::Result<(), String>> {
    let cfg = TrainerConfig {
        l2: 0.0,
        project: true,
        ..TrainerConfig::default()
    };
    let w = sgd_step(&Model::zeros(2), &[sample(&[1.0, 0.0], 1.0)], 0.1, &cfg)?;
    Ok(ensure(w.weights() == [0.1, 0.0], || format!("got {:?}", w.weights())))
}

fn trainer_schedule() -> Result<std::result::Result<(), String>> {
    let cfg = TrainerConfig {
        epochs: 8,
        batch_size: 1,
        eta0: 1.0,
        lr_decay: 0.5,
        patience: 3,
        min_improvement: 0.01,
        l2: 0.0,
        project: false,
    };
    let out = train_round(&Model::from_vec(vec![5.0]), &[sample(&[1.0], 1.0)], &cfg, 0)?;
    let want = [1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.25];
    Ok(ensure(out.epoch_lrs == want, || format!("got {:?}", out.epoch_lrs)))
}

fn fl_aggregate() -> Result<std::result::Result<(), String>> {
    let avg = aggregate(&[Model::from_vec(vec![1.0, 2.0]), Model::from_vec(vec![3.0, -2.0])])?;
    Ok(ensure(avg.weights() == [2.0, 0.0], || format!("got {:?}", avg.weights())))
}

fn fl_identity() -> Result<std::result::Result<(), String>> {
    let clients: Vec<ClientData> = (0..2)
        .map(|id| ClientData {
            client_id: id,
            rounds: vec![vec![sample(&[1.0, -1.0], 1.0)], vec![sample(&[0.5, 2.0], -1.0)]],
        })
        .collect();
    let cfg = FlConfig {
        clients: 2,
        rounds: 2,
        per_client: 2,
        trainer: TrainerConfig {
            epochs: 0,
            ..TrainerConfig::default()
        },
        seed: 1,
    };
    let (w, trace) = run_fl(&clients, &cfg)?;
    Ok(ensure(w == Model::zeros(2) && trace.len() == 2, || "identity run moved the model".into()))
}

fn risk_values() -> Result<std::result::Result<(), String>> {
    // Zero model: every margin is 0 <= theta, and every prediction is wrong.
    let s = [sample(&[1.0], 1.0), sample(&[2.0], -1.0)];
    let emp = empirical_margin_risk(&s, &Model::zeros(1), 0.5)?;
    let w = Model::from_vec(vec![1.0]);
    let ten: Vec<Sample> = (0..10).map(|i| sample(&[1.0], if i == 0 { -1.0 } else { 1.0 })).collect();
    let thirty: Vec<Sample> = (0..10).map(|i| sample(&[1.0], if i < 3 { -1.0 } else { 1.0 })).collect();
    let pop = population_risk(&[ten, thirty], &w)?;
    Ok(close(emp, 1.0, 0.0).and(close(pop, 0.2, 1e-15)))
}

fn bounds_lr_term() -> Result<std::result::Result<(), String>> {
    let p = bound_params(3);
    let last = bounds::lr_term(3, &p)?.value;
    let first = bounds::lr_term(1, &p)?.value;
    Ok(close(last, 5f64.ln(), 1e-9).and(close(first, 0.25 * 20f64.ln(), 1e-9)))
}

fn bounds_fsvm() -> Result<std::result::Result<(), String>> {
    let got = bounds::fsvm_bound(&bound_params(1))?;
    let want = ((1000.0 * 10f64.sqrt()).ln() * 5f64.ln() / 2500.0).sqrt();
    Ok(close(got, want, 1e-10))
}

fn bounds_k_condition() -> Result<std::result::Result<(), String>> {
    let single = bounds::check_k_condition(&bound_params(1))?;
    let four = bounds::check_k_condition(&BoundParams {
        clients: 6,
        rounds: 4,
        ..bound_params(4)
    })?;
    Ok(ensure(single.holds && single.simplified_holds, || "R = 1 must hold".into())
        .and(close(four.required, 12.0, 1e-12)))
}

fn bounds_gaussian() -> Result<std::result::Result<(), String>> {
    let kl = bounds::kl_gaussian_iso(&[1.0], 1.0, &[0.0], 1.0)?;
    let shape = bounds::pac_bayes_expectation_bound(1.0, 100, 1, 0.5, 0.05)?;
    Ok(close(kl, 0.5, 1e-15).and(close(shape, ((1.0 + 4000f64.ln()) / 199.0).sqrt(), 1e-12)))
}

fn experiment_csv() -> Result<std::result::Result<(), String>> {
    let row = SweepRow {
        clients: 10,
        rounds: 5,
        n: 100,
        trials: 3,
        theta: 0.5,
        q: 0.5,
        radius: 1.0,
        heterogeneous: true,
        master_seed: 17,
        gen_mean: 0.125,
        gen_std: 0.01,
        emp_mean: 0.25,
        pop_mean: 0.375,
        bound_t5: 0.3,
    };
    let mut buf = Vec::new();
    experiment::write_csv_to(std::slice::from_ref(&row), &mut buf)?;
    let back = experiment::read_csv_from(buf.as_slice())?;
    Ok(ensure(back == [row], || "CSV round trip changed the row".into()))
}

const CHECKS: &[(&str, Check)] = &[
    ("rng.splitmix64", rng_splitmix),
    ("data.idx", data_idx),
    ("data.standardize", data_standardize),
    ("data.partition", data_partition),
    ("data.noise", data_noise),
    ("features.map_batch", features_batch),
    ("trainer.sgd_step", trainer_step),
    ("trainer.schedule", trainer_schedule),
    ("fl.aggregate", fl_aggregate),
    ("fl.identity", fl_identity),
    ("risk.values", risk_values),
    ("bounds.lr_term", bounds_lr_term),
    ("bounds.fsvm", bounds_fsvm),
    ("bounds.k_condition", bounds_k_condition),
    ("bounds.gaussian", bounds_gaussian),
    ("experiment.csv", experiment_csv),
];

pub fn run_checks() -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let (passed, detail) = match check() {
                Ok(Ok(())) => (true, String::new()),
                Ok(Err(msg)) => (false, msg),
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome { name, passed, detail }
        })
        .collect()
}

/// One `PASS name` / `FAIL name: detail` line per check.
pub fn report(outcomes: &[CheckOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        if o.passed {
            writeln!(out, "PASS {}", o.name).unwrap();
        } else {
            writeln!(out, "FAIL {}: {}", o.name, o.detail).unwrap();
        }
    }
    out
}
