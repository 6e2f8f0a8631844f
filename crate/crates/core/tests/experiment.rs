use fedgen::data::synthetic::gaussian_blobs;
use fedgen::data::{distribute_to_clients, Sample};
use fedgen::experiment::{
    read_csv, trial_seeds, write_csv, Experiment, GridPoint, SweepConfig, TrialSettings,
};
use fedgen::features::FeatureMap;
use fedgen::fl::{run_fl, FlConfig};
use fedgen::trainer::TrainerConfig;
use fedgen::Error;

const DIM: usize = 5;

fn experiment() -> Experiment {
    let mut pool = gaussian_blobs(550, DIM, 2.0, 1.0, 1);
    let test = pool.split_off(400);
    Experiment::new(pool, test, FeatureMap::new(DIM, 0.2, 48, 3).unwrap()).unwrap()
}

fn trainer() -> TrainerConfig {
    TrainerConfig {
        epochs: 4,
        eta0: 0.05,
        ..TrainerConfig::default()
    }
}

fn sweep_cfg(trials: usize) -> SweepConfig {
    SweepConfig {
        trials,
        theta: 0.05,
        trainer: trainer(),
        seed: 11,
        ..SweepConfig::default()
    }
}

fn fl(clients: usize, rounds: usize, n: usize) -> FlConfig {
    FlConfig {
        clients,
        rounds,
        per_client: n,
        trainer: trainer(),
        seed: 11,
    }
}

const PLAIN: TrialSettings = TrialSettings {
    theta: 0.05,
    heterogeneity: None,
};

fn errors(samples: &[Sample], w: &fedgen::trainer::Model, theta: f64) -> f64 {
    let bad = samples
        .iter()
        .filter(|s| s.y.sign() * s.x.iter().zip(w.weights()).map(|(a, b)| a * b).sum::<f64>() <= theta)
        .count();
    bad as f64 / samples.len() as f64
}

#[test]
fn trial_is_deterministic() {
    let exp = experiment();
    let a = exp.run_trial(&fl(4, 2, 20), &PLAIN, 3).unwrap();
    let b = exp.run_trial(&fl(4, 2, 20), &PLAIN, 3).unwrap();
    assert_eq!(a, b);
    let c = exp.run_trial(&fl(4, 2, 20), &PLAIN, 4).unwrap();
    assert_ne!(a, c);
}

#[test]
fn identity_trainer_has_zero_gen() {
    let exp = experiment();
    let mut cfg = fl(3, 2, 10);
    cfg.trainer.epochs = 0;
    let r = exp.run_trial(&cfg, &PLAIN, 0).unwrap();
    assert_eq!((r.emp_margin, r.pop, r.gen), (1.0, 1.0, 0.0));
}

#[test]
fn single_client_trial_matches_manual_composition() {
    let exp = experiment();
    let cfg = fl(1, 1, 20);
    let report = exp.run_trial(&cfg, &PLAIN, 7).unwrap();

    let seeds = trial_seeds(cfg.seed, 7);
    let ids: Vec<usize> = (0..exp.pool().len()).collect();
    let drawn = distribute_to_clients(&ids, 1, 20, 1, seeds.data).unwrap();
    let clients: Vec<_> = drawn.iter().map(|c| c.map(|&i| exp.pool_features()[i].clone())).collect();
    let (w, _) = run_fl(&clients, &FlConfig { seed: seeds.fl, ..cfg }).unwrap();
    let emp = errors(&clients[0].rounds[0], &w, 0.05);
    let pop = errors(exp.test_features(), &w, 0.0);
    assert_eq!(report.emp_margin, emp);
    assert_eq!(report.pop, pop);
    assert!((report.gen - (pop - emp)).abs() < 1e-15);
}

#[test]
fn single_trial_sweep_has_zero_std() {
    let exp = experiment();
    let rows = exp
        .run_sweep(&[GridPoint { clients: 3, rounds: 2, n: 10 }], &sweep_cfg(1))
        .unwrap();
    assert_eq!(rows[0].trials, 1);
    assert_eq!(rows[0].gen_std, 0.0);
}

#[test]
fn sweep_means_equal_hand_average_of_trials() {
    let exp = experiment();
    let point = GridPoint { clients: 4, rounds: 2, n: 20 };
    let cfg = sweep_cfg(3);
    let row = exp.run_sweep(&[point], &cfg).unwrap().remove(0);
    // Trials run out of order on purpose.
    let reports: Vec<_> = [2usize, 0, 1]
        .iter()
        .map(|&t| exp.run_trial(&fl(4, 2, 20), &PLAIN, t).unwrap())
        .collect();
    let mean = |f: fn(&fedgen::risk::RiskReport) -> f64| reports.iter().map(f).sum::<f64>() / 3.0;
    assert!((row.gen_mean - mean(|r| r.gen)).abs() < 1e-12);
    assert!((row.emp_mean - mean(|r| r.emp_margin)).abs() < 1e-12);
    assert!((row.pop_mean - mean(|r| r.pop)).abs() < 1e-12);
    assert!((row.gen_mean - (row.pop_mean - row.emp_mean)).abs() < 1e-9);
    let m = mean(|r| r.gen);
    let var = reports.iter().map(|r| (r.gen - m).powi(2)).sum::<f64>() / 2.0;
    assert!((row.gen_std - var.sqrt()).abs() < 1e-12);
}

#[test]
fn rows_follow_grid_order_and_carry_bound() {
    let exp = experiment();
    let cfg = SweepConfig {
        k_list: vec![2, 4],
        r_list: vec![1, 5],
        n_list: vec![10],
        ..sweep_cfg(2)
    };
    let grid = cfg.grid();
    let rows = exp.run_sweep(&grid, &cfg).unwrap();
    let got: Vec<_> = rows.iter().map(|r| r.point()).collect();
    assert_eq!(got, grid);
    for r in &rows {
        assert_eq!(r.radius, exp.radius());
        assert!(r.bound_t5.is_finite() && r.bound_t5 > 0.0);
    }
    assert!(rows[1].bound_t5 > rows[0].bound_t5);
}

#[test]
fn capacity_error_names_grid_point() {
    let exp = experiment();
    let err = exp
        .run_sweep(&[GridPoint { clients: 50, rounds: 1, n: 10 }], &sweep_cfg(1))
        .unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::Config(_)));
    assert!(msg.contains("K=50") && msg.contains("500"), "{msg}");

    let err = exp
        .run_sweep(&[GridPoint { clients: 2, rounds: 3, n: 10 }], &sweep_cfg(1))
        .unwrap_err();
    assert!(err.to_string().contains("R=3"), "{err}");
}

#[test]
fn sweep_csv_is_reproducible() {
    let exp = experiment();
    let dir = tempfile::tempdir().unwrap();
    let cfg = SweepConfig {
        k_list: vec![3],
        r_list: vec![1, 2],
        n_list: vec![10],
        ..sweep_cfg(3)
    };
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_csv(&exp.run_sweep(&cfg.grid(), &cfg).unwrap(), &a).unwrap();
    write_csv(&experiment().run_sweep(&cfg.grid(), &cfg).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(read_csv(&a).unwrap().len(), 2);
}

#[test]
fn heterogeneous_rows_are_flagged() {
    let exp = experiment();
    let point = GridPoint { clients: 5, rounds: 1, n: 10 };
    let het = SweepConfig {
        heterogeneous: true,
        noise_sigma: 0.2,
        noise_fraction: 0.2,
        ..sweep_cfg(2)
    };
    let row = exp.run_sweep(&[point], &het).unwrap().remove(0);
    assert!(row.heterogeneous);

    // No noisy client means the homogeneous numbers.
    let silent = SweepConfig {
        noise_fraction: 0.0,
        ..het.clone()
    };
    let plain = exp.run_sweep(&[point], &sweep_cfg(2)).unwrap().remove(0);
    let quiet = exp.run_sweep(&[point], &silent).unwrap().remove(0);
    assert_eq!(quiet.gen_mean, plain.gen_mean);
    assert_ne!(row.gen_mean, plain.gen_mean);
}
