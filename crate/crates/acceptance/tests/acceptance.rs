//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero when any
//! criterion fails. MNIST is looked up in `FEDGEN_MNIST_DIR`, falling back
//! to `data/mnist` at the workspace root; missing data counts as a failure.

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use fedgen::bounds::{self, BoundParams, GaussianPosterior};
use fedgen::data::synthetic::gaussian_blobs;
use fedgen::data::{distribute_to_clients, extract_binary_task, load_mnist_idx, Sample};
use fedgen::experiment::{self, pooled_se, GridPoint, SweepConfig, SweepRow};
use fedgen::features::{rbf_kernel, FeatureMap};
use fedgen::fl::{run_fl, run_fl_observed, FlConfig, RoundObserver};
use fedgen::rng::{derive_seed, stream, PolarGaussian};
use fedgen::trainer::TrainerConfig;
use rand::Rng;

type Verdict = Result<String, String>;

const ROUNDS: [usize; 6] = [1, 2, 4, 5, 10, 20];

fn data_dir() -> PathBuf {
    std::env::var_os("FEDGEN_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist")))
}

fn default_bound_params() -> BoundParams {
    BoundParams {
        n: 100,
        clients: 10,
        rounds: 5,
        theta: 0.5,
        radius: 1.0,
        q: 0.5,
        alpha: 1.0,
        c_scale: 1.0,
    }
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:.0?}"))
    }
}

/// Grid point rows of the trend study, d = 1000, M = 20, theta = 0.5.
struct TrendStudy {
    by_round: Vec<SweepRow>,
    k50: SweepRow,
    elapsed_k10: Duration,
}

fn trend_study() -> Result<TrendStudy, String> {
    let cfg = SweepConfig {
        k_list: vec![10],
        r_list: ROUNDS.to_vec(),
        n_list: vec![100],
        trials: 20,
        theta: 0.5,
        rff_dim: 1000,
        ..SweepConfig::default()
    };
    let start = Instant::now();
    let exp = experiment::prepare_mnist(&data_dir(), &cfg).map_err(|e| format!("MNIST unavailable: {e}"))?;
    let by_round = exp.run_sweep(&cfg.grid(), &cfg).map_err(|e| e.to_string())?;
    let elapsed_k10 = start.elapsed();
    let k50 = exp
        .run_sweep(&[GridPoint { clients: 50, rounds: 5, n: 100 }], &cfg)
        .map_err(|e| e.to_string())?
        .remove(0);
    for r in by_round.iter().chain([&k50]) {
        eprintln!("  {}", experiment::row_line(r));
    }
    Ok(TrendStudy {
        by_round,
        k50,
        elapsed_k10,
    })
}

fn trend_a(study: &Result<TrendStudy, String>) -> Verdict {
    let s = study.as_ref().map_err(Clone::clone)?;
    within(Duration::from_secs(15 * 60), s.elapsed_k10)?;
    let rows = &s.by_round;
    let mut inversions = Vec::new();
    for w in rows.windows(2) {
        if w[1].gen_mean < w[0].gen_mean {
            inversions.push((w[0].rounds, w[1].rounds, w[0].gen_mean - w[1].gen_mean, pooled_se(&w[0], &w[1])));
        }
    }
    let gens: Vec<String> = rows.iter().map(|r| format!("{:.5}", r.gen_mean)).collect();
    let detail = format!("gen_mean over R {:?} = [{}], inversions {inversions:?}", ROUNDS, gens.join(", "));
    let ok = match inversions.as_slice() {
        [] => true,
        [(_, _, drop, se)] => drop <= se,
        _ => false,
    };
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn trend_b(study: &Result<TrendStudy, String>) -> Verdict {
    let s = study.as_ref().map_err(Clone::clone)?;
    let k10 = s.by_round.iter().find(|r| r.rounds == 5).expect("R = 5 in grid");
    let se = pooled_se(k10, &s.k50);
    let detail = format!(
        "gen(K=50) = {:.5}, gen(K=10) = {:.5}, pooled SE {se:.5}",
        s.k50.gen_mean, k10.gen_mean
    );
    if s.k50.gen_mean < k10.gen_mean - se {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn trend_c(study: &Result<TrendStudy, String>) -> Verdict {
    let s = study.as_ref().map_err(Clone::clone)?;
    let rows = &s.by_round;
    let emp_decreasing = rows.windows(2).all(|w| w[1].emp_mean < w[0].emp_mean);
    let (min_r, min_pop) = rows
        .iter()
        .map(|r| (r.rounds, r.pop_mean))
        .fold((0, f64::INFINITY), |a, c| if c.1 < a.1 { c } else { a });
    let last = rows.last().expect("non-empty grid").pop_mean;
    let plateau = last > min_pop - 0.005;
    let emp: Vec<String> = rows.iter().map(|r| format!("{:.5}", r.emp_mean)).collect();
    let detail = format!(
        "emp_mean = [{}] strictly decreasing: {emp_decreasing}; pop(R=20) = {last:.5}, min pop {min_pop:.5} at R={min_r}",
        emp.join(", ")
    );
    if emp_decreasing && plateau {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bound_monotonicity() -> Verdict {
    let start = Instant::now();
    let base = default_bound_params();
    let eval = |p: BoundParams| bounds::fsvm_bound(&p).map_err(|e| e.to_string());
    let by_r: Vec<f64> = (1..=10).map(|r| eval(BoundParams { rounds: r, ..base })).collect::<Result<_, _>>()?;
    let by_k: Vec<f64> = (2..=100).map(|k| eval(BoundParams { clients: k, ..base })).collect::<Result<_, _>>()?;
    let by_n: Vec<f64> = (1..=100)
        .map(|i| eval(BoundParams { n: 10 * i, ..base }))
        .collect::<Result<_, _>>()?;
    within(Duration::from_secs(1), start.elapsed())?;
    let first_bad = |v: &[f64], bad: fn(f64, f64) -> bool| v.windows(2).position(|w| bad(w[0], w[1]));
    if let Some(i) = first_bad(&by_r, |a, b| b <= a) {
        return Err(format!("not strictly increasing in R at R={}", i + 2));
    }
    if let Some(i) = first_bad(&by_k, |a, b| b > a) {
        return Err(format!("increases in K at K={}", i + 3));
    }
    if let Some(i) = first_bad(&by_n, |a, b| b > a) {
        return Err(format!("increases in n at n={}", 10 * (i + 2)));
    }
    Ok(format!(
        "R 1..10: {:.4} -> {:.4}; K 2..100: {:.4} -> {:.4}; n 10..1000: {:.4} -> {:.4}",
        by_r[0], by_r[9], by_k[0], by_k[98], by_n[0], by_n[99]
    ))
}

/// Brute-force minimum of the `L_r` objective on a 1e-5 grid over
/// `[lo, max(lo, c) + 1]`, with the interval ends and the branch switch
/// `c / 2` as extra nodes.
fn lr_grid_oracle(r: usize, p: &BoundParams) -> f64 {
    let c = p.clients as f64 * p.theta / p.radius;
    let lo = p.q.powi((p.rounds - r) as i32);
    let hi = lo.max(c) + 1.0;
    let f = |t: f64| t * (c / t).max(2.0).ln();
    let steps = ((hi - lo) / 1e-5).ceil() as usize;
    let mut best = f(lo).min(f(hi));
    if c / 2.0 > lo {
        best = best.min(f(c / 2.0));
    }
    for i in 1..steps {
        best = best.min(f(lo + 1e-5 * i as f64));
    }
    best
}

fn lr_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = stream(derive_seed(2024, &[7]));
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let rounds = rng.random_range(1..=10);
        let p = BoundParams {
            n: rng.random_range(10..=1000),
            clients: rng.random_range(1..=20),
            rounds,
            theta: rng.random_range(0.05..1.0),
            radius: rng.random_range(0.5..3.0),
            q: rng.random_range(0.1..1.0),
            alpha: 1.0,
            c_scale: 1.0,
        };
        let r = rng.random_range(1..=rounds);
        let got = bounds::lr_term(r, &p).map_err(|e| e.to_string())?.value;
        let want = lr_grid_oracle(r, &p);
        let diff = (got - want).abs();
        if diff > 1e-6 {
            return Err(format!("r={r} {p:?}: golden {got} vs grid {want}"));
        }
        worst = worst.max(diff);
    }
    within(Duration::from_secs(5), start.elapsed())?;
    Ok(format!("50 draws, worst |diff| = {worst:.2e}"))
}

fn gaussian_arithmetic() -> Verdict {
    let got = bounds::pac_bayes_expectation_bound(1.0, 100, 1, 0.5, 0.05).map_err(|e| e.to_string())?;
    // sqrt((1 + ln(200 / 0.05)) / ((200 - 1) / (4 * 0.25)))
    let independent = ((1.0 + (200.0f64 / 0.05).ln()) / (199.0 / 1.0)).sqrt();
    if (got - independent).abs() > 1e-12 || (got - 0.216).abs() > 1e-3 {
        return Err(format!("bound {got}, arithmetic {independent}"));
    }

    let post = GaussianPosterior {
        mean: vec![0.4, -0.2, 1.0, 0.0, 0.3],
        variance: 0.5,
        prior_mean: vec![0.0; 5],
        prior_variance: 1.2,
    };
    let kl = post.kl().map_err(|e| e.to_string())?;
    let mut rng = stream(31);
    let mut gauss = PolarGaussian::new();
    let draws = 100_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut w = vec![0.0; 5];
    for _ in 0..draws {
        for (wi, mi) in w.iter_mut().zip(&post.mean) {
            *wi = mi + post.variance.sqrt() * gauss.sample(&mut rng);
        }
        let v = bounds::pac_bayes_log_ratio(&w, &post).map_err(|e| e.to_string())?;
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / draws as f64;
    let se = ((sum_sq / draws as f64 - mean * mean) / (draws as f64 - 1.0)).sqrt();
    let detail = format!("bound {got:.6}; MC log-ratio mean {mean:.5} vs KL {kl:.5} (SE {se:.5})");
    if (mean - kl).abs() <= 3.0 * se {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn kernel_fidelity() -> Verdict {
    let task = experiment::load_mnist_task(&data_dir(), 1, 6).map_err(|e| format!("MNIST unavailable: {e}"))?;
    let mut rng = stream(derive_seed(4000, &[1]));
    let pairs: Vec<(usize, usize)> = (0..100)
        .map(|_| loop {
            let a = rng.random_range(0..task.pool.len());
            let b = rng.random_range(0..task.pool.len());
            if a != b {
                break (a, b);
            }
        })
        .collect();
    let gamma = 0.05;
    let error = |d: usize| -> Result<f64, String> {
        let map = FeatureMap::new(784, gamma, d, 17).map_err(|e| e.to_string())?;
        let mut total = 0.0;
        for &(a, b) in &pairs {
            let za = map.apply(&task.pool[a].x).map_err(|e| e.to_string())?;
            let zb = map.apply(&task.pool[b].x).map_err(|e| e.to_string())?;
            let approx: f64 = za.iter().zip(&zb).map(|(u, v)| u * v).sum();
            total += (approx - rbf_kernel(gamma, &task.pool[a].x, &task.pool[b].x)).abs();
        }
        Ok(total / pairs.len() as f64)
    };
    let (e100, e4000) = (error(100)?, error(4000)?);
    let mean_k = pairs
        .iter()
        .map(|&(a, b)| rbf_kernel(gamma, &task.pool[a].x, &task.pool[b].x))
        .sum::<f64>()
        / pairs.len() as f64;
    let detail = format!("mean |error| d=4000: {e4000:.5}, d=100: {e100:.5} (mean exact kernel {mean_k:.2e})");
    if e4000 <= 0.05 && e4000 <= e100 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[derive(Default)]
struct Uses(Vec<(usize, usize, Vec<Sample>)>);

impl RoundObserver for Uses {
    fn local_update(&mut self, round: usize, client: usize, chunk: &[Sample]) {
        self.0.push((round, client, chunk.to_vec()));
    }
}

fn protocol_invariants() -> Verdict {
    let start = Instant::now();
    let cfg = FlConfig {
        clients: 6,
        rounds: 4,
        per_client: 20,
        trainer: TrainerConfig {
            epochs: 5,
            eta0: 0.05,
            ..TrainerConfig::default()
        },
        seed: 3,
    };
    let pool = gaussian_blobs(500, 8, 1.5, 1.0, 9);
    let clients = distribute_to_clients(&pool, 6, 20, 4, 10).map_err(|e| e.to_string())?;

    // Partition: disjoint and drawn from the pool.
    let keys = |s: &Sample| s.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let pool_keys: HashSet<_> = pool.iter().map(keys).collect();
    let drawn: Vec<_> = clients.iter().flat_map(|c| c.samples().map(keys)).collect();
    if drawn.len() != 120 || drawn.iter().collect::<HashSet<_>>().len() != 120 || !drawn.iter().all(|k| pool_keys.contains(k)) {
        return Err("partition is not a disjoint subset of the pool".into());
    }

    // Data use: chunk r of every client is touched in round r only.
    let mut uses = Uses::default();
    let (w, trace) = run_fl_observed(&clients, &cfg, &mut uses).map_err(|e| e.to_string())?;
    for (round, id, chunk) in &uses.0 {
        if chunk != &clients[*id].rounds[round - 1] {
            return Err(format!("client {id} used a foreign chunk in round {round}"));
        }
    }
    if uses.0.len() != 24 {
        return Err(format!("{} local updates, expected 24", uses.0.len()));
    }

    // Permutation symmetry and bitwise determinism.
    let mut shuffled = clients.clone();
    shuffled.reverse();
    shuffled.swap(0, 3);
    let again = run_fl(&shuffled, &cfg).map_err(|e| e.to_string())?;
    if again != (w.clone(), trace.clone()) {
        return Err("client order changed the trace".into());
    }
    if run_fl(&clients, &cfg).map_err(|e| e.to_string())? != (w, trace) {
        return Err("repeat run differs".into());
    }
    within(Duration::from_secs(120), start.elapsed())?;
    Ok("partition, data use, permutation symmetry and determinism hold".into())
}

fn mnist_task_size() -> Verdict {
    let dir = data_dir();
    let raw = load_mnist_idx(&dir.join(experiment::TEST_IMAGES), &dir.join(experiment::TEST_LABELS))
        .map_err(|e| format!("MNIST unavailable: {e}"))?;
    let task = extract_binary_task(&raw, 1, 6).map_err(|e| e.to_string())?;
    if task.len() == 2093 {
        Ok("1-vs-6 test task has 2093 samples".into())
    } else {
        Err(format!("1-vs-6 test task has {} samples", task.len()))
    }
}

fn main() {
    let study = trend_study();
    let criteria: Vec<(&str, Verdict)> = vec![
        ("trend_a_gen_nondecreasing_in_rounds", trend_a(&study)),
        ("trend_b_more_clients_lower_gen", trend_b(&study)),
        ("trend_c_emp_decreasing_pop_plateau", trend_c(&study)),
        ("bound_monotonicity", bound_monotonicity()),
        ("lr_term_grid_oracle", lr_oracle()),
        ("gaussian_bound_arithmetic", gaussian_arithmetic()),
        ("rff_kernel_fidelity", kernel_fidelity()),
        ("protocol_invariants", protocol_invariants()),
        ("mnist_task_size", mnist_task_size()),
    ];
    let mut failed = 0;
    for (name, verdict) in &criteria {
        match verdict {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
