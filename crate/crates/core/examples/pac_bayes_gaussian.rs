// Gaussian PAC-Bayes bounds for an FL run: smooth every local model with
// Gaussian noise, use the previous aggregate as the prior, and turn the
// average KL into a bound.
//
//     cargo run --example pac_bayes_gaussian

use fedgen::bounds::{
    kl_gaussian_iso, pac_bayes_expectation_bound, pac_bayes_log_ratio, pac_bayes_tail_bound, smoothed_trace_kl,
    GaussianPosterior,
};
use fedgen::data::distribute_to_clients;
use fedgen::data::synthetic::gaussian_blobs;
use fedgen::fl::{run_fl, FlConfig};
use fedgen::rng::{stream, PolarGaussian};
use fedgen::trainer::TrainerConfig;

fn run_example() -> fedgen::Result<()> {
    let (n, delta, sigma) = (40, 0.05, 0.5);
    let pool = gaussian_blobs(1000, 10, 2.0, 1.0, 1);
    let (post_var, prior_var) = (1e-2, 1e-1);

    println!("R  avg_KL    expectation_bound");
    for rounds in [1, 2, 4, 5, 10] {
        let cfg = FlConfig {
            clients: 5,
            rounds,
            per_client: n,
            trainer: TrainerConfig {
                epochs: 10,
                ..TrainerConfig::default()
            },
            seed: 7,
        };
        let clients = distribute_to_clients(&pool, cfg.clients, n, rounds, 3)?;
        let (_, trace) = run_fl(&clients, &cfg)?;
        let kl = smoothed_trace_kl(&trace, post_var, prior_var)?;
        let bound = pac_bayes_expectation_bound(kl, n, rounds, sigma, delta)?;
        println!("{rounds:<2} {kl:<9.4} {bound:.4}");
    }

    // One posterior/prior pair: realized log-ratios average out to the KL.
    let post = GaussianPosterior {
        mean: vec![0.3, -0.1, 0.2],
        variance: post_var,
        prior_mean: vec![0.0; 3],
        prior_variance: prior_var,
    };
    let kl = kl_gaussian_iso(&post.mean, post.variance, &post.prior_mean, post.prior_variance)?;
    let mut rng = stream(11);
    let mut gauss = PolarGaussian::new();
    let draws = 20_000;
    let mut total = 0.0;
    for _ in 0..draws {
        let w: Vec<f64> = post.mean.iter().map(|m| m + post.variance.sqrt() * gauss.sample(&mut rng)).collect();
        total += pac_bayes_log_ratio(&w, &post)?;
    }
    let avg = total / draws as f64;
    println!("\nKL {kl:.4}, mean log-ratio over {draws} draws {avg:.4}");
    println!("tail bound from that mean: {:.4}", pac_bayes_tail_bound(avg, n, 1, sigma, delta)?);
    Ok(())
}

fn main() -> fedgen::Result<()> {
    run_example()
}
