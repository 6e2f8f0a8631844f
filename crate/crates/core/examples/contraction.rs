// Empirical contraction of one local round: train from two different
// starting points with the same batches and compare the distance before
// and after.
//
//     cargo run --example contraction

use fedgen::bounds::estimate_contraction;
use fedgen::data::synthetic::gaussian_blobs;
use fedgen::trainer::{Model, TrainerConfig};

fn run_example() -> fedgen::Result<()> {
    let chunk = gaussian_blobs(40, 8, 2.0, 1.0, 5);
    let a = Model::from_vec(vec![0.5; 8]);
    let b = Model::from_vec((0..8).map(|i| if i % 2 == 0 { -0.3 } else { 0.4 }).collect());

    println!("eta0   l2      epochs  q_hat");
    for (eta0, l2, epochs) in [(0.01, 1e-4, 40), (0.01, 0.0, 40), (0.1, 0.1, 10), (0.5, 0.5, 10)] {
        let cfg = TrainerConfig {
            eta0,
            l2,
            epochs,
            ..TrainerConfig::default()
        };
        let q = estimate_contraction(&chunk, &cfg, &a, &b, 3)?;
        println!("{eta0:<6} {l2:<7} {epochs:<7} {q:.4}");
    }

    // Without active hinge terms a step is pure shrinkage: q = 1 - eta * l2.
    let far = Model::from_vec(vec![50.0; 8]);
    let cfg = TrainerConfig {
        epochs: 1,
        batch_size: chunk.len(),
        eta0: 0.1,
        l2: 0.2,
        ..TrainerConfig::default()
    };
    let shifted = Model::from_vec(vec![60.0; 8]);
    let q = estimate_contraction(&chunk, &cfg, &far, &shifted, 1)?;
    println!("\npure shrinkage: q_hat = {q:.6}, 1 - eta*l2 = {:.6}", 1.0 - 0.1 * 0.2);
    Ok(())
}

fn main() -> fedgen::Result<()> {
    run_example()
}
