// The R-round protocol on a synthetic two-class problem: same data budget
// per client, split into more or fewer communication rounds.
//
//     cargo run --example federated_rounds

use fedgen::experiment::{Experiment, GridPoint, SweepConfig};
use fedgen::data::synthetic::gaussian_blobs;
use fedgen::features::FeatureMap;
use fedgen::trainer::TrainerConfig;

fn run_example() -> fedgen::Result<()> {
    // One draw split in two, so both parts share the class centres.
    let mut pool = gaussian_blobs(4000, 10, 3.0, 1.0, 1);
    let test = pool.split_off(3000);
    let exp = Experiment::new(pool, test, FeatureMap::new(10, 0.02, 300, 3)?)?;
    let cfg = SweepConfig {
        k_list: vec![10],
        r_list: vec![1, 2, 5, 10],
        n_list: vec![100],
        trials: 5,
        theta: 0.05,
        trainer: TrainerConfig {
            epochs: 10,
            ..TrainerConfig::default()
        },
        ..SweepConfig::default()
    };
    println!("feature radius B = {:.4}", exp.radius());
    println!("R   emp_margin  pop      gen      bound");
    let grid: Vec<GridPoint> = cfg.grid();
    for row in exp.run_sweep(&grid, &cfg)? {
        println!(
            "{:<3} {:<11.4} {:<8.4} {:<8.4} {:.4}",
            row.rounds, row.emp_mean, row.pop_mean, row.gen_mean, row.bound_t5
        );
    }
    Ok(())
}

fn main() -> fedgen::Result<()> {
    run_example()
}
