// A reduced MNIST sweep (digits 1 vs 6) written to CSV.
//
//     cargo run --release --example mnist_sweep -- [data_dir] [out.csv]

use std::path::PathBuf;

use fedgen::experiment::{self, SweepConfig};

fn run_example() -> fedgen::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/mnist".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/mnist_sweep.csv".into()));
    let cfg = SweepConfig {
        k_list: vec![10, 20],
        r_list: vec![1, 2, 5, 10],
        trials: 5,
        rff_dim: 1000,
        out_csv: out,
        ..SweepConfig::default()
    };
    let exp = experiment::prepare_mnist(&dir, &cfg)?;
    println!("pool {} samples, test {}, B = {:.4}", exp.pool().len(), exp.test_features().len(), exp.radius());
    let rows = exp.run_sweep_with(&cfg.grid(), &cfg, |row| println!("{}", experiment::row_line(row)))?;
    experiment::write_csv(&rows, &cfg.out_csv)?;
    println!("wrote {}", cfg.out_csv.display());
    Ok(())
}

fn main() -> fedgen::Result<()> {
    run_example()
}
