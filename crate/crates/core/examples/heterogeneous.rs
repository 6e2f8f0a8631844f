// Same grid point with i.i.d. clients and with Gaussian pixel noise on a
// fraction of the clients (their training and test images both).
//
//     cargo run --release --example heterogeneous -- [data_dir]

use std::path::PathBuf;

use fedgen::experiment::{self, GridPoint, SweepConfig};

fn run_example() -> fedgen::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/mnist".into()));
    let base = SweepConfig {
        trials: 5,
        rff_dim: 1000,
        ..SweepConfig::default()
    };
    let exp = experiment::prepare_mnist(&dir, &base)?;
    let grid = [1, 5, 10].map(|rounds| GridPoint { clients: 10, rounds, n: 100 });
    for heterogeneous in [false, true] {
        let cfg = SweepConfig {
            heterogeneous,
            noise_sigma: 0.2,
            noise_fraction: 0.2,
            ..base.clone()
        };
        for row in exp.run_sweep(&grid, &cfg)? {
            println!("{}", experiment::row_line(&row));
        }
    }
    Ok(())
}

fn main() -> fedgen::Result<()> {
    run_example()
}
