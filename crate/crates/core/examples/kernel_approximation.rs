// Random Fourier features against the exact RBF kernel: the inner product
// of mapped points converges to exp(-gamma |x - x'|^2) as d grows.
//
//     cargo run --example kernel_approximation

use fedgen::data::synthetic::gaussian_blobs;
use fedgen::features::{rbf_kernel, FeatureMap};

fn run_example() -> fedgen::Result<()> {
    let gamma = 0.05;
    let points = gaussian_blobs(60, 20, 3.0, 1.0, 4);
    let pairs: Vec<(usize, usize)> = (0..30).map(|i| (i, 59 - i)).collect();
    let exact: Vec<f64> = pairs.iter().map(|&(a, b)| rbf_kernel(gamma, &points[a].x, &points[b].x)).collect();
    println!("mean exact kernel over {} pairs: {:.4}", pairs.len(), exact.iter().sum::<f64>() / exact.len() as f64);

    for d in [10, 100, 1000, 4000] {
        let map = FeatureMap::new(20, gamma, d, 9)?;
        let mapped = map.map_batch(&points)?;
        let err: f64 = pairs
            .iter()
            .zip(&exact)
            .map(|(&(a, b), k)| {
                let approx: f64 = mapped[a].x.iter().zip(&mapped[b].x).map(|(u, v)| u * v).sum();
                (approx - k).abs()
            })
            .sum::<f64>()
            / pairs.len() as f64;
        println!("d={d:<5} mean |approx - exact| = {err:.4}");
    }
    Ok(())
}

fn main() -> fedgen::Result<()> {
    run_example()
}
