// How the FSVM bound moves with rounds, clients and margin.
//
//     cargo run --example bound_landscape

use fedgen::bounds::{check_k_condition, fsvm_bound, lr_terms, BoundParams};

fn run_example() -> fedgen::Result<()> {
    let base = BoundParams {
        n: 100,
        clients: 10,
        rounds: 5,
        theta: 0.5,
        radius: 1.0,
        q: 0.5,
        alpha: 1.0,
        c_scale: 1.0,
    };

    println!("L_r terms at K=10, R=5:");
    for (r, t) in lr_terms(&base)?.iter().enumerate() {
        println!("  r={} L_r={:.6} t*={:.4} (stated upper {:.6})", r + 1, t.value, t.argmin, t.stated_upper);
    }

    println!("\nbound by R (rows) and K (columns):");
    let ks = [10, 20, 50];
    println!("  {:>3} {}", "R", ks.map(|k| format!("{:>9}", format!("K={k}"))).join(""));
    for r in [1, 2, 4, 5, 10, 20] {
        let mut line = format!("  {r:>3}");
        for k in ks {
            let b = fsvm_bound(&BoundParams { rounds: r, clients: k, ..base })?;
            line.push_str(&format!("{b:>9.4}"));
        }
        println!("{line}");
    }

    println!("\nbound by margin at K=10, R=5:");
    for theta in [0.1, 0.25, 0.5, 1.0, 2.0] {
        println!("  theta={theta:<5} {:.4}", fsvm_bound(&BoundParams { theta, ..base })?);
    }

    println!("\nclient-count condition at R=5:");
    for k in [2, 5, 8, 10, 20] {
        let c = check_k_condition(&BoundParams { clients: k, ..base })?;
        println!(
            "  K={k:<3} holds={} (K^2={} vs {:.2}); simplified holds={} (vs {:.2})",
            c.holds,
            k * k,
            c.required,
            c.simplified_holds,
            c.simplified_required
        );
    }
    Ok(())
}

fn main() -> fedgen::Result<()> {
    run_example()
}
