//! Command-line front end. Machine-readable results go to stdout as
//! space-separated `key=value` pairs; tables and progress go to stderr.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bounds::{self, BoundParams};
use crate::error::{Error, Result};
use crate::experiment::{self, mean_std, GridPoint, SweepConfig};
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fedgen", version, about = "Generalization of federated SVMs across communication rounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the MNIST 1-vs-6 task and report its size.
    Ingest(DataArgs),
    /// Run the Monte-Carlo trials of a single (K, R, n) point.
    Run(RunArgs),
    /// Run a full sweep from a config file and write the CSV.
    Sweep(SweepArgs),
    /// Evaluate the FSVM bound and the client-count condition.
    Bound(BoundArgs),
    /// Estimate the contraction factor of one local round on MNIST features.
    EstimateQ(EstimateQArgs),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory holding the four uncompressed MNIST IDX files.
    #[arg(long, env = "FEDGEN_MNIST_DIR", default_value = "data/mnist")]
    pub data_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Config file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "K")]
    pub clients: usize,
    #[arg(long = "R")]
    pub rounds: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub heterogeneous: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `trials` from the config.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Overrides `out_csv` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "K")]
    pub clients: usize,
    #[arg(long = "R")]
    pub rounds: usize,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long = "B", default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_scale: f64,
}

#[derive(Debug, Args)]
pub struct EstimateQArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long = "R", default_value_t = 1)]
    pub rounds: usize,
    /// Number of (chunk, init pair) draws.
    #[arg(long, default_value_t = 10)]
    pub pairs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Bound(a) => return cmd_bound(&a, out, err),
        Command::Selftest => return cmd_selftest(out),
        Command::Ingest(a) => cmd_ingest(&a, out),
        Command::Run(a) => cmd_run(&a, out, err),
        Command::Sweep(a) => cmd_sweep(&a, out, err),
        Command::EstimateQ(a) => cmd_estimate_q(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn load_config(path: Option<&Path>) -> Result<SweepConfig> {
    path.map_or_else(|| Ok(SweepConfig::default()), SweepConfig::load)
}

fn cmd_bound(a: &BoundArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let p = BoundParams {
        n: a.n,
        clients: a.clients,
        rounds: a.rounds,
        theta: a.theta,
        radius: a.radius,
        q: a.q,
        alpha: a.alpha,
        c_scale: a.c_scale,
    };
    let computed = bounds::lr_terms(&p).and_then(|terms| {
        let value = bounds::fsvm_bound(&p)?;
        Ok((terms, value, bounds::check_k_condition(&p)?))
    });
    let (terms, value, kc) = match computed {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let _ = writeln!(err, "{:>4} {:>14} {:>14} {:>14}", "r", "L_r", "t*", "lower");
    for (r, t) in terms.iter().enumerate() {
        let _ = writeln!(err, "{:>4} {:>14.9} {:>14.9} {:>14.9}", r + 1, t.value, t.argmin, t.lower);
    }
    let _ = writeln!(
        err,
        "client-count condition: K = {} vs required {:.6} (simplified {:.6})",
        a.clients, kc.required, kc.simplified_required
    );
    match writeln!(
        out,
        "bound_t5={} k_condition={} k_condition_simplified={}",
        experiment::format_sig9(value),
        kc.holds,
        kc.simplified_holds
    ) {
        Ok(()) => EXIT_OK,
        Err(_) => EXIT_RUNTIME,
    }
}

fn cmd_selftest(out: &mut dyn Write) -> i32 {
    let outcomes = selftest::run_checks();
    let _ = out.write_all(selftest::report(&outcomes).as_bytes());
    if outcomes.iter().all(|o| o.passed) {
        EXIT_OK
    } else {
        EXIT_RUNTIME
    }
}

fn cmd_ingest(a: &DataArgs, out: &mut dyn Write) -> Result<()> {
    let task = experiment::load_mnist_task(&a.data_dir, 1, 6)?;
    let pos = |s: &[crate::data::Sample]| s.iter().filter(|s| s.y == crate::data::Label::Pos).count();
    writeln!(
        out,
        "train={} test={} dim={} train_pos={} test_pos={}",
        task.pool.len(),
        task.test.len(),
        task.pool[0].dim(),
        pos(&task.pool),
        pos(&task.test)
    )
    .map_err(io_err)
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.heterogeneous |= a.heterogeneous;
    let exp = experiment::prepare_mnist(&a.data.data_dir, &cfg)?;
    let _ = writeln!(err, "pool={} test={} B={:.6}", exp.pool().len(), exp.test_features().len(), exp.radius());
    let point = GridPoint {
        clients: a.clients,
        rounds: a.rounds,
        n: a.n,
    };
    let rows = exp.run_sweep(&[point], &cfg)?;
    writeln!(out, "{}", experiment::row_line(&rows[0])).map_err(io_err)
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut cfg = SweepConfig::load(&a.config)?;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(p) = &a.out {
        cfg.out_csv = p.clone();
    }
    let exp = experiment::prepare_mnist(&a.data.data_dir, &cfg)?;
    let grid = cfg.grid();
    let _ = writeln!(err, "{} grid points, {} trials each, B={:.6}", grid.len(), cfg.trials, exp.radius());
    let mut failed = None;
    let rows = exp.run_sweep_with(&grid, &cfg, |row| {
        if let Err(e) = writeln!(out, "{}", experiment::row_line(row)) {
            failed.get_or_insert(e);
        }
    })?;
    if let Some(e) = failed {
        return Err(io_err(e));
    }
    experiment::write_csv(&rows, &cfg.out_csv)?;
    let _ = writeln!(err, "wrote {}", cfg.out_csv.display());
    Ok(())
}

fn cmd_estimate_q(a: &EstimateQArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.rounds == 0 || a.n % a.rounds != 0 {
        return Err(Error::Divisibility { n: a.n, rounds: a.rounds });
    }
    let exp = experiment::prepare_mnist(&a.data.data_dir, &cfg)?;
    let ratios = exp.estimate_q(a.n / a.rounds, a.pairs, &cfg.trainer, cfg.seed)?;
    let (mean, std) = mean_std(&ratios);
    let max = ratios.iter().copied().fold(f64::MIN, f64::max);
    writeln!(
        out,
        "q_mean={} q_std={} q_max={} pairs={} chunk={}",
        experiment::format_sig9(mean),
        experiment::format_sig9(std),
        experiment::format_sig9(max),
        ratios.len(),
        a.n / a.rounds
    )
    .map_err(io_err)
}
