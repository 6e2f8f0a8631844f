use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::trainer::TrainerConfig;

/// Sweep configuration, read from a flat `key = value` file.
///
/// Lists are comma separated. Blank lines and `#` comments are ignored;
/// unknown keys are an error.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub k_list: Vec<usize>,
    pub r_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub theta: f64,
    pub q: f64,
    pub alpha: f64,
    /// Input radius for the bound; estimated from the mapped pool when unset.
    pub b_override: Option<f64>,
    pub gamma: f64,
    pub rff_dim: usize,
    pub trainer: TrainerConfig,
    pub heterogeneous: bool,
    pub noise_sigma: f64,
    pub noise_fraction: f64,
    pub seed: u64,
    pub out_csv: PathBuf,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k_list: vec![10, 20, 50],
            r_list: vec![1, 2, 4, 5, 10, 20],
            n_list: vec![100],
            trials: 20,
            theta: 0.5,
            q: 0.5,
            alpha: 1.0,
            b_override: None,
            gamma: 0.05,
            rff_dim: 4000,
            trainer: TrainerConfig::default(),
            heterogeneous: false,
            noise_sigma: 0.2,
            noise_fraction: 0.2,
            seed: 20240,
            out_csv: PathBuf::from("sweep.csv"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{raw}`")))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<usize>> {
    let list = raw
        .split(',')
        .map(|item| parse_value(key, item.trim()))
        .collect::<Result<Vec<usize>>>()?;
    if list.is_empty() || list.contains(&0) {
        return Err(Error::Config(format!("key `{key}`: needs positive entries")));
    }
    Ok(list)
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("key `{key}`: expected a boolean, got `{raw}`"))),
    }
}

fn join(list: &[usize]) -> String {
    list.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, raw) = (key.trim(), raw.trim());
            let t = &mut cfg.trainer;
            match key {
                "k_list" => cfg.k_list = parse_list(key, raw)?,
                "r_list" => cfg.r_list = parse_list(key, raw)?,
                "n_list" => cfg.n_list = parse_list(key, raw)?,
                "trials" => cfg.trials = parse_value(key, raw)?,
                "theta" => cfg.theta = parse_value(key, raw)?,
                "q" => cfg.q = parse_value(key, raw)?,
                "alpha" => cfg.alpha = parse_value(key, raw)?,
                "b_override" => {
                    cfg.b_override = match raw.to_ascii_lowercase().as_str() {
                        "" | "auto" | "none" => None,
                        _ => Some(parse_value(key, raw)?),
                    }
                }
                "gamma" => cfg.gamma = parse_value(key, raw)?,
                "rff_dim" => cfg.rff_dim = parse_value(key, raw)?,
                "epochs" => t.epochs = parse_value(key, raw)?,
                "batch" => t.batch_size = parse_value(key, raw)?,
                "eta0" => t.eta0 = parse_value(key, raw)?,
                "lr_decay" => t.lr_decay = parse_value(key, raw)?,
                "patience" => t.patience = parse_value(key, raw)?,
                "min_improvement" => t.min_improvement = parse_value(key, raw)?,
                "l2" => t.l2 = parse_value(key, raw)?,
                "project" => t.project = parse_bool(key, raw)?,
                "heterogeneous" => cfg.heterogeneous = parse_bool(key, raw)?,
                "noise_sigma" => cfg.noise_sigma = parse_value(key, raw)?,
                "noise_fraction" => cfg.noise_fraction = parse_value(key, raw)?,
                "seed" => cfg.seed = parse_value(key, raw)?,
                "out_csv" => cfg.out_csv = PathBuf::from(raw),
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("key `trials`: must be >= 1".into());
        }
        if !(self.theta >= 0.0) {
            return bad(format!("key `theta`: must be >= 0, got {}", self.theta));
        }
        if !(self.q > 0.0) {
            return bad(format!("key `q`: must be > 0, got {}", self.q));
        }
        if !(self.alpha >= 0.0) {
            return bad(format!("key `alpha`: must be >= 0, got {}", self.alpha));
        }
        if let Some(b) = self.b_override {
            if !(b > 0.0) {
                return bad(format!("key `b_override`: must be > 0, got {b}"));
            }
        }
        if !(self.gamma > 0.0) || self.rff_dim == 0 {
            return bad("keys `gamma` and `rff_dim` must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.noise_fraction) || !(self.noise_sigma >= 0.0) {
            return bad("keys `noise_fraction` in [0, 1] and `noise_sigma` >= 0 required".into());
        }
        self.trainer.validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Grid points in emission order: `K` outermost, then `n`, then `R`.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &clients in &self.k_list {
            for &n in &self.n_list {
                for &rounds in &self.r_list {
                    out.push(GridPoint { clients, rounds, n });
                }
            }
        }
        out
    }

    /// Serializes back to the `key = value` format.
    pub fn to_text(&self) -> String {
        let t = &self.trainer;
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("k_list", join(&self.k_list));
        put("r_list", join(&self.r_list));
        put("n_list", join(&self.n_list));
        put("trials", self.trials.to_string());
        put("theta", self.theta.to_string());
        put("q", self.q.to_string());
        put("alpha", self.alpha.to_string());
        put("b_override", self.b_override.map_or("auto".into(), |b| b.to_string()));
        put("gamma", self.gamma.to_string());
        put("rff_dim", self.rff_dim.to_string());
        put("epochs", t.epochs.to_string());
        put("batch", t.batch_size.to_string());
        put("eta0", t.eta0.to_string());
        put("lr_decay", t.lr_decay.to_string());
        put("patience", t.patience.to_string());
        put("min_improvement", t.min_improvement.to_string());
        put("l2", t.l2.to_string());
        put("project", t.project.to_string());
        put("heterogeneous", self.heterogeneous.to_string());
        put("noise_sigma", self.noise_sigma.to_string());
        put("noise_fraction", self.noise_fraction.to_string());
        put("seed", self.seed.to_string());
        put("out_csv", self.out_csv.display().to_string());
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub clients: usize,
    pub rounds: usize,
    pub n: usize,
}

impl std::fmt::Display for GridPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(K={}, R={}, n={})", self.clients, self.rounds, self.n)
    }
}
