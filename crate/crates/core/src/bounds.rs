//! Generalization bounds for federated SVMs and Gaussian PAC-Bayes bounds.
//!
//! The FSVM bound is
//!
//! ```text
//! c * sqrt( B^2 log(n K sqrt(K)) * sum_r L_r / (n K^2 theta^2) ),
//! L_r = inf_{t >= q^(R-r)} t * log max(K theta / (B t), 2)
//! ```
//!
//! and holds when the number of clients satisfies the condition evaluated by
//! [`check_k_condition`]. The leading constant `c` is not determined by the
//! theory and is exposed as `c_scale`.
//!
//! The PAC-Bayes bounds specialise the per-client, per-round KL / log-density
//! ratio terms to isotropic Gaussians so that they have closed forms.

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::fl::RoundTrace;
use crate::trainer::{self, train_round, Model, TrainerConfig};

/// Parameters of the FSVM bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub n: usize,
    pub clients: usize,
    pub rounds: usize,
    /// Margin.
    pub theta: f64,
    /// Radius of the input ball.
    pub radius: f64,
    /// Per-round contraction coefficient of local SGD.
    pub q: f64,
    /// Second-order expansion constant.
    pub alpha: f64,
    pub c_scale: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
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
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 || self.clients == 0 || self.rounds == 0 {
            return bad(format!(
                "n, K and R must be positive (n={}, K={}, R={})",
                self.n, self.clients, self.rounds
            ));
        }
        for (name, v) in [
            ("theta", self.theta),
            ("B", self.radius),
            ("q", self.q),
            ("c_scale", self.c_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        Ok(())
    }

    /// `K theta / B`, where the `max(., 2)` branch switches at half this value.
    fn scale(&self) -> f64 {
        self.clients as f64 * self.theta / self.radius
    }
}

/// The objective minimized by each `L_r`.
pub fn lr_objective(t: f64, p: &BoundParams) -> f64 {
    t * (p.scale() / t).max(2.0).ln()
}

/// One per-round term with its minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrTerm {
    pub value: f64,
    pub argmin: f64,
    /// Left end of the feasible interval, `q^(R-r)`.
    pub lower: f64,
    /// `q^(2(R-r)) * log max(K theta / (B q^(R-r)), 2)`.
    pub stated_upper: f64,
}

const SCAN_POINTS: usize = 1024;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Evaluates `L_r` for round `r` in `1..=R`.
///
/// The objective is minimized over `[q^(R-r), max(q^(R-r), K theta/B) + 1]`
/// by a coarse scan followed by golden-section refinement around the best
/// scan point. Beyond the right end the objective is `t log 2`, which only
/// grows.
pub fn lr_term(r: usize, p: &BoundParams) -> Result<LrTerm> {
    p.validate()?;
    if r == 0 || r > p.rounds {
        return Err(Error::InvalidParameter(format!("round {r} outside 1..={}", p.rounds)));
    }
    let exponent = (p.rounds - r) as i32;
    let lower = p.q.powi(exponent);
    let upper = lower.max(p.scale()) + 1.0;
    let f = |t: f64| lr_objective(t, p);

    let step = (upper - lower) / (SCAN_POINTS - 1) as f64;
    let grid = |i: usize| if i + 1 == SCAN_POINTS { upper } else { lower + step * i as f64 };
    let (best_i, best_f) = (0..SCAN_POINTS)
        .map(|i| (i, f(grid(i))))
        .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });

    let a = grid(best_i.saturating_sub(1));
    let b = grid((best_i + 1).min(SCAN_POINTS - 1));
    let (t_gs, f_gs) = golden_section(f, a, b);

    let (argmin, value) = [(grid(best_i), best_f), (t_gs, f_gs), (lower, f(lower))]
        .into_iter()
        .fold((f64::NAN, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });

    let stated_upper = p.q.powi(2 * exponent) * (p.scale() / lower).max(2.0).ln();
    if stated_upper >= f(lower) {
        debug_assert!(value <= stated_upper + 1e-12);
    }
    Ok(LrTerm {
        value,
        argmin,
        lower,
        stated_upper,
    })
}

pub fn lr_terms(p: &BoundParams) -> Result<Vec<LrTerm>> {
    (1..=p.rounds).map(|r| lr_term(r, p)).collect()
}

/// The FSVM generalization bound (natural logarithms).
pub fn fsvm_bound(p: &BoundParams) -> Result<f64> {
    let sum_lr: f64 = lr_terms(p)?.iter().map(|t| t.value).sum();
    Ok(bound_from_lr_sum(p, sum_lr))
}

pub(crate) fn bound_from_lr_sum(p: &BoundParams, sum_lr: f64) -> f64 {
    let (n, k) = (p.n as f64, p.clients as f64);
    let log_term = (n * k * k.sqrt()).ln();
    p.c_scale * (p.radius * p.radius * log_term * sum_lr / (n * k * k * p.theta * p.theta)).sqrt()
}

/// Verdicts of the client-count requirement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KCondition {
    pub holds: bool,
    pub simplified_holds: bool,
    /// Right-hand side of the full requirement `K^2 >= required`.
    pub required: f64,
    /// Right-hand side of `K^2 >= max(2 alpha^2, 6 B R / theta)`.
    pub simplified_required: f64,
}

/// `sum_{j < m} x^j`, i.e. `(1 - x^m) / (1 - x)` without the removable
/// singularity at `x = 1`.
fn geometric_sum(x: f64, m: usize) -> f64 {
    (0..m).fold((0.0, 1.0), |(acc, pow), _| (acc + pow, pow * x)).0
}

/// Evaluates the requirement on `K` for `R >= 2` in full and in the
/// simplified form `K^2 >= max(2 alpha^2, 6 B R / theta)` (intended for
/// `q < 0.7`). Nothing is required when `R = 1`.
pub fn check_k_condition(p: &BoundParams) -> Result<KCondition> {
    p.validate()?;
    if p.rounds == 1 {
        return Ok(KCondition {
            holds: true,
            simplified_holds: true,
            required: 0.0,
            simplified_required: 0.0,
        });
    }
    let big_r = p.rounds;
    let q = p.q;
    // (sqrt(2) q)^(2m) = (2 q^2)^m over r' in [R-2], i.e. m = R - r' in 2..=R-1.
    let curvature = (2..big_r)
        .map(|m| p.alpha * (2.0 * q * q).powi(m as i32) / q)
        .fold(f64::NEG_INFINITY, f64::max);
    // m = R - r' in 1..=R-1.
    let drift = (1..big_r)
        .map(|m| 6.0 * p.radius * q.powi(m as i32) * geometric_sum(2.0 * q, m) / p.theta)
        .fold(f64::NEG_INFINITY, f64::max);
    let required = p.alpha / q * curvature.max(drift);
    let simplified_required = (2.0 * p.alpha * p.alpha).max(6.0 * p.radius * big_r as f64 / p.theta);
    let k2 = (p.clients * p.clients) as f64;
    Ok(KCondition {
        holds: k2 >= required,
        simplified_holds: k2 >= simplified_required,
        required,
        simplified_required,
    })
}

fn check_variance(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} variance must be > 0, got {v}")))
    }
}

fn check_same_dim(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `KL(N(post_mean, post_var I) || N(prior_mean, prior_var I))`.
pub fn kl_gaussian_iso(post_mean: &[f64], post_var: f64, prior_mean: &[f64], prior_var: f64) -> Result<f64> {
    check_variance("posterior", post_var)?;
    check_variance("prior", prior_var)?;
    check_same_dim(post_mean, prior_mean)?;
    let d = post_mean.len() as f64;
    let ratio = post_var / prior_var;
    Ok(0.5 * d * (ratio - 1.0 - ratio.ln()) + sq_dist(post_mean, prior_mean) / (2.0 * prior_var))
}

fn pac_bayes_shape(complexity: f64, n: usize, rounds: usize, sigma: f64, delta: f64) -> Result<f64> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("R must be positive".into()));
    }
    let m = 2.0 * n as f64 / rounds as f64;
    if !(m > 1.0) {
        return Err(Error::InvalidParameter(format!("2n/R = {m} must exceed 1")));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let numerator = complexity + (m / delta).ln();
    let denominator = (m - 1.0) / (4.0 * sigma * sigma);
    Ok((numerator.max(0.0) / denominator).sqrt())
}

/// In-expectation PAC-Bayes bound from the per-client, per-round average KL.
///
/// `sqrt((avg_kl + log(2n/(R delta))) / ((2n/R - 1) / (4 sigma^2)))`.
pub fn pac_bayes_expectation_bound(avg_kl: f64, n: usize, rounds: usize, sigma: f64, delta: f64) -> Result<f64> {
    if !(avg_kl >= 0.0) {
        return Err(Error::InvalidParameter(format!("average KL must be >= 0, got {avg_kl}")));
    }
    pac_bayes_shape(avg_kl, n, rounds, sigma, delta)
}

/// Tail PAC-Bayes bound from the average realised log-density ratio. A
/// negative numerator is clamped to zero.
pub fn pac_bayes_tail_bound(avg_log_ratio: f64, n: usize, rounds: usize, sigma: f64, delta: f64) -> Result<f64> {
    pac_bayes_shape(avg_log_ratio, n, rounds, sigma, delta)
}

/// An isotropic Gaussian posterior paired with its isotropic Gaussian prior.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: Vec<f64>,
    pub variance: f64,
    pub prior_mean: Vec<f64>,
    pub prior_variance: f64,
}

impl GaussianPosterior {
    pub fn kl(&self) -> Result<f64> {
        kl_gaussian_iso(&self.mean, self.variance, &self.prior_mean, self.prior_variance)
    }
}

fn log_density_iso(w: &[f64], mean: &[f64], var: f64) -> f64 {
    let d = w.len() as f64;
    -0.5 * d * (std::f64::consts::TAU * var).ln() - sq_dist(w, mean) / (2.0 * var)
}

/// `log dP/dPrior` at `w` for the Gaussian pair.
pub fn pac_bayes_log_ratio(w: &[f64], post: &GaussianPosterior) -> Result<f64> {
    check_variance("posterior", post.variance)?;
    check_variance("prior", post.prior_variance)?;
    check_same_dim(&post.mean, &post.prior_mean)?;
    check_same_dim(&post.mean, w)?;
    Ok(log_density_iso(w, &post.mean, post.variance) - log_density_iso(w, &post.prior_mean, post.prior_variance))
}

/// Average KL over all clients and rounds of a Gaussian-smoothed run: the
/// posterior of client `k` in round `r` is `N(W_k^(r), post_var I)` and its
/// prior is `N(Wbar^(r-1), prior_var I)` with `Wbar^(0) = 0`.
pub fn smoothed_trace_kl(trace: &RoundTrace, post_var: f64, prior_var: f64) -> Result<f64> {
    let Some(first) = trace.rounds.first() else {
        return Err(Error::EmptyInput("trace has no rounds"));
    };
    let zero = Model::zeros(first.aggregate.dim());
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, record) in trace.rounds.iter().enumerate() {
        let prior = trace.init_of(i + 1).unwrap_or(&zero);
        for local in &record.locals {
            total += kl_gaussian_iso(local.weights(), post_var, prior.weights(), prior_var)?;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Empirical contraction ratio of one round of local SGD: trains from
/// `init_a` and `init_b` on `chunk` with the same shuffle and batch sequence
/// and returns `|w_a - w_b| / |init_a - init_b|`.
pub fn estimate_contraction(
    chunk: &[Sample],
    cfg: &TrainerConfig,
    init_a: &Model,
    init_b: &Model,
    seed: u64,
) -> Result<f64> {
    if chunk.is_empty() {
        return Err(Error::EmptyInput("contraction estimate needs a non-empty chunk"));
    }
    check_same_dim(init_a.weights(), init_b.weights())?;
    let before = sq_dist(init_a.weights(), init_b.weights()).sqrt();
    if before == 0.0 {
        return Err(Error::InvalidParameter("initial models coincide".into()));
    }
    let a = train_round(init_a, chunk, cfg, seed)?.model;
    let b = train_round(init_b, chunk, cfg, seed)?.model;
    Ok(sq_dist(a.weights(), b.weights()).sqrt() / before)
}

/// Largest Euclidean norm among the samples, used as the input radius `B`.
pub fn estimate_radius(samples: &[Sample]) -> f64 {
    samples.iter().map(|s| trainer::norm(&s.x)).fold(0.0, f64::max)
}
