//! Margin and 0-1 risks of a linear model and the resulting generalization
//! gap.
//!
//! A sample incurs margin loss iff `y <x, w> <= theta`; with `theta = 0` this
//! is the 0-1 loss with zero scores counted as mistakes.

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::trainer::Model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskReport {
    /// Empirical margin risk on the training data.
    pub emp_margin: f64,
    /// 0-1 risk on the held-out data.
    pub pop: f64,
    /// `pop - emp_margin`.
    pub gen: f64,
    pub theta: f64,
}

impl RiskReport {
    pub fn new(emp_margin: f64, pop: f64, theta: f64) -> Self {
        Self {
            emp_margin,
            pop,
            gen: gen_error(emp_margin, pop),
            theta,
        }
    }
}

#[inline]
fn loss(sample: &Sample, w: &Model, theta: f64) -> f64 {
    if sample.y.sign() * w.score(&sample.x) <= theta {
        1.0
    } else {
        0.0
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("margin theta must be >= 0, got {theta}")))
    }
}

pub fn margin_loss(sample: &Sample, w: &Model, theta: f64) -> Result<u8> {
    check_theta(theta)?;
    w.check_dim(&sample.x)?;
    Ok(loss(sample, w, theta) as u8)
}

/// Mean margin loss.
pub fn empirical_margin_risk(samples: &[Sample], w: &Model, theta: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("empirical risk over an empty sample list"));
    }
    check_theta(theta)?;
    let mut total = 0.0;
    for s in samples {
        w.check_dim(&s.x)?;
        total += loss(s, w, theta);
    }
    Ok(total / samples.len() as f64)
}

/// Average over clients of each client's mean 0-1 test loss.
pub fn population_risk<T: AsRef<[Sample]>>(per_client_tests: &[T], w: &Model) -> Result<f64> {
    if per_client_tests.is_empty() {
        return Err(Error::EmptyInput("population risk needs at least one client"));
    }
    let mut total = 0.0;
    for test in per_client_tests {
        total += empirical_margin_risk(test.as_ref(), w, 0.0)?;
    }
    Ok(total / per_client_tests.len() as f64)
}

pub fn gen_error(emp_margin: f64, pop: f64) -> f64 {
    pop - emp_margin
}
