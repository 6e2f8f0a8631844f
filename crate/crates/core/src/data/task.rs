use super::{Label, RawImageSet, Sample};
use crate::error::{Error, Result};

/// Keeps the images labelled `pos_digit` or `neg_digit` and relabels them
/// `+1` / `-1`. Pixels are scaled to `[0, 1]`.
pub fn extract_binary_task(raw: &RawImageSet, pos_digit: u8, neg_digit: u8) -> Result<Vec<Sample>> {
    if pos_digit == neg_digit || pos_digit > 9 || neg_digit > 9 {
        return Err(Error::InvalidParameter(format!(
            "binary task needs two distinct digits in 0..=9, got {pos_digit} and {neg_digit}"
        )));
    }
    let samples: Vec<Sample> = raw
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, &digit)| {
            let y = if digit == pos_digit {
                Label::Pos
            } else if digit == neg_digit {
                Label::Neg
            } else {
                return None;
            };
            let x = raw.image(i).iter().map(|&p| f64::from(p) / 255.0).collect();
            Some(Sample::new(x, y))
        })
        .collect();

    for (digit, label) in [(pos_digit, Label::Pos), (neg_digit, Label::Neg)] {
        if !samples.iter().any(|s| s.y == label) {
            return Err(Error::EmptyClass { digit });
        }
    }
    Ok(samples)
}

/// Per-feature affine normalization fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Divisor per feature; 1.0 where the training column is constant.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &[Sample]) -> Result<Self> {
        let first = train.first().ok_or(Error::EmptyInput("standardize needs a training set"))?;
        let dim = first.dim();
        let n = train.len() as f64;
        let mut mean = vec![0.0; dim];
        for s in train {
            if s.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: s.dim(),
                });
            }
            for (m, &v) in mean.iter_mut().zip(&s.x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let mut var = vec![0.0; dim];
        for s in train {
            for ((acc, &v), &m) in var.iter_mut().zip(&s.x).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let scale = var
            .iter()
            .zip(&mean)
            .map(|(&v, &m)| {
                let std = (v / n).sqrt();
                // Constant columns: treat rounding residue as zero variance.
                if std <= 10.0 * f64::EPSILON * m.abs().max(1.0) {
                    1.0
                } else {
                    std
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.mean.len() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
        Ok(())
    }

    pub fn transform(&self, samples: &[Sample]) -> Result<Vec<Sample>> {
        samples
            .iter()
            .map(|s| {
                let mut x = s.x.clone();
                self.apply(&mut x)?;
                Ok(Sample::new(x, s.y))
            })
            .collect()
    }
}

/// Fits mean/std on `train` and applies them to `train` and every set in
/// `others`.
pub fn standardize(
    train: &[Sample],
    others: &[&[Sample]],
) -> Result<(Vec<Sample>, Vec<Vec<Sample>>, Standardizer)> {
    let st = Standardizer::fit(train)?;
    let train = st.transform(train)?;
    let others = others.iter().map(|set| st.transform(set)).collect::<Result<_>>()?;
    Ok((train, others, st))
}
