//! Losses over a mini-batch and their exact gradients.
//!
//! Both losses are the weighted mean over the batch: each example
//! contributes `weight * loss / batch_len`.

use crate::domain::{FeatureDomain, OutputDomain};
use crate::error::{Error, Result};
use crate::example::{Example, Output, Task};

/// Row-major `(num_features + 1) x num_outputs` weights; the last row is the
/// bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParameters {
    pub num_features: usize,
    pub num_outputs: usize,
    pub weights: Vec<f64>,
}

impl LinearParameters {
    pub fn zeros(num_features: usize, num_outputs: usize) -> Self {
        Self {
            num_features,
            num_outputs,
            weights: vec![0.0; (num_features + 1) * num_outputs],
        }
    }

    pub fn from_weights(
        num_features: usize,
        num_outputs: usize,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let expected = (num_features + 1) * num_outputs;
        if weights.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::FormatError("non-finite linear weight".into()));
        }
        Ok(Self {
            num_features,
            num_outputs,
            weights,
        })
    }

    pub fn get(&self, feature: usize, output: usize) -> f64 {
        self.weights[feature * self.num_outputs + output]
    }

    pub fn bias(&self, output: usize) -> f64 {
        self.get(self.num_features, output)
    }

    /// `x · W + b` for a sparse input.
    pub fn scores(&self, x: &[(usize, f64)]) -> Vec<f64> {
        let k = self.num_outputs;
        let mut out: Vec<f64> = self.weights[self.num_features * k..].to_vec();
        for &(f, v) in x {
            for (o, w) in out.iter_mut().zip(&self.weights[f * k..(f + 1) * k]) {
                *o += v * w;
            }
        }
        out
    }

    fn add_outer(&self, grads: &mut [f64], x: &[(usize, f64)], delta: &[f64], scale: f64) {
        let k = self.num_outputs;
        for &(f, v) in x {
            for (g, d) in grads[f * k..(f + 1) * k].iter_mut().zip(delta) {
                *g += scale * v * d;
            }
        }
        for (g, d) in grads[self.num_features * k..].iter_mut().zip(delta) {
            *g += scale * d;
        }
    }
}

fn check_batch(batch: &[&Example]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptySource);
    }
    Ok(())
}

/// Softmax probabilities, stabilised by subtracting the maximum, and the
/// log of the normaliser relative to that maximum.
pub(crate) fn softmax(scores: &[f64]) -> (Vec<f64>, f64) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    (exps.iter().map(|e| e / total).collect(), max + total.ln())
}

/// Weighted mean softmax cross-entropy.
pub fn logistic_objective(
    params: &LinearParameters,
    batch: &[&Example],
    features: &FeatureDomain,
    labels: &OutputDomain,
) -> Result<(f64, Vec<f64>)> {
    check_batch(batch)?;
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut grads = vec![0.0; params.weights.len()];
    for e in batch {
        let y = match e.output() {
            Output::Categorical(l) => labels.label_id(l).ok_or_else(|| {
                Error::InvalidConfig(format!("label `{l}` is not in the output domain"))
            })?,
            Output::Unknown => return Err(Error::UnlabelledExample),
            Output::Real(_) => {
                return Err(Error::TaskMismatch {
                    expected: Task::Categorical,
                    found: Task::Real,
                })
            }
        };
        let x = features.sparse(e);
        let z = params.scores(&x);
        let (mut p, log_norm) = softmax(&z);
        loss += e.weight() * (log_norm - z[y]) / n;
        p[y] -= 1.0;
        params.add_outer(&mut grads, &x, &p, e.weight() / n);
    }
    Ok((loss, grads))
}

/// Weighted mean of `0.5 * (prediction - target)^2`.
pub fn squared_objective(
    params: &LinearParameters,
    batch: &[&Example],
    features: &FeatureDomain,
) -> Result<(f64, Vec<f64>)> {
    check_batch(batch)?;
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut grads = vec![0.0; params.weights.len()];
    for e in batch {
        let y = match e.output() {
            Output::Real(y) => *y,
            Output::Unknown => return Err(Error::UnlabelledExample),
            Output::Categorical(_) => {
                return Err(Error::TaskMismatch {
                    expected: Task::Real,
                    found: Task::Categorical,
                })
            }
        };
        let x = features.sparse(e);
        let residual = params.scores(&x)[0] - y;
        loss += e.weight() * 0.5 * residual * residual / n;
        params.add_outer(&mut grads, &x, &[residual], e.weight() / n);
    }
    Ok((loss, grads))
}
