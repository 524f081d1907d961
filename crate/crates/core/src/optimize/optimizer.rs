use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerConfig {
    Sgd {
        lr: f64,
    },
    AdaGrad {
        lr: f64,
        eps: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Sgd { .. } => "sgd",
            OptimizerConfig::AdaGrad { .. } => "adagrad",
            OptimizerConfig::Adam { .. } => "adam",
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            OptimizerConfig::Sgd { lr }
            | OptimizerConfig::AdaGrad { lr, .. }
            | OptimizerConfig::Adam { lr, .. } => lr,
        }
    }

    /// AdaGrad accepts `eps = 0`; a zero accumulator then means a zero step.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("{}: {m}", self.name())));
        let lr = self.learning_rate();
        if !(lr.is_finite() && lr > 0.0) {
            return bad("learning rate must be > 0");
        }
        match *self {
            OptimizerConfig::Sgd { .. } => Ok(()),
            OptimizerConfig::AdaGrad { eps, .. } if !(eps.is_finite() && eps >= 0.0) => {
                bad("eps must be >= 0")
            }
            OptimizerConfig::AdaGrad { .. } => Ok(()),
            OptimizerConfig::Adam {
                beta1, beta2, eps, ..
            } => {
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                    bad("betas must lie in [0, 1)")
                } else if !(eps.is_finite() && eps > 0.0) {
                    bad("eps must be > 0")
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Per-parameter accumulators. Only the vectors the optimizer needs are
/// allocated.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// AdaGrad's running sum of squared gradients.
    pub sum_squares: Vec<f64>,
    /// Adam's first and second moment estimates.
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub timestep: u64,
}

impl OptimizerState {
    pub fn new(cfg: &OptimizerConfig, num_params: usize) -> Self {
        let (sq, moments) = match cfg {
            OptimizerConfig::Sgd { .. } => (0, 0),
            OptimizerConfig::AdaGrad { .. } => (num_params, 0),
            OptimizerConfig::Adam { .. } => (0, num_params),
        };
        Self {
            sum_squares: vec![0.0; sq],
            first_moment: vec![0.0; moments],
            second_moment: vec![0.0; moments],
            timestep: 0,
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::ShapeMismatch { expected, found });
    }
    Ok(())
}

/// One in-place update of `params` from `grads`.
pub fn optimizer_step(
    cfg: &OptimizerConfig,
    state: &mut OptimizerState,
    params: &mut [f64],
    grads: &[f64],
) -> Result<()> {
    check_len(params.len(), grads.len())?;
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    match *cfg {
        OptimizerConfig::Sgd { lr } => {
            for (w, g) in params.iter_mut().zip(grads) {
                *w -= lr * g;
            }
        }
        OptimizerConfig::AdaGrad { lr, eps } => {
            check_len(params.len(), state.sum_squares.len())?;
            for ((w, g), acc) in params
                .iter_mut()
                .zip(grads)
                .zip(state.sum_squares.iter_mut())
            {
                *acc += g * g;
                let denom = acc.sqrt() + eps;
                if denom > 0.0 {
                    *w -= lr * g / denom;
                }
            }
        }
        OptimizerConfig::Adam {
            lr,
            beta1,
            beta2,
            eps,
        } => {
            check_len(params.len(), state.first_moment.len())?;
            check_len(params.len(), state.second_moment.len())?;
            state.timestep += 1;
            let t = state.timestep as f64;
            let c1 = 1.0 - beta1.powf(t);
            let c2 = 1.0 - beta2.powf(t);
            for (i, (w, g)) in params.iter_mut().zip(grads).enumerate() {
                let m = &mut state.first_moment[i];
                let v = &mut state.second_moment[i];
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
    Ok(())
}
