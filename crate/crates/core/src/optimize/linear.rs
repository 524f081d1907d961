use std::collections::BTreeMap;

use super::objective::{logistic_objective, softmax, squared_objective, LinearParameters};
use super::optimizer::{optimizer_step, OptimizerConfig, OptimizerState};
use crate::dataset::Dataset;
use crate::domain::OutputDomain;
use crate::error::{Error, Result};
use crate::example::{Example, Task};
use crate::model::{check_task, Model, ModelParams, RawOutput, Trainer};
use crate::params::{self, Config};
use crate::provenance::{ModelProvenance, ProvValue};
use crate::rng::Stream;

pub const LINEAR_TRAINER_CLASS: &str = "LinearSGDTrainer";
pub const LINEAR_MODEL_CLASS: &str = "LinearSGDModel";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Softmax cross-entropy; classification.
    Logistic,
    /// Half squared error; regression.
    Squared,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Logistic => "logistic",
            Objective::Squared => "squared",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "logistic" => Some(Objective::Logistic),
            "squared" => Some(Objective::Squared),
            _ => None,
        }
    }

    pub fn task(self) -> Task {
        match self {
            Objective::Logistic => Task::Categorical,
            Objective::Squared => Task::Real,
        }
    }

    fn evaluate(
        self,
        params: &LinearParameters,
        batch: &[&Example],
        dataset: &Dataset,
    ) -> Result<(f64, Vec<f64>)> {
        match self {
            Objective::Logistic => logistic_objective(
                params,
                batch,
                dataset.feature_domain(),
                dataset.output_domain(),
            ),
            Objective::Squared => squared_objective(params, batch, dataset.feature_domain()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub objective: Objective,
    pub params: LinearParameters,
}

impl LinearModel {
    pub fn predict(&self, x: &[(usize, f64)], outputs: &OutputDomain) -> RawOutput {
        let z = self.params.scores(x);
        match self.objective {
            Objective::Logistic => {
                let (p, _) = softmax(&z);
                RawOutput::Scores(
                    outputs
                        .labels()
                        .into_iter()
                        .map(str::to_string)
                        .zip(p)
                        .collect(),
                )
            }
            Objective::Squared => RawOutput::Value(z[0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub params: LinearParameters,
    /// Full-dataset loss after each epoch, when requested.
    pub epoch_losses: Vec<f64>,
}

/// The SGD loop: zero start, one shuffle per epoch, one optimizer step per
/// mini-batch including the final short one.
pub fn fit_linear(
    dataset: &Dataset,
    objective: Objective,
    optimizer: &OptimizerConfig,
    epochs: usize,
    batch_size: usize,
    stream: &mut Stream,
    track_loss: bool,
) -> Result<LinearFit> {
    check_task(objective.task(), dataset)?;
    optimizer.validate()?;
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be >= 1".into()));
    }
    let examples = dataset.examples();
    let mut params = LinearParameters::zeros(
        dataset.feature_domain().len(),
        dataset.output_domain().num_outputs(),
    );
    let mut state = OptimizerState::new(optimizer, params.weights.len());
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::new();
    let all: Vec<&Example> = if track_loss {
        examples.iter().collect()
    } else {
        Vec::new()
    };
    for _ in 0..epochs {
        stream.shuffle(&mut order);
        for chunk in order.chunks(batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &examples[i]).collect();
            let (_, grads) = objective.evaluate(&params, &batch, dataset)?;
            optimizer_step(optimizer, &mut state, &mut params.weights, &grads)?;
        }
        if track_loss {
            epoch_losses.push(objective.evaluate(&params, &all, dataset)?.0);
        }
    }
    Ok(LinearFit {
        params,
        epoch_losses,
    })
}

/// Linear or logistic regression trained with mini-batch gradient steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSgdTrainer {
    objective: Objective,
    optimizer: OptimizerConfig,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    invocations: u64,
}

impl LinearSgdTrainer {
    pub fn new(
        objective: Objective,
        optimizer: OptimizerConfig,
        epochs: usize,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self> {
        optimizer.validate()?;
        if batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        Ok(Self {
            objective,
            optimizer,
            epochs,
            batch_size,
            seed,
            invocations: 0,
        })
    }

    pub fn from_config(config: &Config) -> Result<Self> {
        let objective = Objective::parse(params::text(config, "objective")?)
            .ok_or_else(|| Error::InvalidConfig("objective must be logistic or squared".into()))?;
        let lr = params::flt(config, "learning-rate")?;
        let optimizer = match params::text(config, "optimizer")? {
            "sgd" => OptimizerConfig::Sgd { lr },
            "adagrad" => OptimizerConfig::AdaGrad {
                lr,
                eps: params::flt(config, "epsilon")?,
            },
            "adam" => OptimizerConfig::Adam {
                lr,
                beta1: params::flt(config, "beta1")?,
                beta2: params::flt(config, "beta2")?,
                eps: params::flt(config, "epsilon")?,
            },
            other => return Err(Error::InvalidConfig(format!("unknown optimizer `{other}`"))),
        };
        Self::new(
            objective,
            optimizer,
            params::count(config, "epochs")?,
            params::count(config, "batch-size")?,
            params::seed(config, "seed")?,
        )
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn optimizer(&self) -> &OptimizerConfig {
        &self.optimizer
    }

    /// Trains and also returns the per-epoch training loss.
    pub fn fit_traced(&mut self, dataset: &Dataset) -> Result<(Model, Vec<f64>)> {
        self.fit(dataset, &BTreeMap::new(), true)
    }

    fn fit(
        &mut self,
        dataset: &Dataset,
        user_info: &BTreeMap<String, String>,
        track: bool,
    ) -> Result<(Model, Vec<f64>)> {
        check_task(self.objective.task(), dataset)?;
        let mut stream = Stream::for_invocation(self.seed, self.invocations);
        let trainer_prov = self.provenance();
        let fit = fit_linear(
            dataset,
            self.objective,
            &self.optimizer,
            self.epochs,
            self.batch_size,
            &mut stream,
            track,
        )?;
        self.invocations += 1;
        let provenance = ModelProvenance::new(
            LINEAR_MODEL_CLASS,
            trainer_prov,
            dataset.provenance().clone(),
            None,
            user_info,
        );
        let model = Model::new(
            LINEAR_MODEL_CLASS,
            provenance,
            dataset.feature_domain().clone(),
            dataset.output_domain().clone(),
            ModelParams::Linear(LinearModel {
                objective: self.objective,
                params: fit.params,
            }),
        );
        Ok((model, fit.epoch_losses))
    }
}

impl Trainer for LinearSgdTrainer {
    fn class_name(&self) -> &'static str {
        LINEAR_TRAINER_CLASS
    }

    fn task(&self) -> Task {
        self.objective.task()
    }

    fn configuration(&self) -> BTreeMap<String, ProvValue> {
        let mut c = BTreeMap::new();
        c.insert(
            "objective".to_string(),
            ProvValue::from(self.objective.as_str()),
        );
        c.insert(
            "optimizer".to_string(),
            ProvValue::from(self.optimizer.name()),
        );
        c.insert(
            "learning-rate".to_string(),
            ProvValue::Flt(self.optimizer.learning_rate()),
        );
        match self.optimizer {
            OptimizerConfig::Sgd { .. } => {}
            OptimizerConfig::AdaGrad { eps, .. } => {
                c.insert("epsilon".to_string(), ProvValue::Flt(eps));
            }
            OptimizerConfig::Adam {
                beta1, beta2, eps, ..
            } => {
                c.insert("beta1".to_string(), ProvValue::Flt(beta1));
                c.insert("beta2".to_string(), ProvValue::Flt(beta2));
                c.insert("epsilon".to_string(), ProvValue::Flt(eps));
            }
        }
        c.insert("epochs".to_string(), ProvValue::from(self.epochs));
        c.insert("batch-size".to_string(), ProvValue::from(self.batch_size));
        c.insert("seed".to_string(), ProvValue::from(self.seed));
        c
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn invocation_count(&self) -> u64 {
        self.invocations
    }

    fn set_invocation_count(&mut self, count: u64) {
        self.invocations = count;
    }

    fn reseeded(&self, seed: u64) -> Box<dyn Trainer> {
        Box::new(Self {
            seed,
            invocations: 0,
            ..self.clone()
        })
    }

    fn clone_box(&self) -> Box<dyn Trainer> {
        Box::new(self.clone())
    }

    fn train_with_info(
        &mut self,
        dataset: &Dataset,
        user_info: &BTreeMap<String, String>,
    ) -> Result<Model> {
        Ok(self.fit(dataset, user_info, false)?.0)
    }
}
