use std::collections::BTreeMap;
use std::fmt;

use crate::dataset::Dataset;
use crate::domain::{FeatureDomain, OutputDomain};
use crate::ensemble::EnsembleModel;
use crate::error::{Error, Result};
use crate::example::{Example, Output, Task};
use crate::optimize::LinearModel;
use crate::provenance::{ModelProvenance, ProvValue, TrainerProvenance};
use crate::trees::TreeModel;

/// Label with the highest score; ties go to the lexicographically smallest.
pub fn argmax_label(scores: &BTreeMap<String, f64>) -> Result<&str> {
    let mut best: Option<(&str, f64)> = None;
    // BTreeMap iterates in label order, so a strict comparison keeps the
    // smallest label among equal maxima.
    for (label, &s) in scores {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((label, s)),
        }
    }
    best.map(|(l, _)| l).ok_or(Error::EmptyScores)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub output: Output,
    /// Per-label scores for classification, empty for regression.
    pub scores: BTreeMap<String, f64>,
    pub features_used: usize,
    pub features_total: usize,
    pub warnings: Vec<String>,
}

/// What a predictor computes before the domain checks are layered on top.
#[derive(Debug, Clone, PartialEq)]
pub enum RawOutput {
    Scores(BTreeMap<String, f64>),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Linear(LinearModel),
    Tree(TreeModel),
    Ensemble(EnsembleModel),
}

impl ModelParams {
    pub fn model_class(&self) -> &'static str {
        match self {
            ModelParams::Linear(_) => crate::optimize::LINEAR_MODEL_CLASS,
            ModelParams::Tree(_) => crate::trees::TREE_MODEL_CLASS,
            ModelParams::Ensemble(_) => crate::ensemble::ENSEMBLE_MODEL_CLASS,
        }
    }
}

/// A trained predictor together with the domains it was trained on and the
/// provenance describing exactly how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    name: String,
    provenance: ModelProvenance,
    feature_domain: FeatureDomain,
    output_domain: OutputDomain,
    params: ModelParams,
}

impl Model {
    pub(crate) fn new(
        name: impl Into<String>,
        provenance: ModelProvenance,
        feature_domain: FeatureDomain,
        output_domain: OutputDomain,
        params: ModelParams,
    ) -> Self {
        Self {
            name: name.into(),
            provenance,
            feature_domain,
            output_domain,
            params,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn provenance(&self) -> &ModelProvenance {
        &self.provenance
    }

    pub fn feature_domain(&self) -> &FeatureDomain {
        &self.feature_domain
    }

    pub fn output_domain(&self) -> &OutputDomain {
        &self.output_domain
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn model_class(&self) -> &'static str {
        self.params.model_class()
    }

    pub fn task(&self) -> Task {
        self.output_domain.task()
    }

    /// Prediction without the overlap check: unknown features are ignored
    /// and an example with none of the model's features scores as all zeros.
    pub(crate) fn raw_predict(&self, example: &Example) -> Result<RawOutput> {
        match &self.params {
            ModelParams::Linear(p) => {
                Ok(p.predict(&self.feature_domain.sparse(example), &self.output_domain))
            }
            ModelParams::Tree(t) => {
                Ok(t.predict(&self.feature_domain.sparse(example), &self.output_domain))
            }
            ModelParams::Ensemble(e) => e.predict(example),
        }
    }

    /// Drops features the model has never seen, fails when nothing is left,
    /// and warns about values outside the training range.
    pub fn predict(&self, example: &Example) -> Result<Prediction> {
        let mut used = 0;
        let mut warnings = Vec::new();
        for (name, v) in example.pairs() {
            if let Some(stats) = self.feature_domain.get(name) {
                used += 1;
                if v < stats.min || v > stats.max {
                    warnings.push(format!("out-of-range:{name}"));
                }
            }
        }
        if used == 0 {
            return Err(Error::NoFeatureOverlap);
        }
        let (output, scores) = match self.raw_predict(example)? {
            RawOutput::Scores(scores) => (
                Output::Categorical(argmax_label(&scores)?.to_string()),
                scores,
            ),
            RawOutput::Value(v) => (Output::Real(v), BTreeMap::new()),
        };
        Ok(Prediction {
            output,
            scores,
            features_used: used,
            features_total: example.features().len(),
            warnings,
        })
    }

    /// As [`Model::predict`], but first checks the caller's expected task.
    pub fn predict_as(&self, example: &Example, expected: Task) -> Result<Prediction> {
        if self.task() != expected {
            return Err(Error::OutputTypeMismatch {
                expected,
                found: self.task(),
            });
        }
        self.predict(example)
    }
}

/// A training algorithm configuration.
///
/// Each train call records the trainer's provenance, including the number
/// of earlier train calls, and uses the random stream position that count
/// selects, so a trainer rebuilt from provenance reproduces the same model.
pub trait Trainer: Send + Sync + fmt::Debug {
    fn class_name(&self) -> &'static str;

    /// The task this trainer produces models for.
    fn task(&self) -> Task;

    /// Configuration fields: hyperparameters, seed and wrapped trainers.
    fn configuration(&self) -> BTreeMap<String, ProvValue>;

    fn seed(&self) -> u64;

    fn invocation_count(&self) -> u64;

    fn set_invocation_count(&mut self, count: u64);

    /// A fresh copy (invocation count 0) using `seed`.
    fn reseeded(&self, seed: u64) -> Box<dyn Trainer>;

    fn clone_box(&self) -> Box<dyn Trainer>;

    fn train_with_info(
        &mut self,
        dataset: &Dataset,
        user_info: &BTreeMap<String, String>,
    ) -> Result<Model>;

    fn train(&mut self, dataset: &Dataset) -> Result<Model> {
        self.train_with_info(dataset, &BTreeMap::new())
    }

    fn provenance(&self) -> TrainerProvenance {
        TrainerProvenance::new(
            self.class_name(),
            self.configuration(),
            self.invocation_count(),
        )
    }
}

impl Clone for Box<dyn Trainer> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

pub(crate) fn check_task(expected: Task, dataset: &Dataset) -> Result<()> {
    if dataset.task() != expected {
        return Err(Error::TaskMismatch {
            expected,
            found: dataset.task(),
        });
    }
    Ok(())
}
