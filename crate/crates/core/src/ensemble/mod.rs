//! Bagging, random forests and multi-class AdaBoost over any base trainer.

mod trainer;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::example::Example;
use crate::model::{argmax_label, Model, RawOutput};

pub use trainer::{
    bootstrap_sample, BoostTrace, EnsembleConfig, EnsembleTrainer, Variant, ENSEMBLE_TRAINER_CLASS,
};

pub const ENSEMBLE_MODEL_CLASS: &str = "EnsembleModel";

/// How member outputs enter the vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Voting {
    /// Each member's normalized score vector.
    Scores,
    /// A one-hot vector for each member's predicted label.
    Labels,
}

impl Voting {
    pub fn as_str(self) -> &'static str {
        match self {
            Voting::Scores => "scores",
            Voting::Labels => "labels",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "scores" => Some(Voting::Scores),
            "labels" => Some(Voting::Labels),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub members: Vec<Model>,
    pub weights: Vec<f64>,
    pub voting: Voting,
}

impl EnsembleModel {
    pub fn new(members: Vec<Model>, weights: Vec<f64>, voting: Voting) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::AllMembersRejected);
        }
        if members.len() != weights.len() {
            return Err(Error::ShapeMismatch {
                expected: members.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::InvalidConfig(
                "member weights must be finite, non-negative and not all zero".into(),
            ));
        }
        if members.iter().any(|m| m.task() != members[0].task()) {
            return Err(Error::InconsistentTask);
        }
        Ok(Self {
            members,
            weights,
            voting,
        })
    }

    pub fn predict(&self, example: &Example) -> Result<RawOutput> {
        let outputs = self
            .members
            .iter()
            .map(|m| {
                let raw = m.raw_predict(example)?;
                Ok(match (self.voting, raw) {
                    (Voting::Labels, RawOutput::Scores(s)) => {
                        let winner = argmax_label(&s)?.to_string();
                        RawOutput::Scores(
                            s.into_keys()
                                .map(|l| {
                                    let v = f64::from(u8::from(l == winner));
                                    (l, v)
                                })
                                .collect(),
                        )
                    }
                    (_, raw) => raw,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        combine(&outputs, &self.weights)
    }
}

/// Weighted vote of member outputs.
///
/// Score vectors are first scaled to sum to one, then averaged with the
/// member weights; labels missing from a member count as zero. Regression
/// outputs are averaged directly.
pub fn combine(outputs: &[RawOutput], weights: &[f64]) -> Result<RawOutput> {
    if outputs.is_empty() {
        return Err(Error::EmptyScores);
    }
    if outputs.len() != weights.len() {
        return Err(Error::ShapeMismatch {
            expected: outputs.len(),
            found: weights.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    match &outputs[0] {
        RawOutput::Scores(_) => {
            let mut acc: BTreeMap<String, f64> = BTreeMap::new();
            for (out, w) in outputs.iter().zip(weights) {
                let RawOutput::Scores(s) = out else {
                    return Err(Error::InconsistentTask);
                };
                let sum: f64 = s.values().sum();
                let scale = if sum > 0.0 { 1.0 / sum } else { 1.0 };
                for (label, v) in s {
                    *acc.entry(label.clone()).or_insert(0.0) += w * v * scale;
                }
            }
            for v in acc.values_mut() {
                *v /= total;
            }
            Ok(RawOutput::Scores(acc))
        }
        RawOutput::Value(_) => {
            let mut acc = 0.0;
            for (out, w) in outputs.iter().zip(weights) {
                let RawOutput::Value(v) = out else {
                    return Err(Error::InconsistentTask);
                };
                acc += w * v;
            }
            Ok(RawOutput::Value(acc / total))
        }
    }
}
