//! Classification and regression metrics, each carrying the provenance of
//! the evaluated model and of the test data.
//!
//! Metrics ignore example weights. A ratio with a zero denominator is 0.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::example::{Output, Task};
use crate::model::Model;
use crate::provenance::{value_to_json, EvaluationProvenance};

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationEvaluation {
    /// `confusion[truth][predicted]`, over every label in the model or the
    /// test data; zero cells are kept.
    pub confusion: BTreeMap<String, BTreeMap<String, u64>>,
    pub accuracy: f64,
    pub per_label: BTreeMap<String, LabelMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub provenance: EvaluationProvenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionEvaluation {
    pub rmse: f64,
    pub mae: f64,
    pub r2: f64,
    pub provenance: EvaluationProvenance,
}

fn check(model: &Model, dataset: &Dataset, task: Task) -> Result<()> {
    if model.task() != task {
        return Err(Error::OutputTypeMismatch {
            expected: task,
            found: model.task(),
        });
    }
    if dataset.task() != task {
        return Err(Error::TaskMismatch {
            expected: task,
            found: dataset.task(),
        });
    }
    Ok(())
}

pub fn evaluate_classification(
    model: &Model,
    dataset: &Dataset,
) -> Result<ClassificationEvaluation> {
    check(model, dataset, Task::Categorical)?;
    let mut pairs = Vec::with_capacity(dataset.len());
    for e in dataset.examples() {
        let Output::Categorical(truth) = e.output() else {
            return Err(Error::UnlabelledExample);
        };
        let Output::Categorical(pred) = model.predict(e)?.output else {
            return Err(Error::InconsistentTask);
        };
        pairs.push((truth.clone(), pred));
    }
    let labels: BTreeSet<String> = model
        .output_domain()
        .labels()
        .into_iter()
        .map(str::to_string)
        .chain(pairs.iter().map(|(t, _)| t.clone()))
        .collect();
    let mut confusion: BTreeMap<String, BTreeMap<String, u64>> = labels
        .iter()
        .map(|t| (t.clone(), labels.iter().map(|p| (p.clone(), 0)).collect()))
        .collect();
    for (t, p) in &pairs {
        *confusion
            .get_mut(t)
            .expect("truth in universe")
            .get_mut(p)
            .expect("prediction in universe") += 1;
    }
    let n = pairs.len() as f64;
    let correct = pairs.iter().filter(|(t, p)| t == p).count() as f64;
    let mut per_label = BTreeMap::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0u64, 0u64, 0u64);
    for label in &labels {
        let tp = confusion[label][label];
        let predicted: u64 = confusion.values().map(|row| row[label]).sum();
        let support: u64 = confusion[label].values().sum();
        let (fp, fneg) = (predicted - tp, support - tp);
        tp_all += tp;
        fp_all += fp;
        fn_all += fneg;
        let precision = ratio(tp as f64, predicted as f64);
        let recall = ratio(tp as f64, support as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        per_label.insert(
            label.clone(),
            LabelMetrics {
                precision,
                recall,
                f1,
                support,
            },
        );
    }
    let mean = |f: fn(&LabelMetrics) -> f64| {
        ratio(per_label.values().map(f).sum(), per_label.len() as f64)
    };
    let micro_precision = ratio(tp_all as f64, (tp_all + fp_all) as f64);
    let micro_recall = ratio(tp_all as f64, (tp_all + fn_all) as f64);
    Ok(ClassificationEvaluation {
        accuracy: ratio(correct, n),
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        micro_f1: ratio(
            2.0 * micro_precision * micro_recall,
            micro_precision + micro_recall,
        ),
        micro_precision,
        micro_recall,
        per_label,
        confusion,
        provenance: EvaluationProvenance::new(
            model.provenance().clone(),
            dataset.provenance().clone(),
        ),
    })
}

pub fn evaluate_regression(model: &Model, dataset: &Dataset) -> Result<RegressionEvaluation> {
    check(model, dataset, Task::Real)?;
    let mut pairs = Vec::with_capacity(dataset.len());
    for e in dataset.examples() {
        let Output::Real(y) = e.output() else {
            return Err(Error::UnlabelledExample);
        };
        let Output::Real(p) = model.predict(e)?.output else {
            return Err(Error::InconsistentTask);
        };
        pairs.push((*y, p));
    }
    let n = pairs.len() as f64;
    let ss_res: f64 = pairs.iter().map(|(y, p)| (p - y) * (p - y)).sum();
    let mae = pairs.iter().map(|(y, p)| (p - y).abs()).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|(y, _)| y).sum::<f64>() / n;
    let ss_tot: f64 = pairs.iter().map(|(y, _)| (y - mean_y) * (y - mean_y)).sum();
    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(RegressionEvaluation {
        rmse: (ss_res / n).sqrt(),
        mae,
        r2,
        provenance: EvaluationProvenance::new(
            model.provenance().clone(),
            dataset.provenance().clone(),
        ),
    })
}

impl ClassificationEvaluation {
    /// `{metrics, confusion, provenance}`.
    pub fn to_json(&self) -> Value {
        let per_label: serde_json::Map<String, Value> = self
            .per_label
            .iter()
            .map(|(l, m)| {
                (l.clone(), json!({"precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}))
            })
            .collect();
        json!({
            "metrics": {
                "accuracy": self.accuracy,
                "macro": {"precision": self.macro_precision, "recall": self.macro_recall, "f1": self.macro_f1},
                "micro": {"precision": self.micro_precision, "recall": self.micro_recall, "f1": self.micro_f1},
                "per-label": per_label,
            },
            "confusion": self.confusion,
            "provenance": value_to_json(&self.provenance.to_value()),
        })
    }
}

impl RegressionEvaluation {
    pub fn to_json(&self) -> Value {
        json!({
            "metrics": {"rmse": self.rmse, "mae": self.mae, "r2": self.r2},
            "confusion": Value::Null,
            "provenance": value_to_json(&self.provenance.to_value()),
        })
    }
}
