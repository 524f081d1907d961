use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::example::{Example, Output, Task};

/// Observed statistics for one named feature. Variance is the population
/// variance over the values that were present.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub name: String,
    pub id: usize,
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub variance: f64,
}

/// The named feature space, with ids assigned in lexicographic name order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDomain {
    features: Vec<FeatureStats>,
    index: BTreeMap<String, usize>,
}

#[derive(Default)]
struct Accumulator {
    count: u64,
    sum: f64,
    min: f64,
    max: f64,
}

impl FeatureDomain {
    pub fn from_examples(examples: &[Example]) -> Self {
        let mut acc: BTreeMap<&str, Accumulator> = BTreeMap::new();
        for e in examples {
            for (name, v) in e.pairs() {
                let a = acc.entry(name).or_insert(Accumulator {
                    min: f64::INFINITY,
                    max: f64::NEG_INFINITY,
                    ..Default::default()
                });
                a.count += 1;
                a.sum += v;
                a.min = a.min.min(v);
                a.max = a.max.max(v);
            }
        }
        let means: BTreeMap<&str, f64> = acc
            .iter()
            .map(|(n, a)| (*n, (a.sum / a.count as f64).clamp(a.min, a.max)))
            .collect();
        let mut sq: BTreeMap<&str, f64> = BTreeMap::new();
        for e in examples {
            for (name, v) in e.pairs() {
                let d = v - means[name];
                *sq.entry(name).or_default() += d * d;
            }
        }
        let features = acc
            .iter()
            .enumerate()
            .map(|(id, (name, a))| FeatureStats {
                name: name.to_string(),
                id,
                count: a.count,
                min: a.min,
                max: a.max,
                mean: means[name],
                variance: sq[name] / a.count as f64,
            })
            .collect();
        Self::from_sorted(features)
    }

    fn from_sorted(features: Vec<FeatureStats>) -> Self {
        let index = features.iter().map(|f| (f.name.clone(), f.id)).collect();
        Self { features, index }
    }

    /// Rebuilds a domain from stored statistics, checking its invariants.
    pub fn from_stats(mut features: Vec<FeatureStats>) -> Result<Self> {
        features.sort_by(|a, b| a.name.cmp(&b.name));
        for (i, f) in features.iter().enumerate() {
            let ok = f.id == i
                && f.count >= 1
                && f.min <= f.mean
                && f.mean <= f.max
                && f.variance >= 0.0
                && (i == 0 || features[i - 1].name < f.name);
            if !ok {
                return Err(Error::Schema(format!(
                    "invalid statistics for feature `{}`",
                    f.name
                )));
            }
        }
        Ok(Self::from_sorted(features))
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureStats> {
        self.id(name).map(|i| &self.features[i])
    }

    pub fn by_id(&self, id: usize) -> &FeatureStats {
        &self.features[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureStats> {
        self.features.iter()
    }

    /// The example as `(id, value)` pairs over known features, ascending by id.
    pub fn sparse(&self, example: &Example) -> Vec<(usize, f64)> {
        example
            .pairs()
            .filter_map(|(n, v)| self.id(n).map(|id| (id, v)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealStats {
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Label counts or target statistics over the labelled examples.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputDomain {
    Categorical(BTreeMap<String, u64>),
    Real(RealStats),
}

impl OutputDomain {
    /// Errors when outputs mix tasks or nothing is labelled.
    pub fn from_examples(examples: &[Example]) -> Result<Self> {
        let mut task = None;
        for e in examples {
            match (task, e.output().task()) {
                (_, None) => {}
                (None, t) => task = t,
                (Some(a), Some(b)) if a != b => return Err(Error::MixedOutputTypes),
                _ => {}
            }
        }
        match task.ok_or(Error::NoLabelledExamples)? {
            Task::Categorical => {
                let mut counts = BTreeMap::new();
                for e in examples {
                    if let Output::Categorical(l) = e.output() {
                        *counts.entry(l.clone()).or_insert(0u64) += 1;
                    }
                }
                Ok(OutputDomain::Categorical(counts))
            }
            Task::Real => {
                let ys: Vec<f64> = examples.iter().filter_map(|e| e.output().real()).collect();
                let n = ys.len() as f64;
                let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
                let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mean = (ys.iter().sum::<f64>() / n).clamp(min, max);
                let variance = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
                Ok(OutputDomain::Real(RealStats {
                    count: ys.len() as u64,
                    min,
                    max,
                    mean,
                    variance,
                }))
            }
        }
    }

    pub fn task(&self) -> Task {
        match self {
            OutputDomain::Categorical(_) => Task::Categorical,
            OutputDomain::Real(_) => Task::Real,
        }
    }

    /// Labels in lexicographic order; their positions are the label ids.
    pub fn labels(&self) -> Vec<&str> {
        match self {
            OutputDomain::Categorical(m) => m.keys().map(String::as_str).collect(),
            OutputDomain::Real(_) => Vec::new(),
        }
    }

    pub fn num_outputs(&self) -> usize {
        match self {
            OutputDomain::Categorical(m) => m.len(),
            OutputDomain::Real(_) => 1,
        }
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        match self {
            OutputDomain::Categorical(m) => m.keys().position(|k| k == label),
            OutputDomain::Real(_) => None,
        }
    }

    pub fn labelled_count(&self) -> u64 {
        match self {
            OutputDomain::Categorical(m) => m.values().sum(),
            OutputDomain::Real(s) => s.count,
        }
    }
}
