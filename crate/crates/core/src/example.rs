use std::fmt;

use crate::error::{Error, Result};

/// The kind of prediction problem an output, dataset or model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Categorical,
    Real,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Categorical => "categorical",
            Task::Real => "real",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        match s {
            "categorical" => Some(Task::Categorical),
            "real" => Some(Task::Real),
            _ => None,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named, finite feature value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureValue {
    name: String,
    value: f64,
}

impl FeatureValue {
    pub fn new(name: impl Into<String>, value: f64) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_control) {
            return Err(Error::InvalidFeatureName(name));
        }
        if !value.is_finite() {
            return Err(Error::NonFiniteFeature { name });
        }
        Ok(Self { name, value })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Ground truth attached to an example.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Categorical(String),
    Real(f64),
    Unknown,
}

impl Output {
    pub fn task(&self) -> Option<Task> {
        match self {
            Output::Categorical(_) => Some(Task::Categorical),
            Output::Real(_) => Some(Task::Real),
            Output::Unknown => None,
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            Output::Categorical(l) => Some(l),
            _ => None,
        }
    }

    pub fn real(&self) -> Option<f64> {
        match self {
            Output::Real(v) => Some(*v),
            _ => None,
        }
    }
}

/// A sparse example: features sorted by name with no duplicates, an output
/// and a positive weight. Absent features are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    features: Vec<FeatureValue>,
    output: Output,
    weight: f64,
}

impl Example {
    /// Sorts by name and merges duplicate names by summing their values.
    pub fn new<S, I>(pairs: I, output: Output, weight: f64) -> Result<Self>
    where
        S: Into<String>,
        I: IntoIterator<Item = (S, f64)>,
    {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidWeight(weight));
        }
        if let Output::Real(v) = output {
            if !v.is_finite() {
                return Err(Error::NonFiniteTarget);
            }
        }
        let mut features = pairs
            .into_iter()
            .map(|(n, v)| FeatureValue::new(n, v))
            .collect::<Result<Vec<_>>>()?;
        features.sort_by(|a, b| a.name.cmp(&b.name));
        let mut merged: Vec<FeatureValue> = Vec::with_capacity(features.len());
        for f in features {
            match merged.last_mut() {
                Some(last) if last.name == f.name => {
                    last.value += f.value;
                    if !last.value.is_finite() {
                        return Err(Error::NonFiniteFeature { name: f.name });
                    }
                }
                _ => merged.push(f),
            }
        }
        if merged.is_empty() {
            return Err(Error::EmptyExample);
        }
        Ok(Self {
            features: merged,
            output,
            weight,
        })
    }

    pub fn features(&self) -> &[FeatureValue] {
        &self.features
    }

    pub fn output(&self) -> &Output {
        &self.output
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.features
            .binary_search_by(|f| f.name.as_str().cmp(name))
            .ok()
            .map(|i| self.features[i].value)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, f64)> {
        self.features.iter().map(|f| (f.name.as_str(), f.value))
    }

    pub(crate) fn with_weight(&self, weight: f64) -> Self {
        Self {
            features: self.features.clone(),
            output: self.output.clone(),
            weight,
        }
    }

    pub(crate) fn with_values(&self, features: Vec<FeatureValue>) -> Self {
        Self {
            features,
            output: self.output.clone(),
            weight: self.weight,
        }
    }
}
