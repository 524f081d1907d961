//! Per-feature rescaling fitted on a dataset and recorded in its provenance.
//!
//! Fits use only the values present in examples; implicit zeros of the
//! sparse representation are not counted and stay absent after applying.
//! A constant feature cannot be rescaled, so it is fitted as the identity and
//! a `degenerate:<name>` warning is kept with the fit.

use std::collections::BTreeMap;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::example::{Example, FeatureValue};
use crate::provenance::{ConfigDocument, DataProvenance, ObjProv, ProvValue};

pub const TRANSFORMER_MAP_CLASS: &str = "TransformerMap";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    ZScore,
    MinMax,
}

impl TransformKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::ZScore => "zscore",
            TransformKind::MinMax => "minmax",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zscore" => Some(TransformKind::ZScore),
            "minmax" => Some(TransformKind::MinMax),
            _ => None,
        }
    }
}

/// Which transform to fit for each feature: a per-feature entry wins over
/// the global default; features with neither pass through.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransformSpec {
    pub global: Option<TransformKind>,
    pub per_feature: BTreeMap<String, TransformKind>,
}

impl TransformSpec {
    pub fn global(kind: TransformKind) -> Self {
        Self {
            global: Some(kind),
            per_feature: BTreeMap::new(),
        }
    }

    fn kind_for(&self, name: &str) -> Option<TransformKind> {
        self.per_feature.get(name).copied().or(self.global)
    }

    pub fn provenance(&self) -> ObjProv {
        ObjProv::new(TRANSFORMER_MAP_CLASS)
            .with_config("global", self.global.map_or("none", TransformKind::as_str))
            .with_config(
                "per-feature",
                ProvValue::Map(
                    self.per_feature
                        .iter()
                        .map(|(k, v)| (k.clone(), ProvValue::from(v.as_str())))
                        .collect(),
                ),
            )
    }

    pub fn from_config(o: &ObjProv) -> Result<Self> {
        let bad = |what: &str| Error::InvalidConfig(format!("transformer map: {what}"));
        let global = match o.config.get("global") {
            None => None,
            Some(v) => match v.as_str().ok_or_else(|| bad("`global` must be a string"))? {
                "none" => None,
                s => Some(
                    TransformKind::parse(s).ok_or_else(|| bad(&format!("unknown kind `{s}`")))?,
                ),
            },
        };
        let per_feature = match o.config.get("per-feature") {
            None => BTreeMap::new(),
            Some(v) => v
                .as_map()
                .ok_or_else(|| bad("`per-feature` must be a map"))?
                .iter()
                .map(|(k, v)| {
                    let kind = v
                        .as_str()
                        .and_then(TransformKind::parse)
                        .ok_or_else(|| bad(&format!("bad kind for `{k}`")))?;
                    Ok((k.clone(), kind))
                })
                .collect::<Result<_>>()?,
        };
        Ok(Self {
            global,
            per_feature,
        })
    }

    /// Every `TransformerMap` record of a document, in document order.
    pub fn all_from_document(doc: &ConfigDocument) -> Result<Vec<Self>> {
        doc.records
            .iter()
            .filter(|r| r.class_name == TRANSFORMER_MAP_CLASS)
            .map(|r| Self::from_config(&doc.resolve(&r.name)?))
            .collect()
    }

    pub fn to_document(&self) -> ConfigDocument {
        ConfigDocument::from_provenance(&self.provenance().into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FittedTransform {
    ZScore { mean: f64, std: f64 },
    MinMax { min: f64, max: f64 },
    Identity,
}

impl FittedTransform {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            FittedTransform::ZScore { mean, std } => (v - mean) / std,
            FittedTransform::MinMax { min, max } => (v - min) / (max - min),
            FittedTransform::Identity => v,
        }
    }

    fn from_value(v: &ProvValue) -> Result<Self> {
        let bad = || Error::Schema("malformed fitted transform".into());
        let m = v.as_map().ok_or_else(bad)?;
        let num = |k: &str| m.get(k).and_then(ProvValue::as_flt).ok_or_else(bad);
        match m.get("kind").and_then(ProvValue::as_str).ok_or_else(bad)? {
            "zscore" => Ok(FittedTransform::ZScore {
                mean: num("mean")?,
                std: num("std")?,
            }),
            "minmax" => Ok(FittedTransform::MinMax {
                min: num("min")?,
                max: num("max")?,
            }),
            "identity" => Ok(FittedTransform::Identity),
            _ => Err(bad()),
        }
    }

    fn provenance(self) -> ProvValue {
        let mut m = BTreeMap::new();
        match self {
            FittedTransform::ZScore { mean, std } => {
                m.insert("kind".to_string(), ProvValue::from("zscore"));
                m.insert("mean".to_string(), ProvValue::Flt(mean));
                m.insert("std".to_string(), ProvValue::Flt(std));
            }
            FittedTransform::MinMax { min, max } => {
                m.insert("kind".to_string(), ProvValue::from("minmax"));
                m.insert("min".to_string(), ProvValue::Flt(min));
                m.insert("max".to_string(), ProvValue::Flt(max));
            }
            FittedTransform::Identity => {
                m.insert("kind".to_string(), ProvValue::from("identity"));
            }
        }
        ProvValue::Map(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformerMap {
    spec: TransformSpec,
    fitted: BTreeMap<String, FittedTransform>,
    warnings: Vec<String>,
}

impl TransformerMap {
    pub fn spec(&self) -> &TransformSpec {
        &self.spec
    }

    pub fn get(&self, name: &str) -> Option<FittedTransform> {
        self.fitted.get(name).copied()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Rebuilds a fitted map from its recorded provenance, without refitting.
    pub fn from_provenance(o: &ObjProv) -> Result<Self> {
        let spec = TransformSpec::from_config(o)?;
        let fitted = o
            .instance
            .get("fitted")
            .and_then(ProvValue::as_map)
            .ok_or_else(|| Error::Schema("transformer map lacks `fitted`".into()))?
            .iter()
            .map(|(k, v)| Ok((k.clone(), FittedTransform::from_value(v)?)))
            .collect::<Result<_>>()?;
        let warnings = o
            .instance
            .get("warnings")
            .and_then(ProvValue::as_list)
            .map(|l| {
                l.iter()
                    .filter_map(|w| w.as_str().map(str::to_string))
                    .collect()
            })
            .unwrap_or_default();
        Ok(Self {
            spec,
            fitted,
            warnings,
        })
    }

    /// Rescales the fitted features of one example.
    pub fn apply_example(&self, e: &Example) -> Result<Example> {
        let features = e
            .pairs()
            .map(|(name, v)| FeatureValue::new(name, self.get(name).map_or(v, |f| f.apply(v))))
            .collect::<Result<Vec<_>>>()?;
        Ok(e.with_values(features))
    }

    /// Spec as configuration, fitted numbers and warnings as instance data.
    pub fn provenance(&self) -> ObjProv {
        let mut o = self.spec.provenance();
        o.instance.insert(
            "fitted".into(),
            ProvValue::Map(
                self.fitted
                    .iter()
                    .map(|(k, f)| (k.clone(), f.provenance()))
                    .collect(),
            ),
        );
        o.instance.insert(
            "warnings".into(),
            ProvValue::List(
                self.warnings
                    .iter()
                    .map(|w| ProvValue::from(w.as_str()))
                    .collect(),
            ),
        );
        o
    }
}

pub fn fit_transformers(dataset: &Dataset, spec: &TransformSpec) -> TransformerMap {
    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for e in dataset.examples() {
        for (name, v) in e.pairs() {
            if spec.kind_for(name).is_some() {
                values.entry(name).or_default().push(v);
            }
        }
    }
    let mut fitted = BTreeMap::new();
    let mut warnings = Vec::new();
    for (name, vals) in values {
        let kind = spec.kind_for(name).expect("filtered above");
        let fit = match kind {
            TransformKind::ZScore => {
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let std = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
                if std > 0.0 {
                    FittedTransform::ZScore { mean, std }
                } else {
                    FittedTransform::Identity
                }
            }
            TransformKind::MinMax => {
                let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if max > min {
                    FittedTransform::MinMax { min, max }
                } else {
                    FittedTransform::Identity
                }
            }
        };
        if fit == FittedTransform::Identity {
            warnings.push(format!("degenerate:{name}"));
        }
        fitted.insert(name.to_string(), fit);
    }
    TransformerMap {
        spec: spec.clone(),
        fitted,
        warnings,
    }
}

/// A new dataset with every fitted feature rescaled and the transformation
/// appended to its provenance. Features without a fit pass through.
pub fn apply_transformers(dataset: &Dataset, t: &TransformerMap) -> Result<Dataset> {
    let examples = dataset
        .examples()
        .iter()
        .map(|e| t.apply_example(e))
        .collect::<Result<Vec<_>>>()?;
    let previous = dataset.provenance().clone();
    let record = ProvValue::Obj(t.provenance());
    dataset.derive(examples, move |n, f| {
        previous.with_transformation(record, n, f)
    })
}

/// The fitted transformations recorded in a dataset's provenance, in the
/// order they were applied.
pub fn recorded_transformers(data: &DataProvenance) -> Result<Vec<TransformerMap>> {
    data.transformations()
        .iter()
        .map(|t| match t.as_obj() {
            Some(o) if o.class_name == TRANSFORMER_MAP_CLASS => TransformerMap::from_provenance(o),
            Some(o) => Err(Error::UnknownClass(o.class_name.clone())),
            None => Err(Error::Schema(
                "transformation entries must be objects".into(),
            )),
        })
        .collect()
}
