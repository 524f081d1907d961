use std::collections::BTreeMap;

use super::{provenance_hash, ObjProv, ProvValue, Timestamp};
use crate::error::{Error, Result};

pub const INVOCATION_COUNT_KEY: &str = "train-invocation-count";

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn obj_of(v: ProvValue, what: &str) -> Result<ObjProv> {
    match v {
        ProvValue::Obj(o) if !o.class_name.is_empty() => Ok(o),
        _ => Err(schema(format!("{what} provenance must be an object"))),
    }
}

fn non_negative(o: &ObjProv, key: &str) -> Result<u64> {
    o.get(key)
        .and_then(ProvValue::as_int)
        .filter(|&i| i >= 0)
        .map(|i| i as u64)
        .ok_or_else(|| {
            schema(format!(
                "`{}` needs a non-negative int `{key}`",
                o.class_name
            ))
        })
}

macro_rules! wrapper_common {
    ($name:ident) => {
        impl $name {
            pub fn as_obj(&self) -> &ObjProv {
                &self.0
            }

            pub fn class_name(&self) -> &str {
                &self.0.class_name
            }

            pub fn to_value(&self) -> ProvValue {
                ProvValue::Obj(self.0.clone())
            }

            pub fn hash(&self) -> String {
                provenance_hash(&self.to_value())
            }
        }

        impl From<$name> for ProvValue {
            fn from(p: $name) -> ProvValue {
                ProvValue::Obj(p.0)
            }
        }
    };
}

/// Algorithm class, hyperparameters and seed as configuration; the trainer's
/// invocation count at call time as instance information. Wrapped trainers
/// appear as nested objects inside the configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainerProvenance(ObjProv);

wrapper_common!(TrainerProvenance);

impl TrainerProvenance {
    pub fn new(
        class_name: &str,
        config: BTreeMap<String, ProvValue>,
        invocation_count: u64,
    ) -> Self {
        let mut o = ObjProv::new(class_name);
        o.config = config;
        o.instance.insert(
            INVOCATION_COUNT_KEY.to_string(),
            ProvValue::from(invocation_count),
        );
        Self(o)
    }

    pub fn from_value(v: ProvValue) -> Result<Self> {
        let o = obj_of(v, "trainer")?;
        non_negative(&o, INVOCATION_COUNT_KEY)?;
        Ok(Self(o))
    }

    pub fn config(&self) -> &BTreeMap<String, ProvValue> {
        &self.0.config
    }

    pub fn invocation_count(&self) -> u64 {
        non_negative(&self.0, INVOCATION_COUNT_KEY).unwrap_or(0)
    }

    /// Provenance of wrapped trainers, in key order.
    pub fn nested(&self) -> Vec<TrainerProvenance> {
        self.0
            .config
            .values()
            .filter_map(|v| v.as_obj())
            .filter(|o| o.instance.contains_key(INVOCATION_COUNT_KEY))
            .map(|o| TrainerProvenance(o.clone()))
            .collect()
    }
}

/// Where a source's data came from: loader class, location and options as
/// configuration; content hash and load time as instance information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSourceProvenance(ObjProv);

wrapper_common!(DataSourceProvenance);

impl DataSourceProvenance {
    pub fn new(class_name: &str, config: BTreeMap<String, ProvValue>, sha256_hex: String) -> Self {
        let mut o = ObjProv::new(class_name);
        o.config = config;
        o.instance
            .insert("resource-hash".into(), ProvValue::sha256(sha256_hex));
        o.instance
            .insert("loaded-at".into(), Timestamp::now().into());
        Self(o)
    }

    pub fn from_value(v: ProvValue) -> Result<Self> {
        Ok(Self(obj_of(v, "data source")?))
    }

    pub fn resource_hash(&self) -> Option<&str> {
        self.0
            .instance
            .get("resource-hash")
            .and_then(ProvValue::hash_digest)
    }

    pub fn config(&self) -> &BTreeMap<String, ProvValue> {
        &self.0.config
    }
}

/// Dataset-level provenance: counts, the ordered transformation list and the
/// originating source. Views (samples, reweightings) use their own class and
/// keep the parent dataset's provenance as their source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataProvenance(ObjProv);

wrapper_common!(DataProvenance);

pub(crate) const DATASET_CLASS: &str = "Dataset";

impl DataProvenance {
    pub fn new(source: DataSourceProvenance, num_examples: usize, num_features: usize) -> Self {
        Self(
            ObjProv::new(DATASET_CLASS)
                .with_instance("num-examples", num_examples)
                .with_instance("num-features", num_features)
                .with_instance("transformations", ProvValue::List(Vec::new()))
                .with_instance("source", source),
        )
    }

    /// A derived view of `parent` described by `config` (e.g. a sampling seed)
    /// and extra instance facts (e.g. a hash of the drawn indices).
    pub fn view(
        class_name: &str,
        parent: &DataProvenance,
        config: BTreeMap<String, ProvValue>,
        instance: BTreeMap<String, ProvValue>,
        num_examples: usize,
        num_features: usize,
    ) -> Self {
        let mut o = ObjProv::new(class_name);
        o.config = config;
        o.instance = instance;
        o.instance
            .insert("num-examples".into(), num_examples.into());
        o.instance
            .insert("num-features".into(), num_features.into());
        o.instance
            .insert("transformations".into(), ProvValue::List(Vec::new()));
        o.instance.insert("source".into(), parent.to_value());
        Self(o)
    }

    pub fn from_value(v: ProvValue) -> Result<Self> {
        let o = obj_of(v, "data")?;
        if non_negative(&o, "num-examples")? < 1 || non_negative(&o, "num-features")? < 1 {
            return Err(schema(
                "data provenance needs at least one example and feature",
            ));
        }
        match o.instance.get("transformations") {
            Some(ProvValue::List(_)) => {}
            _ => return Err(schema("data provenance needs a `transformations` list")),
        }
        if o.instance
            .get("source")
            .and_then(ProvValue::as_obj)
            .is_none()
        {
            return Err(schema("data provenance needs a `source` object"));
        }
        Ok(Self(o))
    }

    pub fn num_examples(&self) -> usize {
        non_negative(&self.0, "num-examples").unwrap_or(0) as usize
    }

    pub fn num_features(&self) -> usize {
        non_negative(&self.0, "num-features").unwrap_or(0) as usize
    }

    pub fn transformations(&self) -> &[ProvValue] {
        self.0
            .instance
            .get("transformations")
            .and_then(ProvValue::as_list)
            .unwrap_or(&[])
    }

    /// The source object: a data source, or the parent dataset for a view.
    pub fn source(&self) -> &ObjProv {
        self.0
            .instance
            .get("source")
            .and_then(ProvValue::as_obj)
            .expect("validated at construction")
    }

    pub fn is_view(&self) -> bool {
        self.0.class_name != DATASET_CLASS
    }

    /// Appends one transformation, updating the counts.
    pub fn with_transformation(
        &self,
        t: ProvValue,
        num_examples: usize,
        num_features: usize,
    ) -> Self {
        let mut o = self.0.clone();
        if let Some(ProvValue::List(list)) = o.instance.get_mut("transformations") {
            list.push(t);
        }
        o.instance
            .insert("num-examples".into(), num_examples.into());
        o.instance
            .insert("num-features".into(), num_features.into());
        Self(o)
    }
}

/// The provenance stored inside every model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelProvenance(ObjProv);

wrapper_common!(ModelProvenance);

impl ModelProvenance {
    pub fn new(
        model_class: &str,
        trainer: TrainerProvenance,
        data: DataProvenance,
        members: Option<Vec<ModelProvenance>>,
        user_info: &BTreeMap<String, String>,
    ) -> Self {
        let mut o = ObjProv::new(model_class)
            .with_config("trainer", trainer)
            .with_config("dataset", data)
            .with_instance("trained-at", Timestamp::now())
            .with_instance("os-name", std::env::consts::OS)
            .with_instance("os-arch", std::env::consts::ARCH)
            .with_instance("library-version", env!("CARGO_PKG_VERSION"))
            .with_instance(
                "user-info",
                ProvValue::Map(
                    user_info
                        .iter()
                        .map(|(k, v)| (k.clone(), ProvValue::from(v.as_str())))
                        .collect(),
                ),
            );
        if let Some(members) = members {
            o.instance.insert(
                "members".into(),
                ProvValue::List(members.into_iter().map(ProvValue::from).collect()),
            );
        }
        Self(o)
    }

    pub fn from_value(v: ProvValue) -> Result<Self> {
        let o = obj_of(v, "model")?;
        let p = Self(o);
        let trainer =
            p.0.config
                .get("trainer")
                .cloned()
                .ok_or_else(|| schema("model provenance lacks `trainer`"))?;
        TrainerProvenance::from_value(trainer)?;
        let data =
            p.0.config
                .get("dataset")
                .cloned()
                .ok_or_else(|| schema("model provenance lacks `dataset`"))?;
        DataProvenance::from_value(data)?;
        if let Some(members) = p.0.instance.get("members") {
            let list = members
                .as_list()
                .ok_or_else(|| schema("`members` must be a list"))?;
            if list.is_empty() {
                return Err(schema("`members` present but empty"));
            }
            for m in list {
                ModelProvenance::from_value(m.clone())?;
            }
        }
        Ok(p)
    }

    pub(crate) fn from_obj_unchecked(o: ObjProv) -> Self {
        Self(o)
    }

    pub fn trainer(&self) -> TrainerProvenance {
        TrainerProvenance(
            self.0.config["trainer"]
                .as_obj()
                .expect("validated")
                .clone(),
        )
    }

    pub fn data(&self) -> DataProvenance {
        DataProvenance(
            self.0.config["dataset"]
                .as_obj()
                .expect("validated")
                .clone(),
        )
    }

    /// One entry per member for ensembles, `None` otherwise.
    pub fn members(&self) -> Option<Vec<ModelProvenance>> {
        self.0
            .instance
            .get("members")
            .and_then(ProvValue::as_list)
            .map(|list| {
                list.iter()
                    .filter_map(ProvValue::as_obj)
                    .map(|o| ModelProvenance(o.clone()))
                    .collect()
            })
    }

    pub fn user_info(&self) -> BTreeMap<String, String> {
        self.0
            .instance
            .get("user-info")
            .and_then(ProvValue::as_map)
            .map(|m| {
                m.iter()
                    .filter_map(|(k, v)| Some((k.clone(), v.as_str()?.to_string())))
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// The evaluated model's provenance next to the test data's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationProvenance {
    pub model: ModelProvenance,
    pub test_data: DataProvenance,
    pub evaluated_at: Timestamp,
}

impl EvaluationProvenance {
    pub fn new(model: ModelProvenance, test_data: DataProvenance) -> Self {
        Self {
            model,
            test_data,
            evaluated_at: Timestamp::now(),
        }
    }

    pub fn to_value(&self) -> ProvValue {
        ObjProv::new("EvaluationProvenance")
            .with_instance("model", self.model.clone())
            .with_instance("test-data", self.test_data.clone())
            .with_instance("evaluated-at", self.evaluated_at)
            .into()
    }
}
