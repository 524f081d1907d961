//! Configuration extraction.
//!
//! Walking a provenance tree yields one [`ConfigRecord`] per object, holding
//! only its configuration fields. Nested objects become references to the
//! record generated for them, so the records form a flat, runnable
//! description of the pipeline.

use std::collections::{BTreeMap, HashSet};

use serde_json::{json, Value};

use super::json::{scalar_from_json, tagged, value_to_json};
use super::{ObjProv, ProvValue};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigValue {
    /// A scalar provenance value (never a list, map or object).
    Value(ProvValue),
    Ref(String),
    List(Vec<ConfigValue>),
    Map(BTreeMap<String, ConfigValue>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigRecord {
    pub name: String,
    pub class_name: String,
    pub properties: BTreeMap<String, ConfigValue>,
}

/// Depth-first, pre-order. Ids are `className-visitIndex`; configuration
/// fields are visited before instance fields, each in key order. Objects
/// reachable only through instance fields still get a record, but no
/// instance field ever appears in a record.
pub fn extract_configuration(root: &ProvValue) -> Vec<ConfigRecord> {
    let mut records = Vec::new();
    walk(root, &mut records);
    records
}

fn walk(v: &ProvValue, records: &mut Vec<ConfigRecord>) {
    match v {
        ProvValue::Obj(o) => {
            visit_obj(o, records);
        }
        ProvValue::List(items) => items.iter().for_each(|i| walk(i, records)),
        ProvValue::Map(m) => m.values().for_each(|i| walk(i, records)),
        _ => {}
    }
}

fn visit_obj(o: &ObjProv, records: &mut Vec<ConfigRecord>) -> String {
    let slot = records.len();
    let name = format!("{}-{}", o.class_name, slot);
    records.push(ConfigRecord {
        name: name.clone(),
        class_name: o.class_name.clone(),
        properties: BTreeMap::new(),
    });
    let properties = o
        .config
        .iter()
        .map(|(k, v)| (k.clone(), convert(v, records)))
        .collect();
    records[slot].properties = properties;
    for v in o.instance.values() {
        walk(v, records);
    }
    name
}

fn convert(v: &ProvValue, records: &mut Vec<ConfigRecord>) -> ConfigValue {
    match v {
        ProvValue::Obj(o) => ConfigValue::Ref(visit_obj(o, records)),
        ProvValue::List(items) => {
            ConfigValue::List(items.iter().map(|i| convert(i, records)).collect())
        }
        ProvValue::Map(m) => ConfigValue::Map(
            m.iter()
                .map(|(k, v)| (k.clone(), convert(v, records)))
                .collect(),
        ),
        scalar => ConfigValue::Value(scalar.clone()),
    }
}

impl ConfigValue {
    fn to_json(&self) -> Value {
        match self {
            ConfigValue::Value(v) => value_to_json(v),
            ConfigValue::Ref(name) => json!({"type": "ref", "value": name}),
            ConfigValue::List(items) => {
                json!({"type": "list", "value": items.iter().map(ConfigValue::to_json).collect::<Vec<_>>()})
            }
            ConfigValue::Map(m) => json!({
                "type": "map",
                "value": m.iter().map(|(k, v)| (k.clone(), v.to_json())).collect::<serde_json::Map<_, _>>(),
            }),
        }
    }

    fn from_json(v: &Value) -> Result<Self> {
        let (tag, value) = tagged(v)?;
        if let Some(scalar) = scalar_from_json(tag, value)? {
            return Ok(ConfigValue::Value(scalar));
        }
        match tag {
            "ref" => Ok(ConfigValue::Ref(
                value
                    .as_str()
                    .ok_or_else(|| Error::Schema("ref value must be a string".into()))?
                    .to_string(),
            )),
            "list" => Ok(ConfigValue::List(
                value
                    .as_array()
                    .ok_or_else(|| Error::Schema("list value must be an array".into()))?
                    .iter()
                    .map(ConfigValue::from_json)
                    .collect::<Result<_>>()?,
            )),
            "map" => Ok(ConfigValue::Map(
                value
                    .as_object()
                    .ok_or_else(|| Error::Schema("map value must be an object".into()))?
                    .iter()
                    .map(|(k, v)| Ok((k.clone(), ConfigValue::from_json(v)?)))
                    .collect::<Result<_>>()?,
            )),
            "obj" => Err(Error::Schema(
                "nested objects must be written as references".into(),
            )),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

impl ConfigRecord {
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "className": self.class_name,
            "properties": self
                .properties
                .iter()
                .map(|(k, v)| (k.clone(), v.to_json()))
                .collect::<serde_json::Map<_, _>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Schema("config record must be an object".into()))?;
        let text = |key: &str| {
            obj.get(key)
                .and_then(Value::as_str)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .ok_or_else(|| Error::Schema(format!("config record needs a non-empty \"{key}\"")))
        };
        let properties = match obj.get("properties") {
            None => BTreeMap::new(),
            Some(p) => p
                .as_object()
                .ok_or_else(|| Error::Schema("\"properties\" must be an object".into()))?
                .iter()
                .map(|(k, v)| Ok((k.clone(), ConfigValue::from_json(v)?)))
                .collect::<Result<_>>()?,
        };
        Ok(Self {
            name: text("name")?,
            class_name: text("className")?,
            properties,
        })
    }
}

/// A set of configuration records, serialized as `{"config": [..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigDocument {
    pub records: Vec<ConfigRecord>,
}

impl ConfigDocument {
    pub fn new(records: Vec<ConfigRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.name.as_str()) {
                return Err(Error::Schema(format!("duplicate record name `{}`", r.name)));
            }
        }
        Ok(Self { records })
    }

    pub fn from_provenance(root: &ProvValue) -> Self {
        Self {
            records: extract_configuration(root),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"config": self.records.iter().map(ConfigRecord::to_json).collect::<Vec<_>>()})
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json values always serialize")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::ParseError {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let list = v
            .get("config")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Schema("config document needs a \"config\" array".into()))?;
        Self::new(
            list.iter()
                .map(ConfigRecord::from_json)
                .collect::<Result<_>>()?,
        )
    }

    pub fn get(&self, name: &str) -> Option<&ConfigRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    /// First record (in document order) whose class satisfies `pred`.
    pub fn find_class(&self, pred: impl Fn(&str) -> bool) -> Option<&ConfigRecord> {
        self.records.iter().find(|r| pred(&r.class_name))
    }

    /// Rebuilds a configuration-only object from the named record,
    /// following references.
    pub fn resolve(&self, name: &str) -> Result<ObjProv> {
        let mut stack = Vec::new();
        self.resolve_inner(name, &mut stack)
    }

    fn resolve_inner(&self, name: &str, stack: &mut Vec<String>) -> Result<ObjProv> {
        if stack.iter().any(|s| s == name) {
            return Err(Error::Schema(format!("reference cycle through `{name}`")));
        }
        let record = self
            .get(name)
            .ok_or_else(|| Error::Schema(format!("dangling reference `{name}`")))?;
        stack.push(name.to_string());
        let mut obj = ObjProv::new(record.class_name.clone());
        for (k, v) in &record.properties {
            obj.config.insert(k.clone(), self.resolve_value(v, stack)?);
        }
        stack.pop();
        Ok(obj)
    }

    fn resolve_value(&self, v: &ConfigValue, stack: &mut Vec<String>) -> Result<ProvValue> {
        Ok(match v {
            ConfigValue::Value(p) => p.clone(),
            ConfigValue::Ref(name) => ProvValue::Obj(self.resolve_inner(name, stack)?),
            ConfigValue::List(items) => ProvValue::List(
                items
                    .iter()
                    .map(|i| self.resolve_value(i, stack))
                    .collect::<Result<_>>()?,
            ),
            ConfigValue::Map(m) => ProvValue::Map(
                m.iter()
                    .map(|(k, v)| Ok((k.clone(), self.resolve_value(v, stack)?)))
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

/// Strips instance fields everywhere, keeping configuration structure.
pub(crate) fn configuration_only(o: &ObjProv) -> ObjProv {
    fn strip(v: &ProvValue) -> ProvValue {
        match v {
            ProvValue::Obj(o) => ProvValue::Obj(configuration_only(o)),
            ProvValue::List(l) => ProvValue::List(l.iter().map(strip).collect()),
            ProvValue::Map(m) => {
                ProvValue::Map(m.iter().map(|(k, v)| (k.clone(), strip(v))).collect())
            }
            other => other.clone(),
        }
    }
    ObjProv {
        class_name: o.class_name.clone(),
        config: o
            .config
            .iter()
            .map(|(k, v)| (k.clone(), strip(v)))
            .collect(),
        instance: BTreeMap::new(),
    }
}
