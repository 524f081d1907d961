//! Provenance: the typed value tree every dataset, model and evaluation
//! carries, plus its canonical encoding, hashing, JSON form, configuration
//! extraction and redaction.

mod config;
mod encode;
mod json;
mod redact;
mod types;

use std::collections::BTreeMap;
use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

pub(crate) use config::configuration_only;
pub use config::{extract_configuration, ConfigDocument, ConfigRecord, ConfigValue};
pub use encode::{
    canonical_encode, is_volatile_key, provenance_hash, scrub_volatile, VOLATILE_MARKER,
};
pub use json::{parse_provenance, serialize_provenance, value_from_json, value_to_json};
pub use redact::{redact, REDACTED_MARKER};
pub use types::{
    DataProvenance, DataSourceProvenance, EvaluationProvenance, ModelProvenance, TrainerProvenance,
    INVOCATION_COUNT_KEY,
};

/// UTC instant as seconds since the Unix epoch plus nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp {
    pub seconds: i64,
    pub nanos: u32,
}

impl Timestamp {
    pub fn now() -> Self {
        match SystemTime::now().duration_since(UNIX_EPOCH) {
            Ok(d) => Self {
                seconds: d.as_secs() as i64,
                nanos: d.subsec_nanos(),
            },
            Err(e) => {
                // Clock before the epoch.
                let d = e.duration();
                Self {
                    seconds: -(d.as_secs() as i64) - 1,
                    nanos: 1_000_000_000 - d.subsec_nanos(),
                }
            }
        }
    }
}

/// Whether an object field is statically known configuration or a value
/// derived while the computation ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Configuration,
    Instance,
}

/// A provenance object: a class name plus fields partitioned into
/// configuration and instance entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjProv {
    pub class_name: String,
    pub config: BTreeMap<String, ProvValue>,
    pub instance: BTreeMap<String, ProvValue>,
}

impl ObjProv {
    pub fn new(class_name: impl Into<String>) -> Self {
        Self {
            class_name: class_name.into(),
            config: BTreeMap::new(),
            instance: BTreeMap::new(),
        }
    }

    pub fn with_config(mut self, key: impl Into<String>, value: impl Into<ProvValue>) -> Self {
        self.config.insert(key.into(), value.into());
        self
    }

    pub fn with_instance(mut self, key: impl Into<String>, value: impl Into<ProvValue>) -> Self {
        self.instance.insert(key.into(), value.into());
        self
    }

    /// Looks a field up in the configuration entries first, then instance.
    pub fn get(&self, key: &str) -> Option<&ProvValue> {
        self.config.get(key).or_else(|| self.instance.get(key))
    }

    pub fn field_kind(&self, key: &str) -> Option<FieldKind> {
        if self.config.contains_key(key) {
            Some(FieldKind::Configuration)
        } else if self.instance.contains_key(key) {
            Some(FieldKind::Instance)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub enum ProvValue {
    Str(String),
    Int(i64),
    Flt(f64),
    Bool(bool),
    Timestamp(Timestamp),
    Hash { algorithm: String, digest: String },
    List(Vec<ProvValue>),
    Map(BTreeMap<String, ProvValue>),
    Obj(ObjProv),
}

// Floats compare by bit pattern so equality agrees with the canonical encoding.
impl PartialEq for ProvValue {
    fn eq(&self, other: &Self) -> bool {
        use ProvValue::*;
        match (self, other) {
            (Str(a), Str(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Flt(a), Flt(b)) => a.to_bits() == b.to_bits(),
            (Bool(a), Bool(b)) => a == b,
            (Timestamp(a), Timestamp(b)) => a == b,
            (
                Hash {
                    algorithm: a1,
                    digest: d1,
                },
                Hash {
                    algorithm: a2,
                    digest: d2,
                },
            ) => a1 == a2 && d1 == d2,
            (List(a), List(b)) => a == b,
            (Map(a), Map(b)) => a == b,
            (Obj(a), Obj(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for ProvValue {}

impl ProvValue {
    pub fn sha256(digest: impl Into<String>) -> Self {
        ProvValue::Hash {
            algorithm: "SHA-256".to_string(),
            digest: digest.into(),
        }
    }

    pub fn tag_name(&self) -> &'static str {
        match self {
            ProvValue::Str(_) => "str",
            ProvValue::Int(_) => "int",
            ProvValue::Flt(_) => "flt",
            ProvValue::Bool(_) => "bool",
            ProvValue::Timestamp(_) => "timestamp",
            ProvValue::Hash { .. } => "hash",
            ProvValue::List(_) => "list",
            ProvValue::Map(_) => "map",
            ProvValue::Obj(_) => "obj",
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ProvValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            ProvValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_flt(&self) -> Option<f64> {
        match self {
            ProvValue::Flt(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            ProvValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[ProvValue]> {
        match self {
            ProvValue::List(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&BTreeMap<String, ProvValue>> {
        match self {
            ProvValue::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_obj(&self) -> Option<&ObjProv> {
        match self {
            ProvValue::Obj(o) => Some(o),
            _ => None,
        }
    }

    pub fn hash_digest(&self) -> Option<&str> {
        match self {
            ProvValue::Hash { digest, .. } => Some(digest),
            _ => None,
        }
    }

    /// Checks the structural invariants: finite floats, non-empty class names.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ProvValue::Flt(f) if !f.is_finite() => Err(format!("non-finite float {f}")),
            ProvValue::Timestamp(t) if t.nanos >= 1_000_000_000 => {
                Err(format!("timestamp nanos out of range: {}", t.nanos))
            }
            ProvValue::List(items) => items.iter().try_for_each(ProvValue::validate),
            ProvValue::Map(m) => m.values().try_for_each(ProvValue::validate),
            ProvValue::Obj(o) => {
                if o.class_name.is_empty() {
                    return Err("object with empty class name".to_string());
                }
                o.config
                    .values()
                    .chain(o.instance.values())
                    .try_for_each(ProvValue::validate)
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ProvValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProvValue::Str(s) => write!(f, "{s:?}"),
            ProvValue::Int(i) => write!(f, "{i}"),
            ProvValue::Flt(x) => write!(f, "{x:?}"),
            ProvValue::Bool(b) => write!(f, "{b}"),
            ProvValue::Timestamp(t) => write!(f, "{}.{:09}", t.seconds, t.nanos),
            ProvValue::Hash { algorithm, digest } => write!(f, "{algorithm}:{digest}"),
            other => f.write_str(&serialize_provenance(other)),
        }
    }
}

impl From<&str> for ProvValue {
    fn from(s: &str) -> Self {
        ProvValue::Str(s.to_string())
    }
}

impl From<String> for ProvValue {
    fn from(s: String) -> Self {
        ProvValue::Str(s)
    }
}

impl From<i64> for ProvValue {
    fn from(i: i64) -> Self {
        ProvValue::Int(i)
    }
}

impl From<usize> for ProvValue {
    fn from(i: usize) -> Self {
        ProvValue::Int(i as i64)
    }
}

/// Seeds and counters are stored as the two's-complement reinterpretation.
impl From<u64> for ProvValue {
    fn from(i: u64) -> Self {
        ProvValue::Int(i as i64)
    }
}

impl From<f64> for ProvValue {
    fn from(f: f64) -> Self {
        ProvValue::Flt(f)
    }
}

impl From<bool> for ProvValue {
    fn from(b: bool) -> Self {
        ProvValue::Bool(b)
    }
}

impl From<Timestamp> for ProvValue {
    fn from(t: Timestamp) -> Self {
        ProvValue::Timestamp(t)
    }
}

impl From<ObjProv> for ProvValue {
    fn from(o: ObjProv) -> Self {
        ProvValue::Obj(o)
    }
}

impl From<Vec<ProvValue>> for ProvValue {
    fn from(l: Vec<ProvValue>) -> Self {
        ProvValue::List(l)
    }
}

impl From<BTreeMap<String, ProvValue>> for ProvValue {
    fn from(m: BTreeMap<String, ProvValue>) -> Self {
        ProvValue::Map(m)
    }
}
