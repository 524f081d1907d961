use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::example::{Example, Output};
use crate::provenance::{canonical_encode, DataSourceProvenance, ProvValue};

pub const IN_MEMORY_SOURCE_CLASS: &str = "InMemorySource";

/// A repeatable, order-stable sequence of examples plus a description of
/// where they came from.
pub trait DataSource: Send + Sync {
    fn iter(&self) -> Box<dyn Iterator<Item = Result<Example>> + '_>;

    fn provenance(&self) -> DataSourceProvenance;

    fn examples(&self) -> Result<Vec<Example>> {
        self.iter().collect()
    }
}

/// Examples built in memory. The content hash covers the canonical
/// encoding of every example.
#[derive(Debug, Clone)]
pub struct InMemorySource {
    examples: Vec<Example>,
    provenance: DataSourceProvenance,
}

fn example_value(e: &Example) -> ProvValue {
    let features: BTreeMap<String, ProvValue> = e
        .pairs()
        .map(|(n, v)| (n.to_string(), ProvValue::Flt(v)))
        .collect();
    let output = match e.output() {
        Output::Categorical(l) => ProvValue::from(l.as_str()),
        Output::Real(v) => ProvValue::Flt(*v),
        Output::Unknown => ProvValue::Bool(false),
    };
    let mut m = BTreeMap::new();
    m.insert("features".to_string(), ProvValue::Map(features));
    m.insert("output".to_string(), output);
    m.insert("weight".to_string(), ProvValue::Flt(e.weight()));
    ProvValue::Map(m)
}

impl InMemorySource {
    pub fn new(description: &str, examples: Vec<Example>) -> Self {
        let encoded = canonical_encode(&ProvValue::List(
            examples.iter().map(example_value).collect(),
        ));
        let digest = hex::encode(Sha256::digest(encoded));
        let config = [("description".to_string(), ProvValue::from(description))]
            .into_iter()
            .collect();
        Self {
            examples,
            provenance: DataSourceProvenance::new(IN_MEMORY_SOURCE_CLASS, config, digest),
        }
    }
}

impl DataSource for InMemorySource {
    fn iter(&self) -> Box<dyn Iterator<Item = Result<Example>> + '_> {
        Box::new(self.examples.iter().cloned().map(Ok))
    }

    fn provenance(&self) -> DataSourceProvenance {
        self.provenance.clone()
    }
}
