//! Typed reads of trainer configuration fields.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::provenance::ProvValue;

pub(crate) type Config = BTreeMap<String, ProvValue>;

fn field<'a>(config: &'a Config, key: &str) -> Result<&'a ProvValue> {
    config
        .get(key)
        .ok_or_else(|| Error::MissingProperty(key.to_string()))
}

fn wrong(key: &str, want: &str) -> Error {
    Error::InvalidConfig(format!("`{key}` must be {want}"))
}

pub(crate) fn int(config: &Config, key: &str) -> Result<i64> {
    field(config, key)?
        .as_int()
        .ok_or_else(|| wrong(key, "an integer"))
}

pub(crate) fn count(config: &Config, key: &str) -> Result<usize> {
    usize::try_from(int(config, key)?).map_err(|_| wrong(key, "non-negative"))
}

/// Seeds are stored as the two's-complement `i64` of the `u64`.
pub(crate) fn seed(config: &Config, key: &str) -> Result<u64> {
    Ok(int(config, key)? as u64)
}

pub(crate) fn flt(config: &Config, key: &str) -> Result<f64> {
    match field(config, key)? {
        ProvValue::Flt(v) => Ok(*v),
        ProvValue::Int(v) => Ok(*v as f64),
        _ => Err(wrong(key, "a number")),
    }
}

pub(crate) fn text<'a>(config: &'a Config, key: &str) -> Result<&'a str> {
    field(config, key)?
        .as_str()
        .ok_or_else(|| wrong(key, "a string"))
}

pub(crate) fn boolean(config: &Config, key: &str) -> Result<bool> {
    field(config, key)?
        .as_bool()
        .ok_or_else(|| wrong(key, "a boolean"))
}
