use std::collections::BTreeMap;

use serde_json::{json, Map, Number, Value};

use super::{ObjProv, ProvValue, Timestamp};
use crate::error::{Error, Result};

/// JSON form `{"type": tag, "value": ..}`. Maps print with sorted keys and
/// floats with the shortest text that parses back to the same bits.
pub fn value_to_json(v: &ProvValue) -> Value {
    let (tag, value) = match v {
        ProvValue::Str(s) => ("str", Value::String(s.clone())),
        ProvValue::Int(i) => ("int", Value::Number((*i).into())),
        ProvValue::Flt(f) => (
            "flt",
            Value::Number(Number::from_f64(*f).expect("provenance floats are finite")),
        ),
        ProvValue::Bool(b) => ("bool", Value::Bool(*b)),
        ProvValue::Timestamp(t) => ("timestamp", json!({"seconds": t.seconds, "nanos": t.nanos})),
        ProvValue::Hash { algorithm, digest } => {
            ("hash", json!({"algorithm": algorithm, "digest": digest}))
        }
        ProvValue::List(items) => (
            "list",
            Value::Array(items.iter().map(value_to_json).collect()),
        ),
        ProvValue::Map(m) => ("map", map_to_json(m)),
        ProvValue::Obj(o) => (
            "obj",
            json!({
                "class": o.class_name,
                "config": map_to_json(&o.config),
                "instance": map_to_json(&o.instance),
            }),
        ),
    };
    json!({"type": tag, "value": value})
}

fn map_to_json(m: &BTreeMap<String, ProvValue>) -> Value {
    Value::Object(
        m.iter()
            .map(|(k, v)| (k.clone(), value_to_json(v)))
            .collect(),
    )
}

pub fn serialize_provenance(v: &ProvValue) -> String {
    serde_json::to_string_pretty(&value_to_json(v)).expect("json values always serialize")
}

pub fn parse_provenance(text: &str) -> Result<ProvValue> {
    let json: Value = serde_json::from_str(text).map_err(|e| Error::ParseError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    value_from_json(&json)
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

/// Splits a tagged node into its tag and payload.
pub(crate) fn tagged(v: &Value) -> Result<(&str, &Value)> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema("expected a tagged object"))?;
    let tag = obj
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| schema("tagged object without a string \"type\""))?;
    if obj.keys().any(|k| k != "type" && k != "value") {
        return Err(schema(format!("unexpected keys in `{tag}` node")));
    }
    Ok((tag, obj.get("value").unwrap_or(&Value::Null)))
}

pub fn value_from_json(v: &Value) -> Result<ProvValue> {
    let (tag, value) = tagged(v)?;
    scalar_from_json(tag, value)?.map_or_else(
        || match tag {
            "list" => Ok(ProvValue::List(
                value
                    .as_array()
                    .ok_or_else(|| schema("list value must be an array"))?
                    .iter()
                    .map(value_from_json)
                    .collect::<Result<_>>()?,
            )),
            "map" => Ok(ProvValue::Map(map_from_json(value)?)),
            "obj" => {
                let body = value
                    .as_object()
                    .ok_or_else(|| schema("obj value must be an object"))?;
                let class_name = body
                    .get("class")
                    .and_then(Value::as_str)
                    .filter(|c| !c.is_empty())
                    .ok_or_else(|| schema("obj requires a non-empty \"class\""))?
                    .to_string();
                let section = |name: &str| match body.get(name) {
                    Some(v) => map_from_json(v),
                    None => Ok(BTreeMap::new()),
                };
                Ok(ProvValue::Obj(ObjProv {
                    class_name,
                    config: section("config")?,
                    instance: section("instance")?,
                }))
            }
            other => Err(Error::UnknownTag(other.to_string())),
        },
        Ok,
    )
}

/// Parses the non-container variants; `Ok(None)` for list/map/obj/unknown.
pub(crate) fn scalar_from_json(tag: &str, value: &Value) -> Result<Option<ProvValue>> {
    let v = match tag {
        "str" => ProvValue::Str(
            value
                .as_str()
                .ok_or_else(|| schema("str value must be a string"))?
                .to_string(),
        ),
        "int" => ProvValue::Int(
            value
                .as_i64()
                .ok_or_else(|| schema("int value must be an i64"))?,
        ),
        "flt" => {
            let f = value
                .as_f64()
                .ok_or_else(|| schema("flt value must be a number"))?;
            if !f.is_finite() {
                return Err(schema("flt value must be finite"));
            }
            ProvValue::Flt(f)
        }
        "bool" => ProvValue::Bool(
            value
                .as_bool()
                .ok_or_else(|| schema("bool value must be a boolean"))?,
        ),
        "timestamp" => {
            let seconds = value.get("seconds").and_then(Value::as_i64);
            let nanos = value.get("nanos").and_then(Value::as_u64);
            match (seconds, nanos) {
                (Some(seconds), Some(nanos)) if nanos < 1_000_000_000 => {
                    ProvValue::Timestamp(Timestamp {
                        seconds,
                        nanos: nanos as u32,
                    })
                }
                _ => return Err(schema("timestamp needs integer seconds and nanos < 1e9")),
            }
        }
        "hash" => {
            let algorithm = value.get("algorithm").and_then(Value::as_str);
            let digest = value.get("digest").and_then(Value::as_str);
            match (algorithm, digest) {
                (Some(a), Some(d)) => ProvValue::Hash {
                    algorithm: a.to_string(),
                    digest: d.to_string(),
                },
                _ => return Err(schema("hash needs string algorithm and digest")),
            }
        }
        _ => return Ok(None),
    };
    Ok(Some(v))
}

fn map_from_json(v: &Value) -> Result<BTreeMap<String, ProvValue>> {
    let obj: &Map<String, Value> = v
        .as_object()
        .ok_or_else(|| schema("map value must be an object"))?;
    obj.iter()
        .map(|(k, v)| Ok((k.clone(), value_from_json(v)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn int_schema() {
        assert_eq!(
            value_to_json(&ProvValue::Int(5)),
            json!({"type": "int", "value": 5})
        );
        let compact = serde_json::to_string(&value_to_json(&ProvValue::Int(5))).unwrap();
        assert_eq!(compact, r#"{"type":"int","value":5}"#);
    }

    #[test]
    fn unknown_tag() {
        assert!(
            matches!(parse_provenance(r#"{"type":"zzz"}"#), Err(Error::UnknownTag(t)) if t == "zzz")
        );
    }

    #[test]
    fn malformed_text_reports_position() {
        match parse_provenance("{\n  \"type\": \"int\",\n  \"value\": }") {
            Err(Error::ParseError { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn awkward_floats_round_trip() {
        for f in [
            0.1,
            -0.0,
            5e-324,
            f64::MAX,
            f64::MIN_POSITIVE,
            1.0 / 3.0,
            123_456_789.123_456_78,
        ] {
            let back = parse_provenance(&serialize_provenance(&ProvValue::Flt(f))).unwrap();
            assert_eq!(back.as_flt().unwrap().to_bits(), f.to_bits());
        }
    }

    #[test]
    fn map_keys_sorted_in_output() {
        let mut m = BTreeMap::new();
        m.insert("zeta".to_string(), ProvValue::Int(1));
        m.insert("alpha".to_string(), ProvValue::Int(2));
        let text = serialize_provenance(&ProvValue::Map(m));
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]
        #[test]
        fn round_trip(v in super::super::testing::tree()) {
            let back = parse_provenance(&serialize_provenance(&v)).unwrap();
            prop_assert_eq!(back, v);
        }
    }
}
