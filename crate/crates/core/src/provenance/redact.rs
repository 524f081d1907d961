use super::{ModelProvenance, ObjProv, ProvValue};

pub const REDACTED_MARKER: &str = "<REDACTED>";

fn marker() -> ProvValue {
    ProvValue::Str(REDACTED_MARKER.to_string())
}

/// Replaces every leaf with the marker, keeping object classes, map keys
/// and list shapes.
fn blank(v: &ProvValue) -> ProvValue {
    match v {
        ProvValue::List(l) => ProvValue::List(l.iter().map(blank).collect()),
        ProvValue::Map(m) => ProvValue::Map(m.iter().map(|(k, v)| (k.clone(), blank(v))).collect()),
        ProvValue::Obj(o) => ProvValue::Obj(ObjProv {
            class_name: o.class_name.clone(),
            config: o
                .config
                .iter()
                .map(|(k, v)| (k.clone(), blank(v)))
                .collect(),
            instance: o
                .instance
                .iter()
                .map(|(k, v)| (k.clone(), blank(v)))
                .collect(),
        }),
        _ => marker(),
    }
}

/// Blanks configuration values of a trainer (and any wrapped trainer) but
/// keeps instance facts such as the invocation count.
fn blank_config(o: &ObjProv) -> ObjProv {
    ObjProv {
        class_name: o.class_name.clone(),
        config: o
            .config
            .iter()
            .map(|(k, v)| {
                let v = match v {
                    ProvValue::Obj(inner) => ProvValue::Obj(blank_config(inner)),
                    other => blank(other),
                };
                (k.clone(), v)
            })
            .collect(),
        instance: o.instance.clone(),
    }
}

/// Returns the provenance hash and a copy with the dataset description and
/// trainer configuration replaced by markers. The hash is stored at the root
/// under `redacted-provenance` so the copy can be linked back to the full
/// record kept elsewhere. Ensemble members are redacted the same way.
pub fn redact(v: &ModelProvenance) -> (String, ModelProvenance) {
    let digest = v.hash();
    let src = v.as_obj();
    let mut out = ObjProv::new(src.class_name.clone());
    for (k, val) in &src.config {
        let redacted = match (k.as_str(), val) {
            ("trainer", ProvValue::Obj(t)) => ProvValue::Obj(blank_config(t)),
            _ => blank(val),
        };
        out.config.insert(k.clone(), redacted);
    }
    for (k, val) in &src.instance {
        let redacted = match (k.as_str(), val) {
            ("members", ProvValue::List(members)) => ProvValue::List(
                members
                    .iter()
                    .map(|m| match m {
                        ProvValue::Obj(o) => {
                            redact(&ModelProvenance::from_obj_unchecked(o.clone()))
                                .1
                                .into()
                        }
                        other => blank(other),
                    })
                    .collect(),
            ),
            _ => val.clone(),
        };
        out.instance.insert(k.clone(), redacted);
    }
    out.instance.insert(
        "redacted-provenance".into(),
        ProvValue::sha256(digest.clone()),
    );
    (digest, ModelProvenance::from_obj_unchecked(out))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::super::{
        serialize_provenance, DataProvenance, DataSourceProvenance, TrainerProvenance,
    };
    use super::*;

    fn model(path: &str) -> ModelProvenance {
        let source = DataSourceProvenance::new(
            "CsvLoader",
            [("path".to_string(), ProvValue::from(path))]
                .into_iter()
                .collect(),
            "cd".repeat(32),
        );
        let data = DataProvenance::new(source, 4, 2);
        let base = TrainerProvenance::new(
            "CARTTrainer",
            [("max-depth".to_string(), ProvValue::Int(3))]
                .into_iter()
                .collect(),
            0,
        );
        let trainer = TrainerProvenance::new(
            "EnsembleTrainer",
            [
                ("base-trainer".to_string(), base.clone().into()),
                ("seed".to_string(), ProvValue::Int(9)),
            ]
            .into_iter()
            .collect(),
            1,
        );
        let member = ModelProvenance::new("CARTModel", base, data.clone(), None, &BTreeMap::new());
        ModelProvenance::new(
            "EnsembleModel",
            trainer,
            data,
            Some(vec![member]),
            &BTreeMap::new(),
        )
    }

    #[test]
    fn digest_is_provenance_hash() {
        let m = model("/secret/customers.csv");
        let (digest, redacted) = redact(&m);
        assert_eq!(digest, m.hash());
        assert_eq!(
            redacted.as_obj().instance["redacted-provenance"].hash_digest(),
            Some(digest.as_str())
        );
    }

    #[test]
    fn no_paths_survive() {
        let m = model("/secret/customers.csv");
        let (_, redacted) = redact(&m);
        let text = serialize_provenance(&redacted.to_value());
        assert!(!text.contains("customers.csv"));
        assert!(text.contains("CsvLoader"));
        assert!(text.contains("CARTTrainer"));
        assert_eq!(redacted.trainer().invocation_count(), 1);
    }

    #[test]
    fn deterministic() {
        let m = model("/a.csv");
        assert_eq!(redact(&m), redact(&m));
    }
}
