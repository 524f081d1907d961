use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::example::{Example, Output, Task};
use crate::provenance::{ConfigDocument, ObjProv, ProvValue};

pub const COLUMNAR_SCHEMA_CLASS: &str = "ColumnarSchema";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// The cell parses as the feature value.
    Numeric,
    /// One indicator feature `column@value`.
    Categorical,
    /// Lowercased tokens counted as `column@token`.
    Text,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Text => "text",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "numeric" => Some(ColumnKind::Numeric),
            "categorical" => Some(ColumnKind::Categorical),
            "text" => Some(ColumnKind::Text),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldProcessor {
    pub column: String,
    pub kind: ColumnKind,
}

/// How string columns become features and which column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnarSchema {
    response_column: String,
    response_type: Task,
    fields: Vec<FieldProcessor>,
}

impl ColumnarSchema {
    pub fn new(
        response_column: impl Into<String>,
        response_type: Task,
        fields: Vec<FieldProcessor>,
    ) -> Result<Self> {
        let response_column = response_column.into();
        let mut seen = HashSet::new();
        for f in &fields {
            if f.column == response_column {
                return Err(Error::InvalidSchema(format!(
                    "response column `{response_column}` is also a feature column"
                )));
            }
            if !seen.insert(f.column.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "column `{}` listed twice",
                    f.column
                )));
            }
        }
        Ok(Self {
            response_column,
            response_type,
            fields,
        })
    }

    pub fn response_column(&self) -> &str {
        &self.response_column
    }

    pub fn response_type(&self) -> Task {
        self.response_type
    }

    pub fn fields(&self) -> &[FieldProcessor] {
        &self.fields
    }

    /// Every column the schema reads, response first.
    pub fn columns(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.response_column.as_str())
            .chain(self.fields.iter().map(|f| f.column.as_str()))
    }

    pub fn provenance(&self) -> ObjProv {
        let fields = self
            .fields
            .iter()
            .map(|f| {
                let mut m = BTreeMap::new();
                m.insert("column".to_string(), ProvValue::from(f.column.as_str()));
                m.insert("kind".to_string(), ProvValue::from(f.kind.as_str()));
                ProvValue::Map(m)
            })
            .collect::<Vec<_>>();
        ObjProv::new(COLUMNAR_SCHEMA_CLASS)
            .with_config("response-column", self.response_column.as_str())
            .with_config("response-type", self.response_type.as_str())
            .with_config("fields", fields)
    }

    pub fn from_config(o: &ObjProv) -> Result<Self> {
        let text = |key: &str| {
            o.config
                .get(key)
                .ok_or_else(|| Error::MissingProperty(key.to_string()))?
                .as_str()
                .ok_or_else(|| Error::InvalidSchema(format!("`{key}` must be a string")))
        };
        let response_type = Task::parse(text("response-type")?).ok_or_else(|| {
            Error::InvalidSchema("response-type must be categorical or real".into())
        })?;
        let fields = o
            .config
            .get("fields")
            .ok_or_else(|| Error::MissingProperty("fields".into()))?
            .as_list()
            .ok_or_else(|| Error::InvalidSchema("`fields` must be a list".into()))?
            .iter()
            .map(|f| {
                let m = f
                    .as_map()
                    .ok_or_else(|| Error::InvalidSchema("field entries must be maps".into()))?;
                let get = |k: &str| {
                    m.get(k).and_then(ProvValue::as_str).ok_or_else(|| {
                        Error::InvalidSchema(format!("field entry needs string `{k}`"))
                    })
                };
                let kind = ColumnKind::parse(get("kind")?).ok_or_else(|| {
                    Error::InvalidSchema(format!(
                        "unknown column kind `{}`",
                        get("kind").unwrap_or("")
                    ))
                })?;
                Ok(FieldProcessor {
                    column: get("column")?.to_string(),
                    kind,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(text("response-column")?, response_type, fields)
    }

    /// Reads the first `ColumnarSchema` record of a configuration document.
    pub fn from_document(doc: &ConfigDocument) -> Result<Self> {
        let record = doc
            .find_class(|c| c == COLUMNAR_SCHEMA_CLASS)
            .ok_or_else(|| Error::UnknownClass(COLUMNAR_SCHEMA_CLASS.to_string()))?;
        Self::from_config(&doc.resolve(&record.name)?)
    }

    pub fn to_document(&self) -> ConfigDocument {
        ConfigDocument::from_provenance(&self.provenance().into())
    }

    /// Turns one row into an example. Empty cells produce no feature; an
    /// empty response cell produces an unlabelled example.
    pub fn featurize_row(&self, row: &BTreeMap<String, String>) -> Result<Example> {
        self.featurize_with(|c| row.get(c).map(String::as_str))
    }

    pub(crate) fn featurize_with<'a>(
        &self,
        cell: impl Fn(&str) -> Option<&'a str>,
    ) -> Result<Example> {
        let mut features: Vec<(String, f64)> = Vec::new();
        for f in &self.fields {
            let Some(raw) = cell(&f.column).filter(|v| !v.is_empty()) else {
                continue;
            };
            match f.kind {
                ColumnKind::Numeric => {
                    let v = parse_finite(raw).ok_or_else(|| Error::UnparseableNumeric {
                        column: f.column.clone(),
                        value: raw.to_string(),
                    })?;
                    features.push((f.column.clone(), v));
                }
                ColumnKind::Categorical => features.push((format!("{}@{}", f.column, raw), 1.0)),
                ColumnKind::Text => {
                    let lower = raw.to_lowercase();
                    for token in lower
                        .split(|c: char| !c.is_alphanumeric())
                        .filter(|t| !t.is_empty())
                    {
                        features.push((format!("{}@{}", f.column, token), 1.0));
                    }
                }
            }
        }
        let response = cell(&self.response_column)
            .ok_or_else(|| Error::MissingResponse(self.response_column.clone()))?;
        let output = if response.is_empty() {
            Output::Unknown
        } else {
            match self.response_type {
                Task::Categorical => Output::Categorical(response.to_string()),
                Task::Real => Output::Real(parse_finite(response).ok_or_else(|| {
                    Error::UnparseableNumeric {
                        column: self.response_column.clone(),
                        value: response.to_string(),
                    }
                })?),
            }
        };
        // Token counts come from summing duplicate names.
        Example::new(features, output, 1.0)
    }
}

fn parse_finite(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> ColumnarSchema {
        ColumnarSchema::new(
            "label",
            Task::Categorical,
            vec![
                FieldProcessor {
                    column: "age".into(),
                    kind: ColumnKind::Numeric,
                },
                FieldProcessor {
                    column: "color".into(),
                    kind: ColumnKind::Categorical,
                },
                FieldProcessor {
                    column: "msg".into(),
                    kind: ColumnKind::Text,
                },
            ],
        )
        .unwrap()
    }

    fn row(cells: &[(&str, &str)]) -> BTreeMap<String, String> {
        cells
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn featurizes_each_kind() {
        let e = schema()
            .featurize_row(&row(&[
                ("label", "yes"),
                ("age", "3.5"),
                ("color", "red"),
                ("msg", "a b a"),
            ]))
            .unwrap();
        assert_eq!(
            e.pairs().collect::<Vec<_>>(),
            [
                ("age", 3.5),
                ("color@red", 1.0),
                ("msg@a", 2.0),
                ("msg@b", 1.0)
            ]
        );
        assert_eq!(e.output(), &Output::Categorical("yes".into()));
    }

    #[test]
    fn text_tokenizer_lowercases_and_splits_runs() {
        let e = schema()
            .featurize_row(&row(&[("label", "x"), ("msg", "Hello,  WORLD!!hello")]))
            .unwrap();
        assert_eq!(
            e.pairs().collect::<Vec<_>>(),
            [("msg@hello", 2.0), ("msg@world", 1.0)]
        );
    }

    #[test]
    fn empty_cells_skip_and_errors() {
        let e = schema()
            .featurize_row(&row(&[("label", ""), ("age", "1"), ("color", "")]))
            .unwrap();
        assert_eq!(e.pairs().collect::<Vec<_>>(), [("age", 1.0)]);
        assert_eq!(e.output(), &Output::Unknown);
        assert!(matches!(
            schema().featurize_row(&row(&[("label", "x"), ("age", "old")])),
            Err(Error::UnparseableNumeric { .. })
        ));
        assert!(matches!(
            schema().featurize_row(&row(&[("label", "x"), ("age", "NaN")])),
            Err(Error::UnparseableNumeric { .. })
        ));
        assert!(matches!(
            schema().featurize_row(&row(&[("age", "1")])),
            Err(Error::MissingResponse(_))
        ));
    }

    #[test]
    fn schema_validation() {
        let dup = vec![
            FieldProcessor {
                column: "a".into(),
                kind: ColumnKind::Numeric,
            },
            FieldProcessor {
                column: "a".into(),
                kind: ColumnKind::Text,
            },
        ];
        assert!(ColumnarSchema::new("y", Task::Real, dup).is_err());
        let resp = vec![FieldProcessor {
            column: "y".into(),
            kind: ColumnKind::Numeric,
        }];
        assert!(ColumnarSchema::new("y", Task::Real, resp).is_err());
    }

    #[test]
    fn document_round_trip() {
        let s = schema();
        let doc = ConfigDocument::parse(&s.to_document().to_json_string()).unwrap();
        assert_eq!(ColumnarSchema::from_document(&doc).unwrap(), s);
    }
}
