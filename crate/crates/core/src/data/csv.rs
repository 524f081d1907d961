use std::collections::HashMap;
use std::path::Path;

use ::csv::{ReaderBuilder, StringRecord};
use sha2::{Digest, Sha256};

use super::columnar::ColumnarSchema;
use super::source::DataSource;
use crate::error::{Error, Result};
use crate::example::Example;
use crate::provenance::{DataSourceProvenance, ProvValue};

pub const CSV_LOADER_CLASS: &str = "CsvLoader";

/// A CSV file featurized through a [`ColumnarSchema`].
///
/// The file is read and hashed once at load; rows are featurized on each
/// iteration from those bytes, so iteration is repeatable even if the file
/// changes on disk afterwards.
#[derive(Debug, Clone)]
pub struct CsvSource {
    schema: ColumnarSchema,
    bytes: Vec<u8>,
    columns: HashMap<String, usize>,
    provenance: DataSourceProvenance,
}

fn reader(bytes: &[u8]) -> ::csv::Reader<&[u8]> {
    ReaderBuilder::new()
        .has_headers(true)
        .delimiter(b',')
        .quote(b'"')
        .from_reader(bytes)
}

fn csv_error(e: ::csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::CsvParseError {
        line,
        message: e.to_string(),
    }
}

/// Reads `path`, checks its header against `schema` and records the path
/// (as given), the SHA-256 of the raw bytes and the schema.
pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnarSchema) -> Result<CsvSource> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let header = reader(&bytes).headers().map_err(csv_error)?.clone();
    let columns: HashMap<String, usize> = header
        .iter()
        .enumerate()
        .map(|(i, name)| (name.to_string(), i))
        .collect();
    let missing: Vec<String> = schema
        .columns()
        .filter(|c| !columns.contains_key(*c))
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(Error::HeaderMismatch { missing });
    }
    let digest = hex::encode(Sha256::digest(&bytes));
    let config = [
        (
            "path".to_string(),
            ProvValue::from(path.to_string_lossy().into_owned()),
        ),
        ("schema".to_string(), ProvValue::Obj(schema.provenance())),
        ("delimiter".to_string(), ProvValue::from(",")),
        ("quote".to_string(), ProvValue::from("\"")),
    ]
    .into_iter()
    .collect();
    Ok(CsvSource {
        schema: schema.clone(),
        bytes,
        columns,
        provenance: DataSourceProvenance::new(CSV_LOADER_CLASS, config, digest),
    })
}

impl CsvSource {
    pub fn schema(&self) -> &ColumnarSchema {
        &self.schema
    }

    fn featurize(&self, record: &StringRecord) -> Result<Example> {
        self.schema
            .featurize_with(|c| self.columns.get(c).and_then(|&i| record.get(i)))
            .map_err(|e| match (e, record.position()) {
                (Error::EmptyExample, Some(p)) => Error::CsvParseError {
                    line: p.line(),
                    message: "row produced no features".into(),
                },
                (e, _) => e,
            })
    }
}

impl DataSource for CsvSource {
    fn iter(&self) -> Box<dyn Iterator<Item = Result<Example>> + '_> {
        Box::new(
            reader(&self.bytes)
                .into_records()
                .map(move |r| r.map_err(csv_error).and_then(|rec| self.featurize(&rec))),
        )
    }

    fn provenance(&self) -> DataSourceProvenance {
        self.provenance.clone()
    }
}
