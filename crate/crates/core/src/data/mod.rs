//! Data ingestion and transformation, each step recording its provenance.

mod columnar;
mod csv;
mod source;
mod transform;

pub use self::columnar::{ColumnKind, ColumnarSchema, FieldProcessor, COLUMNAR_SCHEMA_CLASS};
pub use self::csv::{load_csv, CsvSource, CSV_LOADER_CLASS};
pub use self::source::{DataSource, InMemorySource, IN_MEMORY_SOURCE_CLASS};
pub use self::transform::{
    apply_transformers, fit_transformers, recorded_transformers, FittedTransform, TransformKind,
    TransformSpec, TransformerMap, TRANSFORMER_MAP_CLASS,
};
