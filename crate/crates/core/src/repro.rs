//! Rebuilding data sources and trainers from recorded configuration,
//! reproducing models, and diffing provenance.
//!
//! Loader and trainer classes are looked up in open registries: the
//! built-in classes are present from the start and applications may add
//! their own with [`register_loader_class`] and [`register_trainer_class`].

use std::collections::{BTreeMap, HashMap};
use std::sync::{LazyLock, RwLock};

use crate::data::{
    apply_transformers, fit_transformers, load_csv, ColumnarSchema, DataSource, TransformSpec,
    CSV_LOADER_CLASS, TRANSFORMER_MAP_CLASS,
};
use crate::dataset::Dataset;
use crate::ensemble::{EnsembleTrainer, ENSEMBLE_TRAINER_CLASS};
use crate::error::{Error, Result};
use crate::model::{Model, Trainer};
use crate::optimize::{LinearSgdTrainer, LINEAR_TRAINER_CLASS};
use crate::params;
use crate::provenance::{
    is_volatile_key, provenance_hash, ConfigDocument, ConfigRecord, DataSourceProvenance,
    ModelProvenance, ObjProv, ProvValue, TrainerProvenance, INVOCATION_COUNT_KEY,
};
use crate::trees::{CartTrainer, TREE_TRAINER_CLASS};

/// Builds a data source from a configuration-only object.
pub type LoaderFactory = fn(&ObjProv) -> Result<Box<dyn DataSource>>;
/// Builds a trainer (invocation count 0) from its configuration fields.
pub type TrainerFactory = fn(&BTreeMap<String, ProvValue>) -> Result<Box<dyn Trainer>>;

static LOADERS: LazyLock<RwLock<HashMap<String, LoaderFactory>>> = LazyLock::new(|| {
    let mut m: HashMap<String, LoaderFactory> = HashMap::new();
    m.insert(CSV_LOADER_CLASS.into(), csv_loader);
    RwLock::new(m)
});

static TRAINERS: LazyLock<RwLock<HashMap<String, TrainerFactory>>> = LazyLock::new(|| {
    let mut m: HashMap<String, TrainerFactory> = HashMap::new();
    m.insert(LINEAR_TRAINER_CLASS.into(), |c| {
        Ok(Box::new(LinearSgdTrainer::from_config(c)?))
    });
    m.insert(TREE_TRAINER_CLASS.into(), |c| {
        Ok(Box::new(CartTrainer::from_config(c)?))
    });
    m.insert(ENSEMBLE_TRAINER_CLASS.into(), |c| {
        Ok(Box::new(EnsembleTrainer::from_config(c)?))
    });
    RwLock::new(m)
});

pub fn register_loader_class(class_name: &str, factory: LoaderFactory) {
    LOADERS
        .write()
        .expect("loader registry poisoned")
        .insert(class_name.to_string(), factory);
}

pub fn register_trainer_class(class_name: &str, factory: TrainerFactory) {
    TRAINERS
        .write()
        .expect("trainer registry poisoned")
        .insert(class_name.to_string(), factory);
}

pub fn is_loader_class(class_name: &str) -> bool {
    LOADERS
        .read()
        .expect("loader registry poisoned")
        .contains_key(class_name)
}

pub fn is_trainer_class(class_name: &str) -> bool {
    TRAINERS
        .read()
        .expect("trainer registry poisoned")
        .contains_key(class_name)
}

fn csv_loader(o: &ObjProv) -> Result<Box<dyn DataSource>> {
    let path = params::text(&o.config, "path")?;
    let schema = o
        .config
        .get("schema")
        .ok_or_else(|| Error::MissingProperty("schema".into()))?;
    let schema = schema
        .as_obj()
        .ok_or_else(|| Error::InvalidConfig("`schema` must be an object".into()))?;
    Ok(Box::new(load_csv(
        path,
        &ColumnarSchema::from_config(schema)?,
    )?))
}

/// Instantiates the first registered loader described by `records` and, when
/// `expected_hash` is given, checks the reloaded resource still has it.
pub fn reconstruct_source(
    records: &[ConfigRecord],
    expected_hash: Option<&str>,
) -> Result<Box<dyn DataSource>> {
    let doc = ConfigDocument::new(records.to_vec())?;
    let record = doc.find_class(is_loader_class).ok_or_else(|| {
        Error::UnknownClass(
            records
                .first()
                .map_or("<empty>".into(), |r| r.class_name.clone()),
        )
    })?;
    source_from_config(&doc.resolve(&record.name)?, expected_hash)
}

fn source_from_config(o: &ObjProv, expected_hash: Option<&str>) -> Result<Box<dyn DataSource>> {
    let factory = *LOADERS
        .read()
        .expect("loader registry poisoned")
        .get(&o.class_name)
        .ok_or_else(|| Error::UnknownClass(o.class_name.clone()))?;
    let source = factory(o)?;
    if let Some(expected) = expected_hash {
        let actual = source
            .provenance()
            .resource_hash()
            .unwrap_or_default()
            .to_string();
        if actual != expected {
            let path = o
                .config
                .get("path")
                .and_then(ProvValue::as_str)
                .unwrap_or(&o.class_name)
                .to_string();
            return Err(Error::ResourceChanged {
                path,
                expected: expected.to_string(),
                actual,
            });
        }
    }
    Ok(source)
}

/// Reloads the source a dataset was read from, verifying its content hash.
pub fn source_from_provenance(p: &DataSourceProvenance) -> Result<Box<dyn DataSource>> {
    source_from_config(
        &crate::provenance::configuration_only(p.as_obj()),
        p.resource_hash(),
    )
}

/// A trainer for a (possibly configuration-only) trainer object. The
/// invocation count is restored when the object records one.
pub fn trainer_from_provenance(o: &ObjProv) -> Result<Box<dyn Trainer>> {
    let factory = *TRAINERS
        .read()
        .expect("trainer registry poisoned")
        .get(&o.class_name)
        .ok_or_else(|| Error::UnknownClass(o.class_name.clone()))?;
    let mut trainer = factory(&o.config)?;
    if let Some(count) = o
        .instance
        .get(INVOCATION_COUNT_KEY)
        .and_then(ProvValue::as_int)
    {
        trainer.set_invocation_count(count as u64);
    }
    Ok(trainer)
}

pub fn reconstruct_trainer(tp: &TrainerProvenance) -> Result<Box<dyn Trainer>> {
    trainer_from_provenance(tp.as_obj())
}

/// The first record of `doc` naming a registered trainer, built fresh.
pub fn trainer_from_document(doc: &ConfigDocument) -> Result<Box<dyn Trainer>> {
    let record = doc
        .find_class(is_trainer_class)
        .ok_or_else(|| Error::UnknownClass("no trainer class in configuration".into()))?;
    trainer_from_provenance(&doc.resolve(&record.name)?)
}

/// Re-runs the recorded pipeline: reload and verify the source, rebuild the
/// dataset, refit and apply each recorded transformation in order, then
/// train with the recorded trainer at its recorded invocation count.
pub fn reproduce_model(mp: &ModelProvenance) -> Result<Model> {
    let data = mp.data();
    if data.is_view() {
        return Err(Error::InvalidConfig(
            "models trained on sampled views are reproduced through their ensemble".into(),
        ));
    }
    let source = source_from_provenance(&DataSourceProvenance::from_value(ProvValue::Obj(
        data.source().clone(),
    ))?)?;
    let mut dataset = Dataset::build(source.as_ref())?;
    for t in data.transformations() {
        let o = t
            .as_obj()
            .ok_or_else(|| Error::Schema("transformation entries must be objects".into()))?;
        if o.class_name != TRANSFORMER_MAP_CLASS {
            return Err(Error::UnknownClass(o.class_name.clone()));
        }
        let fitted = fit_transformers(&dataset, &TransformSpec::from_config(o)?);
        dataset = apply_transformers(&dataset, &fitted)?;
    }
    let mut trainer = reconstruct_trainer(&mp.trainer())?;
    let model = trainer.train_with_info(&dataset, &mp.user_info())?;
    let expected = provenance_hash(&mp.to_value());
    let actual = provenance_hash(&model.provenance().to_value());
    if expected != actual {
        return Err(Error::ReproductionMismatch { expected, actual });
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffEntry {
    /// `/`-joined field names, map keys and list indices.
    pub path: String,
    /// `None` when the path exists only on the other side.
    pub left: Option<ProvValue>,
    pub right: Option<ProvValue>,
    /// Set for timestamps and for fields excluded from hashing.
    pub volatile: bool,
}

/// Structural differences between two provenance trees, in a fixed order.
/// Empty exactly when the two trees encode identically.
pub fn diff_provenance(a: &ProvValue, b: &ProvValue) -> Vec<DiffEntry> {
    let mut out = Vec::new();
    diff(a, b, "", false, &mut out);
    out
}

fn join(path: &str, key: &str) -> String {
    format!("{path}/{key}")
}

fn diff_maps(
    a: &BTreeMap<String, ProvValue>,
    b: &BTreeMap<String, ProvValue>,
    path: &str,
    volatile: bool,
    out: &mut Vec<DiffEntry>,
) {
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        let p = join(path, k);
        let vol = volatile || is_volatile_key(k);
        match (a.get(k), b.get(k)) {
            (Some(x), Some(y)) => diff(x, y, &p, vol, out),
            (x, y) => {
                let ts = x
                    .or(y)
                    .is_some_and(|v| matches!(v, ProvValue::Timestamp(_)));
                out.push(DiffEntry {
                    path: p,
                    left: x.cloned(),
                    right: y.cloned(),
                    volatile: vol || ts,
                });
            }
        }
    }
}

fn diff(a: &ProvValue, b: &ProvValue, path: &str, volatile: bool, out: &mut Vec<DiffEntry>) {
    match (a, b) {
        (ProvValue::Obj(x), ProvValue::Obj(y)) => {
            if x.class_name != y.class_name {
                out.push(DiffEntry {
                    path: join(path, "@class"),
                    left: Some(ProvValue::from(x.class_name.as_str())),
                    right: Some(ProvValue::from(y.class_name.as_str())),
                    volatile,
                });
            }
            diff_maps(&x.config, &y.config, path, volatile, out);
            diff_maps(&x.instance, &y.instance, path, volatile, out);
        }
        (ProvValue::Map(x), ProvValue::Map(y)) => diff_maps(x, y, path, volatile, out),
        (ProvValue::List(x), ProvValue::List(y)) => {
            for i in 0..x.len().max(y.len()) {
                let p = join(path, &i.to_string());
                match (x.get(i), y.get(i)) {
                    (Some(l), Some(r)) => diff(l, r, &p, volatile, out),
                    (l, r) => out.push(DiffEntry {
                        path: p,
                        left: l.cloned(),
                        right: r.cloned(),
                        volatile,
                    }),
                }
            }
        }
        (x, y) if x == y => {}
        (x, y) => {
            let ts = matches!(x, ProvValue::Timestamp(_)) && matches!(y, ProvValue::Timestamp(_));
            out.push(DiffEntry {
                path: if path.is_empty() {
                    "/".into()
                } else {
                    path.to_string()
                },
                left: Some(x.clone()),
                right: Some(y.clone()),
                volatile: volatile || ts,
            });
        }
    }
}
