//! The PVML model file: one JSON document holding the model's provenance,
//! domains and parameters.
//!
//! Every float inside `featureDomain`, `outputDomain` and `parameters` is
//! written as the shortest decimal string that parses back to the same
//! bits, so a loaded model predicts bit-for-bit like the saved one. Object
//! keys are sorted, which makes a save byte-deterministic.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{LazyLock, RwLock};

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::domain::{FeatureDomain, FeatureStats, OutputDomain, RealStats};
use crate::ensemble::{EnsembleModel, Voting, ENSEMBLE_MODEL_CLASS};
use crate::error::{Error, Result};
use crate::example::Task;
use crate::model::{Model, ModelParams};
use crate::optimize::{LinearModel, LinearParameters, Objective, LINEAR_MODEL_CLASS};
use crate::provenance::{value_from_json, value_to_json, ModelProvenance};
use crate::trees::{LeafValue, Node, TreeModel, TREE_MODEL_CLASS};

pub const FORMAT_NAME: &str = "PVML";
pub const FORMAT_VERSION: i64 = 1;

/// Rebuilds model parameters from the `parameters` member of a container.
pub type ModelDecoder = fn(&Value) -> Result<ModelParams>;

static DECODERS: LazyLock<RwLock<HashMap<String, ModelDecoder>>> = LazyLock::new(|| {
    let mut m: HashMap<String, ModelDecoder> = HashMap::new();
    m.insert(LINEAR_MODEL_CLASS.into(), decode_linear);
    m.insert(TREE_MODEL_CLASS.into(), decode_tree);
    m.insert(ENSEMBLE_MODEL_CLASS.into(), decode_ensemble);
    RwLock::new(m)
});

/// Registers (or replaces) the decoder for `model_class`.
pub fn register_model_class(model_class: &str, decoder: ModelDecoder) {
    DECODERS
        .write()
        .expect("decoder registry poisoned")
        .insert(model_class.to_string(), decoder);
}

fn bad(msg: impl Into<String>) -> Error {
    Error::FormatError(msg.into())
}

fn flt(v: f64) -> Value {
    Value::String(v.to_string())
}

fn flts(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|v| flt(*v)).collect())
}

fn member<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| bad(format!("missing `{key}`")))
}

fn read_flt(v: &Value) -> Result<f64> {
    v.as_str()
        .and_then(|s| s.parse::<f64>().ok())
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(format!("expected a finite decimal string, found {v}")))
}

fn get_flt(v: &Value, key: &str) -> Result<f64> {
    read_flt(member(v, key)?)
}

fn get_u64(v: &Value, key: &str) -> Result<u64> {
    member(v, key)?
        .as_u64()
        .ok_or_else(|| bad(format!("`{key}` must be a non-negative integer")))
}

fn get_str<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    member(v, key)?
        .as_str()
        .ok_or_else(|| bad(format!("`{key}` must be a string")))
}

fn get_array<'a>(v: &'a Value, key: &str) -> Result<&'a [Value]> {
    member(v, key)?
        .as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| bad(format!("`{key}` must be an array")))
}

fn encode_feature_domain(d: &FeatureDomain) -> Value {
    Value::Array(
        d.iter()
            .map(|f| {
                json!({
                    "name": f.name, "count": f.count, "min": flt(f.min), "max": flt(f.max),
                    "mean": flt(f.mean), "variance": flt(f.variance),
                })
            })
            .collect(),
    )
}

fn decode_feature_domain(v: &Value) -> Result<FeatureDomain> {
    let entries = v
        .as_array()
        .ok_or_else(|| bad("`featureDomain` must be an array"))?;
    let stats = entries
        .iter()
        .enumerate()
        .map(|(id, f)| {
            Ok(FeatureStats {
                name: get_str(f, "name")?.to_string(),
                id,
                count: get_u64(f, "count")?,
                min: get_flt(f, "min")?,
                max: get_flt(f, "max")?,
                mean: get_flt(f, "mean")?,
                variance: get_flt(f, "variance")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureDomain::from_stats(stats).map_err(|e| bad(e.to_string()))
}

fn encode_output_domain(d: &OutputDomain) -> Value {
    match d {
        OutputDomain::Categorical(counts) => json!({"task": "categorical", "labels": counts}),
        OutputDomain::Real(s) => json!({
            "task": "real", "count": s.count, "min": flt(s.min), "max": flt(s.max),
            "mean": flt(s.mean), "variance": flt(s.variance),
        }),
    }
}

fn decode_output_domain(v: &Value) -> Result<OutputDomain> {
    match get_str(v, "task")? {
        "categorical" => {
            let labels = member(v, "labels")?
                .as_object()
                .ok_or_else(|| bad("`labels` must be an object"))?;
            let counts = labels
                .iter()
                .map(|(l, c)| {
                    Ok((
                        l.clone(),
                        c.as_u64()
                            .ok_or_else(|| bad("label counts must be integers"))?,
                    ))
                })
                .collect::<Result<BTreeMap<_, _>>>()?;
            if counts.is_empty() {
                return Err(bad("categorical output domain without labels"));
            }
            Ok(OutputDomain::Categorical(counts))
        }
        "real" => Ok(OutputDomain::Real(RealStats {
            count: get_u64(v, "count")?,
            min: get_flt(v, "min")?,
            max: get_flt(v, "max")?,
            mean: get_flt(v, "mean")?,
            variance: get_flt(v, "variance")?,
        })),
        other => Err(bad(format!("unknown task `{other}`"))),
    }
}

fn encode_node(nodes: &[Node], i: usize) -> Value {
    match &nodes[i] {
        Node::Split {
            feature,
            threshold,
            decrease,
            left,
            right,
        } => json!({
            "feature": feature, "threshold": flt(*threshold), "decrease": flt(*decrease),
            "left": encode_node(nodes, *left), "right": encode_node(nodes, *right),
        }),
        Node::Leaf {
            value,
            weight,
            count,
        } => {
            let mut m = Map::new();
            m.insert("weight".into(), flt(*weight));
            m.insert("count".into(), json!(count));
            match value {
                LeafValue::Classes(w) => m.insert("distribution".into(), flts(w)),
                LeafValue::Mean(x) => m.insert("mean".into(), flt(*x)),
            };
            Value::Object(m)
        }
    }
}

/// Appends `v` in the arena order used by the grower: a split's two
/// children are allocated together, right after the split is decided.
fn decode_node(v: &Value, nodes: &mut Vec<Node>, at: usize) -> Result<()> {
    if v.get("feature").is_some() {
        let left = nodes.len();
        let right = left + 1;
        let placeholder = || Node::Leaf {
            value: LeafValue::Mean(0.0),
            weight: 0.0,
            count: 0,
        };
        nodes.push(placeholder());
        nodes.push(placeholder());
        nodes[at] = Node::Split {
            feature: get_u64(v, "feature")? as usize,
            threshold: get_flt(v, "threshold")?,
            decrease: get_flt(v, "decrease")?,
            left,
            right,
        };
        decode_node(member(v, "left")?, nodes, left)?;
        decode_node(member(v, "right")?, nodes, right)
    } else {
        let value = match (v.get("distribution"), v.get("mean")) {
            (Some(d), None) => LeafValue::Classes(
                d.as_array()
                    .ok_or_else(|| bad("`distribution` must be an array"))?
                    .iter()
                    .map(read_flt)
                    .collect::<Result<_>>()?,
            ),
            (None, Some(m)) => LeafValue::Mean(read_flt(m)?),
            _ => return Err(bad("a leaf needs exactly one of `distribution` and `mean`")),
        };
        nodes[at] = Node::Leaf {
            value,
            weight: get_flt(v, "weight")?,
            count: get_u64(v, "count")? as usize,
        };
        Ok(())
    }
}

fn encode_params(p: &ModelParams) -> Value {
    match p {
        ModelParams::Linear(m) => json!({
            "objective": m.objective.as_str(),
            "numFeatures": m.params.num_features,
            "numOutputs": m.params.num_outputs,
            "weights": flts(&m.params.weights),
        }),
        ModelParams::Tree(t) => json!({"root": encode_node(&t.nodes, 0)}),
        ModelParams::Ensemble(e) => json!({
            "voting": e.voting.as_str(),
            "weights": flts(&e.weights),
            "members": e.members.iter().map(model_to_json).collect::<Vec<_>>(),
        }),
    }
}

fn decode_linear(v: &Value) -> Result<ModelParams> {
    let objective =
        Objective::parse(get_str(v, "objective")?).ok_or_else(|| bad("unknown objective"))?;
    let weights = get_array(v, "weights")?
        .iter()
        .map(read_flt)
        .collect::<Result<Vec<_>>>()?;
    let params = LinearParameters::from_weights(
        get_u64(v, "numFeatures")? as usize,
        get_u64(v, "numOutputs")? as usize,
        weights,
    )
    .map_err(|e| bad(e.to_string()))?;
    Ok(ModelParams::Linear(LinearModel { objective, params }))
}

fn decode_tree(v: &Value) -> Result<ModelParams> {
    let mut nodes = vec![Node::Leaf {
        value: LeafValue::Mean(0.0),
        weight: 0.0,
        count: 0,
    }];
    decode_node(member(v, "root")?, &mut nodes, 0)?;
    Ok(ModelParams::Tree(TreeModel::from_nodes(nodes)?))
}

fn decode_ensemble(v: &Value) -> Result<ModelParams> {
    let voting = Voting::parse(get_str(v, "voting")?).ok_or_else(|| bad("unknown voting rule"))?;
    let weights = get_array(v, "weights")?
        .iter()
        .map(read_flt)
        .collect::<Result<Vec<_>>>()?;
    let members = get_array(v, "members")?
        .iter()
        .map(model_from_json)
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelParams::Ensemble(
        EnsembleModel::new(members, weights, voting).map_err(|e| bad(e.to_string()))?,
    ))
}

/// The container document for `model`.
pub fn model_to_json(model: &Model) -> Value {
    json!({
        "formatName": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "name": model.name(),
        "modelClass": model.model_class(),
        "provenance": value_to_json(&model.provenance().to_value()),
        "featureDomain": encode_feature_domain(model.feature_domain()),
        "outputDomain": encode_output_domain(model.output_domain()),
        "parameters": encode_params(model.params()),
    })
}

pub fn model_from_json(v: &Value) -> Result<Model> {
    if v.get("formatName").and_then(Value::as_str) != Some(FORMAT_NAME) {
        return Err(bad("not a PVML document"));
    }
    let version = v.get("version").and_then(Value::as_i64);
    if version != Some(FORMAT_VERSION) {
        return Err(bad(format!("unsupported version {version:?}")));
    }
    let class = get_str(v, "modelClass")?;
    let decoder = *DECODERS
        .read()
        .expect("decoder registry poisoned")
        .get(class)
        .ok_or_else(|| Error::UnknownModelClass(class.to_string()))?;
    let provenance = value_from_json(member(v, "provenance")?)
        .and_then(ModelProvenance::from_value)
        .map_err(|e| bad(format!("provenance: {e}")))?;
    if provenance.class_name() != class {
        return Err(bad(format!(
            "provenance describes `{}`, not `{class}`",
            provenance.class_name()
        )));
    }
    let params = decoder(member(v, "parameters")?)?;
    let feature_domain = decode_feature_domain(member(v, "featureDomain")?)?;
    let output_domain = decode_output_domain(member(v, "outputDomain")?)?;
    Ok(Model::new(
        get_str(v, "name")?,
        provenance,
        feature_domain,
        output_domain,
        params,
    ))
}

pub fn model_to_string(model: &Model) -> String {
    let mut s =
        serde_json::to_string_pretty(&model_to_json(model)).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

/// Parses a container without checking its task.
pub fn model_from_str(text: &str) -> Result<Model> {
    // Deep trees nest deeper than serde_json's default limit allows.
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let v = Value::deserialize(&mut de).map_err(|e| bad(e.to_string()))?;
    de.end().map_err(|e| bad(e.to_string()))?;
    model_from_json(&v)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    model_from_str(&text)
}

/// Reads a model and checks it produces outputs of the expected task.
pub fn load_model(path: impl AsRef<Path>, expected: Task) -> Result<Model> {
    let model = read_model(path)?;
    if model.task() != expected {
        return Err(Error::TaskMismatch {
            expected,
            found: model.task(),
        });
    }
    Ok(model)
}
