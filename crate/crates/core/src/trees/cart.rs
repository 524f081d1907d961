use std::collections::BTreeMap;

use super::split::{best_split, Acc, Target, TrainingRow};
use crate::dataset::Dataset;
use crate::domain::OutputDomain;
use crate::error::{Error, Result};
use crate::example::{Output, Task};
use crate::model::{check_task, Model, ModelParams, RawOutput, Trainer};
use crate::params::{self, Config};
use crate::provenance::{ModelProvenance, ProvValue};
use crate::rng::Stream;

pub const TREE_TRAINER_CLASS: &str = "CARTTrainer";
pub const TREE_MODEL_CLASS: &str = "CARTModel";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    /// Every midpoint between consecutive distinct values.
    Exhaustive,
    /// One uniform threshold per candidate feature.
    RandomThreshold,
}

impl SplitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitKind::Exhaustive => "exhaustive",
            SplitKind::RandomThreshold => "random-threshold",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exhaustive" => Some(SplitKind::Exhaustive),
            "random-threshold" => Some(SplitKind::RandomThreshold),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_examples_per_leaf: usize,
    pub min_impurity_decrease: f64,
    pub feature_subsampling_fraction: f64,
    pub split_kind: SplitKind,
    pub seed: u64,
}

impl TreeConfig {
    /// Exhaustive splits over all features, leaves of one example, seed 0.
    pub fn new(max_depth: usize) -> Self {
        Self {
            max_depth,
            min_examples_per_leaf: 1,
            min_impurity_decrease: 0.0,
            feature_subsampling_fraction: 1.0,
            split_kind: SplitKind::Exhaustive,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("tree: {m}")));
        if self.max_depth < 1 {
            return bad("max depth must be >= 1");
        }
        if self.min_examples_per_leaf < 1 {
            return bad("min examples per leaf must be >= 1");
        }
        if !(self.min_impurity_decrease.is_finite() && self.min_impurity_decrease >= 0.0) {
            return bad("min impurity decrease must be >= 0");
        }
        let f = self.feature_subsampling_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return bad("feature subsampling fraction must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeafValue {
    /// Training weight per label id.
    Classes(Vec<f64>),
    Mean(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        decrease: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: LeafValue,
        weight: f64,
        count: usize,
    },
}

/// Nodes in an arena; index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
}

impl TreeModel {
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let bad = |m: &str| Error::FormatError(format!("tree: {m}"));
        if nodes.is_empty() {
            return Err(bad("no nodes"));
        }
        // Children must point forward so the structure cannot loop.
        for (i, n) in nodes.iter().enumerate() {
            if let Node::Split {
                left,
                right,
                threshold,
                ..
            } = n
            {
                if *left <= i || *right <= i || *left >= nodes.len() || *right >= nodes.len() {
                    return Err(bad("child index out of order"));
                }
                if !threshold.is_finite() {
                    return Err(bad("non-finite threshold"));
                }
            }
        }
        Ok(Self { nodes })
    }

    /// Index of the leaf `x` lands in.
    pub fn leaf_index(&self, x: &[(usize, f64)]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let v = x
                        .binary_search_by_key(feature, |(id, _)| *id)
                        .map_or(0.0, |k| x[k].1);
                    i = if v <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[(usize, f64)], outputs: &OutputDomain) -> RawOutput {
        match &self.nodes[self.leaf_index(x)] {
            Node::Leaf {
                value: LeafValue::Classes(w),
                weight,
                ..
            } => RawOutput::Scores(
                outputs
                    .labels()
                    .into_iter()
                    .map(str::to_string)
                    .zip(w.iter().map(|v| v / weight))
                    .collect(),
            ),
            Node::Leaf {
                value: LeafValue::Mean(m),
                ..
            } => RawOutput::Value(*m),
            Node::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. }))
    }
}

pub(crate) fn training_rows(dataset: &Dataset) -> Result<Vec<TrainingRow>> {
    let outputs = dataset.output_domain();
    dataset
        .examples()
        .iter()
        .map(|e| {
            let target = match e.output() {
                Output::Categorical(l) => Target::Class(outputs.label_id(l).ok_or_else(|| {
                    Error::InvalidConfig(format!("label `{l}` is not in the output domain"))
                })?),
                Output::Real(y) => Target::Value(*y),
                Output::Unknown => return Err(Error::UnlabelledExample),
            };
            Ok(TrainingRow {
                features: dataset.feature_domain().sparse(e),
                target,
                weight: e.weight(),
            })
        })
        .collect()
}

fn leaf(rows: &[TrainingRow], node: &[usize], num_classes: usize, regression: bool) -> Node {
    let mut acc = Acc::new(num_classes, regression);
    for &i in node {
        acc.add(&rows[i]);
    }
    let weight = acc.total();
    let value = match acc {
        Acc::Classes { weights, .. } => LeafValue::Classes(weights),
        Acc::Moments { total, sum, .. } => LeafValue::Mean(sum / total),
    };
    Node::Leaf {
        value,
        weight,
        count: node.len(),
    }
}

/// Grows a tree depth-first, left child first, drawing every random choice
/// from `stream` in that order.
pub(crate) fn grow(
    rows: &[TrainingRow],
    num_features: usize,
    num_classes: usize,
    cfg: &TreeConfig,
    stream: &mut Stream,
) -> TreeModel {
    let regression = rows
        .first()
        .is_some_and(|r| matches!(r.target, Target::Value(_)));
    let subsample = cfg.feature_subsampling_fraction < 1.0;
    let k = ((cfg.feature_subsampling_fraction * num_features as f64).ceil() as usize)
        .clamp(1, num_features.max(1));
    let all: Vec<usize> = (0..num_features).collect();
    let mut nodes = vec![Node::Leaf {
        value: LeafValue::Mean(0.0),
        weight: 0.0,
        count: 0,
    }];
    let mut stack = vec![(0usize, (0..rows.len()).collect::<Vec<_>>(), 0usize)];
    while let Some((index, members, depth)) = stack.pop() {
        let split = if depth < cfg.max_depth && num_features > 0 {
            let candidates = if subsample {
                let mut c = stream.sample_without_replacement(num_features, k);
                c.sort_unstable();
                c
            } else {
                all.clone()
            };
            best_split(rows, &members, &candidates, num_classes, cfg, stream)
        } else {
            None
        };
        match split {
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = members
                    .iter()
                    .partition(|&&i| rows[i].value(s.feature) <= s.threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf {
                    value: LeafValue::Mean(0.0),
                    weight: 0.0,
                    count: 0,
                });
                nodes.push(Node::Leaf {
                    value: LeafValue::Mean(0.0),
                    weight: 0.0,
                    count: 0,
                });
                nodes[index] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    decrease: s.decrease,
                    left,
                    right,
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
            None => nodes[index] = leaf(rows, &members, num_classes, regression),
        }
    }
    TreeModel { nodes }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartTrainer {
    config: TreeConfig,
    task: Task,
    invocations: u64,
}

impl CartTrainer {
    pub fn new(config: TreeConfig, task: Task) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            task,
            invocations: 0,
        })
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn from_config(config: &Config) -> Result<Self> {
        let task = Task::parse(params::text(config, "task")?)
            .ok_or_else(|| Error::InvalidConfig("task must be categorical or real".into()))?;
        let split_kind =
            SplitKind::parse(params::text(config, "split-kind")?).ok_or_else(|| {
                Error::InvalidConfig("split-kind must be exhaustive or random-threshold".into())
            })?;
        Self::new(
            TreeConfig {
                max_depth: params::count(config, "max-depth")?,
                min_examples_per_leaf: params::count(config, "min-examples-per-leaf")?,
                min_impurity_decrease: params::flt(config, "min-impurity-decrease")?,
                feature_subsampling_fraction: params::flt(config, "feature-subsampling-fraction")?,
                split_kind,
                seed: params::seed(config, "seed")?,
            },
            task,
        )
    }

    pub(crate) fn fit_tree(&self, dataset: &Dataset, stream: &mut Stream) -> Result<TreeModel> {
        check_task(self.task, dataset)?;
        let rows = training_rows(dataset)?;
        let num_classes = dataset.output_domain().labels().len();
        Ok(grow(
            &rows,
            dataset.feature_domain().len(),
            num_classes,
            &self.config,
            stream,
        ))
    }
}

impl Trainer for CartTrainer {
    fn class_name(&self) -> &'static str {
        TREE_TRAINER_CLASS
    }

    fn task(&self) -> Task {
        self.task
    }

    fn configuration(&self) -> BTreeMap<String, ProvValue> {
        let c = &self.config;
        [
            ("max-depth", ProvValue::from(c.max_depth)),
            (
                "min-examples-per-leaf",
                ProvValue::from(c.min_examples_per_leaf),
            ),
            (
                "min-impurity-decrease",
                ProvValue::Flt(c.min_impurity_decrease),
            ),
            (
                "feature-subsampling-fraction",
                ProvValue::Flt(c.feature_subsampling_fraction),
            ),
            ("split-kind", ProvValue::from(c.split_kind.as_str())),
            ("seed", ProvValue::from(c.seed)),
            ("task", ProvValue::from(self.task.as_str())),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    fn seed(&self) -> u64 {
        self.config.seed
    }

    fn invocation_count(&self) -> u64 {
        self.invocations
    }

    fn set_invocation_count(&mut self, count: u64) {
        self.invocations = count;
    }

    fn reseeded(&self, seed: u64) -> Box<dyn Trainer> {
        let mut t = self.clone();
        t.config.seed = seed;
        t.invocations = 0;
        Box::new(t)
    }

    fn clone_box(&self) -> Box<dyn Trainer> {
        Box::new(self.clone())
    }

    fn train_with_info(
        &mut self,
        dataset: &Dataset,
        user_info: &BTreeMap<String, String>,
    ) -> Result<Model> {
        check_task(self.task, dataset)?;
        let trainer_prov = self.provenance();
        let mut stream = Stream::for_invocation(self.config.seed, self.invocations);
        let tree = self.fit_tree(dataset, &mut stream)?;
        self.invocations += 1;
        let provenance = ModelProvenance::new(
            TREE_MODEL_CLASS,
            trainer_prov,
            dataset.provenance().clone(),
            None,
            user_info,
        );
        Ok(Model::new(
            TREE_MODEL_CLASS,
            provenance,
            dataset.feature_domain().clone(),
            dataset.output_domain().clone(),
            ModelParams::Tree(tree),
        ))
    }
}
