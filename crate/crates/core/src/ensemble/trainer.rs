use std::collections::BTreeMap;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{EnsembleModel, Voting, ENSEMBLE_MODEL_CLASS};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::example::{Example, Task};
use crate::model::{argmax_label, check_task, Model, ModelParams, RawOutput, Trainer};
use crate::params::{self, Config};
use crate::provenance::{DataProvenance, ModelProvenance, ProvValue};
use crate::rng::{splitmix64, Stream};
use crate::trees::TREE_TRAINER_CLASS;

pub const ENSEMBLE_TRAINER_CLASS: &str = "EnsembleTrainer";
const SAMPLE_VIEW_CLASS: &str = "DatasetSample";
const WEIGHTED_VIEW_CLASS: &str = "WeightedDataset";
const CAPPED_ALPHA: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Bagging,
    RandomForest,
    AdaBoost,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Bagging => "bagging",
            Variant::RandomForest => "random-forest",
            Variant::AdaBoost => "adaboost",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bagging" => Some(Variant::Bagging),
            "random-forest" => Some(Variant::RandomForest),
            "adaboost" => Some(Variant::AdaBoost),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub variant: Variant,
    pub num_members: usize,
    pub seed: u64,
    /// Share of the training set each bagging or forest member sees.
    pub sample_fraction: f64,
    pub with_replacement: bool,
}

impl EnsembleConfig {
    /// Full-size bootstrap samples with replacement.
    pub fn new(variant: Variant, num_members: usize, seed: u64) -> Self {
        Self {
            variant,
            num_members,
            seed,
            sample_fraction: 1.0,
            with_replacement: true,
        }
    }
}

/// The indices drawn for one member: `round(fraction * N)` uniform draws,
/// with or without replacement, sorted ascending.
fn draw_indices(
    n: usize,
    fraction: f64,
    with_replacement: bool,
    member_seed: u64,
) -> Result<Vec<usize>> {
    let k = (fraction * n as f64).round() as usize;
    if !(fraction > 0.0 && fraction <= 1.0) || k < 1 {
        return Err(Error::InvalidConfig(format!(
            "sample fraction {fraction} draws no examples from {n}"
        )));
    }
    // A stream derived from, not equal to, the member seed, so the draws do
    // not mirror the member trainer's own stream.
    let mut stream = Stream::new(splitmix64(member_seed));
    let mut idx = if with_replacement {
        (0..k).map(|_| stream.next_index(n)).collect()
    } else {
        stream.sample_without_replacement(n, k)
    };
    idx.sort_unstable();
    Ok(idx)
}

fn indices_hash(idx: &[usize]) -> String {
    let mut h = Sha256::new();
    for &i in idx {
        h.update((i as u64).to_be_bytes());
    }
    hex::encode(h.finalize())
}

/// A resampled view of `dataset` whose provenance records the seed and a
/// hash of the drawn indices.
pub fn bootstrap_sample(
    dataset: &Dataset,
    fraction: f64,
    with_replacement: bool,
    member_seed: u64,
) -> Result<Dataset> {
    let idx = draw_indices(dataset.len(), fraction, with_replacement, member_seed)?;
    let examples: Vec<Example> = idx.iter().map(|&i| dataset.examples()[i].clone()).collect();
    let config: Config = [
        ("seed".to_string(), ProvValue::from(member_seed)),
        ("fraction".to_string(), ProvValue::Flt(fraction)),
        (
            "with-replacement".to_string(),
            ProvValue::Bool(with_replacement),
        ),
    ]
    .into_iter()
    .collect();
    let instance: Config = [(
        "indices-hash".to_string(),
        ProvValue::sha256(indices_hash(&idx)),
    )]
    .into_iter()
    .collect();
    let parent = dataset.provenance().clone();
    dataset.derive(examples, move |n, f| {
        DataProvenance::view(SAMPLE_VIEW_CLASS, &parent, config, instance, n, f)
    })
}

/// Per-round AdaBoost diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoostTrace {
    /// Weighted training error of every trained member, kept or not.
    pub errors: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Sum of example weights after each round's renormalization.
    pub weight_sums: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EnsembleTrainer {
    config: EnsembleConfig,
    base: Box<dyn Trainer>,
    parallel: bool,
    invocations: u64,
}

impl EnsembleTrainer {
    pub fn new(config: EnsembleConfig, base: Box<dyn Trainer>) -> Result<Self> {
        if config.num_members < 1 {
            return Err(Error::InvalidConfig(
                "an ensemble needs at least one member".into(),
            ));
        }
        if !(config.sample_fraction > 0.0 && config.sample_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "sample fraction must lie in (0, 1]".into(),
            ));
        }
        match config.variant {
            Variant::RandomForest => {
                let fraction = base
                    .configuration()
                    .get("feature-subsampling-fraction")
                    .and_then(ProvValue::as_flt);
                if base.class_name() != TREE_TRAINER_CLASS || !fraction.is_some_and(|f| f < 1.0) {
                    return Err(Error::InvalidConfig(
                        "a random forest needs a tree base trainer with feature subsampling below 1".into(),
                    ));
                }
            }
            Variant::AdaBoost if base.task() != Task::Categorical => {
                return Err(Error::InvalidConfig(
                    "AdaBoost needs a classification base trainer".into(),
                ));
            }
            _ => {}
        }
        Ok(Self {
            config,
            base,
            parallel: true,
            invocations: 0,
        })
    }

    /// Members train on the rayon pool unless this is turned off; results
    /// are identical either way.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn base(&self) -> &dyn Trainer {
        self.base.as_ref()
    }

    /// Builds the trainer from configuration fields; the base trainer is
    /// rebuilt through the trainer registry.
    pub fn from_config(config: &Config) -> Result<Self> {
        let variant = Variant::parse(params::text(config, "variant")?)
            .ok_or_else(|| Error::InvalidConfig("unknown ensemble variant".into()))?;
        let base = config
            .get("base-trainer")
            .ok_or_else(|| Error::MissingProperty("base-trainer".into()))?;
        let base = base
            .as_obj()
            .ok_or_else(|| Error::InvalidConfig("`base-trainer` must be an object".into()))?;
        let base = crate::repro::trainer_from_provenance(base)?;
        Self::new(
            EnsembleConfig {
                variant,
                num_members: params::count(config, "num-members")?,
                seed: params::seed(config, "seed")?,
                sample_fraction: params::flt(config, "sample-fraction")?,
                with_replacement: params::boolean(config, "with-replacement")?,
            },
            base,
        )
    }

    /// Seed of member `i` in this train call. Later calls shift the index
    /// by the member count so every call uses fresh seeds.
    pub fn member_seed(&self, i: usize) -> u64 {
        let offset = self
            .invocations
            .wrapping_mul(self.config.num_members as u64)
            .wrapping_add(i as u64);
        splitmix64(self.config.seed.wrapping_add(offset))
    }

    fn train_sampled(
        &self,
        dataset: &Dataset,
        user_info: &BTreeMap<String, String>,
    ) -> Result<Vec<Model>> {
        let member = |i: usize| -> Result<Model> {
            let seed = self.member_seed(i);
            let sample = bootstrap_sample(
                dataset,
                self.config.sample_fraction,
                self.config.with_replacement,
                seed,
            )?;
            self.base.reseeded(seed).train_with_info(&sample, user_info)
        };
        if self.parallel {
            (0..self.config.num_members)
                .into_par_iter()
                .map(member)
                .collect()
        } else {
            (0..self.config.num_members).map(member).collect()
        }
    }

    /// SAMME. Example weights start uniform and enter the base trainer
    /// scaled by N so an unweighted round looks like the original data.
    fn train_boosted(
        &self,
        dataset: &Dataset,
        user_info: &BTreeMap<String, String>,
        trace: &mut BoostTrace,
    ) -> Result<(Vec<Model>, Vec<f64>)> {
        let k = dataset.output_domain().num_outputs();
        if k < 2 {
            return Err(Error::InvalidConfig(
                "AdaBoost needs at least two labels".into(),
            ));
        }
        let ln_k1 = ((k - 1) as f64).ln();
        let n = dataset.len();
        let mut w = vec![1.0 / n as f64; n];
        let mut members = Vec::new();
        let mut alphas = Vec::new();
        for round in 0..self.config.num_members {
            let seed = self.member_seed(round);
            let scaled: Vec<f64> = w.iter().map(|x| x * n as f64).collect();
            let mut weights_hash = Sha256::new();
            for x in &scaled {
                weights_hash.update(x.to_bits().to_be_bytes());
            }
            let view = dataset.reweighted(
                &scaled,
                WEIGHTED_VIEW_CLASS,
                [("round".to_string(), ProvValue::from(round))]
                    .into_iter()
                    .collect(),
                [(
                    "weights-hash".to_string(),
                    ProvValue::sha256(hex::encode(weights_hash.finalize())),
                )]
                .into_iter()
                .collect(),
            )?;
            let model = self.base.reseeded(seed).train_with_info(&view, user_info)?;
            let mut wrong = vec![false; n];
            for (j, e) in dataset.examples().iter().enumerate() {
                let RawOutput::Scores(s) = model.raw_predict(e)? else {
                    return Err(Error::InconsistentTask);
                };
                wrong[j] = e
                    .output()
                    .label()
                    .is_some_and(|l| l != argmax_label(&s).unwrap_or(""));
            }
            let err: f64 = w
                .iter()
                .zip(&wrong)
                .filter(|(_, m)| **m)
                .map(|(x, _)| x)
                .sum();
            trace.errors.push(err);
            if err >= 1.0 - 1.0 / k as f64 {
                break;
            }
            if err <= 0.0 {
                alphas.push(CAPPED_ALPHA + ln_k1);
                members.push(model);
                trace.alphas.push(CAPPED_ALPHA + ln_k1);
                trace.weight_sums.push(w.iter().sum());
                break;
            }
            let alpha = ((1.0 - err) / err).ln() + ln_k1;
            let boost = alpha.exp();
            for (x, m) in w.iter_mut().zip(&wrong) {
                if *m {
                    *x *= boost;
                }
            }
            let total: f64 = w.iter().sum();
            for x in &mut w {
                *x /= total;
            }
            trace.alphas.push(alpha);
            trace.weight_sums.push(w.iter().sum());
            alphas.push(alpha);
            members.push(model);
        }
        if members.is_empty() {
            return Err(Error::AllMembersRejected);
        }
        Ok((members, alphas))
    }

    fn fit(
        &mut self,
        dataset: &Dataset,
        user_info: &BTreeMap<String, String>,
    ) -> Result<(Model, BoostTrace)> {
        check_task(self.base.task(), dataset)?;
        let trainer_prov = self.provenance();
        let mut trace = BoostTrace::default();
        let (members, weights, voting) = match self.config.variant {
            Variant::Bagging | Variant::RandomForest => {
                let members = self.train_sampled(dataset, user_info)?;
                let m = members.len();
                (members, vec![1.0 / m as f64; m], Voting::Scores)
            }
            Variant::AdaBoost => {
                let (members, alphas) = self.train_boosted(dataset, user_info, &mut trace)?;
                (members, alphas, Voting::Labels)
            }
        };
        self.invocations += 1;
        let member_provs = members.iter().map(|m| m.provenance().clone()).collect();
        let provenance = ModelProvenance::new(
            ENSEMBLE_MODEL_CLASS,
            trainer_prov,
            dataset.provenance().clone(),
            Some(member_provs),
            user_info,
        );
        let model = Model::new(
            ENSEMBLE_MODEL_CLASS,
            provenance,
            dataset.feature_domain().clone(),
            dataset.output_domain().clone(),
            ModelParams::Ensemble(EnsembleModel::new(members, weights, voting)?),
        );
        Ok((model, trace))
    }

    /// Trains and returns the AdaBoost diagnostics (empty for other variants).
    pub fn train_traced(&mut self, dataset: &Dataset) -> Result<(Model, BoostTrace)> {
        self.fit(dataset, &BTreeMap::new())
    }
}

impl Trainer for EnsembleTrainer {
    fn class_name(&self) -> &'static str {
        ENSEMBLE_TRAINER_CLASS
    }

    fn task(&self) -> Task {
        self.base.task()
    }

    fn configuration(&self) -> BTreeMap<String, ProvValue> {
        let c = &self.config;
        [
            ("variant", ProvValue::from(c.variant.as_str())),
            ("num-members", ProvValue::from(c.num_members)),
            ("seed", ProvValue::from(c.seed)),
            ("sample-fraction", ProvValue::Flt(c.sample_fraction)),
            ("with-replacement", ProvValue::Bool(c.with_replacement)),
            ("base-trainer", self.base.provenance().into()),
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
        Ok(self.fit(dataset, user_info)?.0)
    }
}
