use crate::error::{Error, Result};
use crate::rng::Stream;

use super::cart::{SplitKind, TreeConfig};

/// Weights to compare splits by: per-class weights, or `(target, weight)`
/// pairs.
#[derive(Debug, Clone, Copy)]
pub enum Distribution<'a> {
    Classes(&'a [f64]),
    Targets(&'a [(f64, f64)]),
}

/// Gini impurity `1 - sum p_i^2`, or the weighted population variance.
pub fn impurity(d: Distribution<'_>) -> Result<f64> {
    match d {
        Distribution::Classes(w) => {
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(Error::EmptyNode);
            }
            Ok(1.0 - w.iter().map(|x| (x / total) * (x / total)).sum::<f64>())
        }
        Distribution::Targets(t) => {
            let total: f64 = t.iter().map(|(_, w)| w).sum();
            if total <= 0.0 {
                return Err(Error::EmptyNode);
            }
            let mean = t.iter().map(|(y, w)| y * w).sum::<f64>() / total;
            Ok(t.iter()
                .map(|(y, w)| w * (y - mean) * (y - mean))
                .sum::<f64>()
                / total)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Class(usize),
    Value(f64),
}

/// One example as the tree grower sees it: sparse `(feature id, value)`
/// pairs ascending by id.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRow {
    pub features: Vec<(usize, f64)>,
    pub target: Target,
    pub weight: f64,
}

impl TrainingRow {
    /// Absent features read as 0.0.
    pub fn value(&self, feature: usize) -> f64 {
        self.features
            .binary_search_by_key(&feature, |(id, _)| *id)
            .map_or(0.0, |i| self.features[i].1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub decrease: f64,
}

/// Running sums for one side of a split.
#[derive(Debug, Clone)]
pub(crate) enum Acc {
    Classes { weights: Vec<f64>, total: f64 },
    Moments { total: f64, sum: f64, sum_sq: f64 },
}

impl Acc {
    pub(crate) fn new(num_classes: usize, regression: bool) -> Self {
        if regression {
            Acc::Moments {
                total: 0.0,
                sum: 0.0,
                sum_sq: 0.0,
            }
        } else {
            Acc::Classes {
                weights: vec![0.0; num_classes],
                total: 0.0,
            }
        }
    }

    pub(crate) fn add(&mut self, row: &TrainingRow) {
        let w = row.weight;
        match (self, row.target) {
            (Acc::Classes { weights, total }, Target::Class(c)) => {
                weights[c] += w;
                *total += w;
            }
            (Acc::Moments { total, sum, sum_sq }, Target::Value(y)) => {
                *total += w;
                *sum += w * y;
                *sum_sq += w * y * y;
            }
            _ => unreachable!("target kind checked when rows are built"),
        }
    }

    pub(crate) fn total(&self) -> f64 {
        match self {
            Acc::Classes { total, .. } | Acc::Moments { total, .. } => *total,
        }
    }

    pub(crate) fn impurity(&self) -> f64 {
        match self {
            Acc::Classes { weights, .. } => impurity(Distribution::Classes(weights)).unwrap_or(0.0),
            Acc::Moments { total, sum, sum_sq } => {
                if *total <= 0.0 {
                    return 0.0;
                }
                let mean = sum / total;
                (sum_sq / total - mean * mean).max(0.0)
            }
        }
    }
}

/// Whether no split can reduce impurity: a single class carries all the
/// weight, or every target is equal.
pub(crate) fn is_pure(rows: &[TrainingRow], node: &[usize]) -> bool {
    let first = rows[node[0]].target;
    match first {
        Target::Class(_) => {
            let mut seen = None;
            for &i in node {
                if let Target::Class(c) = rows[i].target {
                    if rows[i].weight > 0.0 && seen.replace(c).is_some_and(|p| p != c) {
                        return false;
                    }
                }
            }
            true
        }
        Target::Value(_) => node.iter().all(|&i| rows[i].target == first),
    }
}

const TIE_EPSILON: f64 = 1e-12;

/// The threshold between two consecutive distinct values such that `lo`
/// goes left and `hi` goes right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo / 2.0 + hi / 2.0;
    if m >= hi || m < lo {
        lo
    } else {
        m
    }
}

fn decrease(parent: f64, total: f64, left: &Acc, right: &Acc) -> f64 {
    let children = (left.total() * left.impurity() + right.total() * right.impurity()) / total;
    (parent - children).max(0.0)
}

/// The best split of `node` over `candidates` (ascending feature ids).
///
/// A candidate replaces the current best only when its decrease is larger
/// by more than 1e-12, so near-ties keep the lower feature id and then the
/// lower threshold. Both children must hold `min_examples_per_leaf` rows.
/// Pure nodes are never split.
pub fn best_split(
    rows: &[TrainingRow],
    node: &[usize],
    candidates: &[usize],
    num_classes: usize,
    cfg: &TreeConfig,
    stream: &mut Stream,
) -> Option<Split> {
    let min_leaf = cfg.min_examples_per_leaf;
    if node.is_empty() || node.len() < 2 * min_leaf || is_pure(rows, node) {
        return None;
    }
    let regression = matches!(rows[node[0]].target, Target::Value(_));
    let mut parent = Acc::new(num_classes, regression);
    for &i in node {
        parent.add(&rows[i]);
    }
    let total = parent.total();
    if total <= 0.0 {
        return None;
    }
    let parent_impurity = parent.impurity();
    let mut best: Option<Split> = None;
    let mut consider = |s: Split| {
        if best.is_none_or(|b| s.decrease > b.decrease + TIE_EPSILON) {
            best = Some(s);
        }
    };
    let mut values: Vec<(f64, usize)> = Vec::with_capacity(node.len());
    for &feature in candidates {
        values.clear();
        values.extend(node.iter().map(|&i| (rows[i].value(feature), i)));
        match cfg.split_kind {
            SplitKind::Exhaustive => {
                values.sort_by(|a, b| a.0.total_cmp(&b.0));
                let n = values.len();
                // Suffix sums are accumulated separately rather than
                // subtracted from the parent, which keeps pure children at
                // exactly zero impurity.
                let mut suffix: Vec<Acc> = Vec::with_capacity(n);
                let mut acc = Acc::new(num_classes, regression);
                for &(_, i) in values.iter().rev() {
                    acc.add(&rows[i]);
                    suffix.push(acc.clone());
                }
                suffix.reverse();
                let mut left = Acc::new(num_classes, regression);
                for k in 0..n - 1 {
                    left.add(&rows[values[k].1]);
                    let (lo, hi) = (values[k].0, values[k + 1].0);
                    if lo == hi || k + 1 < min_leaf || n - k - 1 < min_leaf {
                        continue;
                    }
                    let d = decrease(parent_impurity, total, &left, &suffix[k + 1]);
                    consider(Split {
                        feature,
                        threshold: midpoint(lo, hi),
                        decrease: d,
                    });
                }
            }
            SplitKind::RandomThreshold => {
                let min = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
                let max = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
                if min == max {
                    continue;
                }
                let threshold = min + stream.next_f64() * (max - min);
                let mut left = Acc::new(num_classes, regression);
                let mut right = Acc::new(num_classes, regression);
                let mut left_count = 0;
                for &(v, i) in &values {
                    if v <= threshold {
                        left.add(&rows[i]);
                        left_count += 1;
                    } else {
                        right.add(&rows[i]);
                    }
                }
                if left_count < min_leaf || values.len() - left_count < min_leaf {
                    continue;
                }
                consider(Split {
                    feature,
                    threshold,
                    decrease: decrease(parent_impurity, total, &left, &right),
                });
            }
        }
    }
    best.filter(|b| b.decrease >= cfg.min_impurity_decrease)
}
