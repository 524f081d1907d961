//! CART decision trees: Gini impurity for classification, weighted variance
//! for regression, with exhaustive or random-threshold splits.

mod cart;
mod split;

pub use cart::{
    CartTrainer, LeafValue, Node, SplitKind, TreeConfig, TreeModel, TREE_MODEL_CLASS,
    TREE_TRAINER_CLASS,
};
pub use split::{best_split, impurity, Distribution, Split, Target, TrainingRow};
