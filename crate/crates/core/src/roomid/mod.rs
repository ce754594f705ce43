//! Room identification: classifiers, cross-validation, divergence-based
//! distinctiveness tests and floating feature selection.

pub mod classifier;
pub mod confusion;
pub mod cv;
pub mod divergence;
pub mod permutation;
pub mod sffs;

pub use classifier::{fit, fit_rows, ClassifierKind, ClassifierModel};
pub use confusion::ConfusionMatrix;
pub use cv::{cross_evaluate, evaluate_split, kfold_cv, kfold_cv_rows, stratified_folds, CvReport};
pub use divergence::{bin_index, js_divergence, kl_divergence, shared_edges, DiscreteDistribution};
pub use permutation::{
    joint_permutation_test, permutation_test, PermutationConfig, PermutationResult,
};
pub use sffs::{sffs, sffs_with, SffsResult, SffsStep, StepAction};
