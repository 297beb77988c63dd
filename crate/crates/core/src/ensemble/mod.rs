//! Hyperparameter random search and the stacked ensemble: four tree-based
//! base learners, a soft-vote and a Gaussian Naive Bayes meta-learner.

mod search;
mod stacking;

pub use search::{
    apply_params, random_search, random_search_from, ParamDist, SearchResult, SearchSpace, Trial,
    DEFAULT_N_ITER,
};
pub use stacking::{
    fit_stacking, fit_stacking_with_folds, meta_features, oof_predictions, MetaInput, StackedModel,
    StackingConfig,
};
