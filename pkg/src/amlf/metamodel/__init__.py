from .artifact import MetaModel, train_forest, train_metamodel
from .forest import ForestModel, KnnRegressor, RegressionTree, fit_forest, fit_learner, fit_single_tree
from .metadataset import (
    CODE_FEATURES,
    MetaDataset,
    MetaExample,
    best_per_combo,
    build_metadataset,
    feature_importance,
    feature_vector,
    pstats_from_rows,
    select_top_k,
)
from .validation import (
    RegressionMetrics,
    evaluate_grouped_cv,
    group_folds,
    grouped_fold_indices,
    regression_metrics,
)

__all__ = [
    "CODE_FEATURES",
    "ForestModel",
    "KnnRegressor",
    "MetaDataset",
    "MetaExample",
    "MetaModel",
    "RegressionMetrics",
    "RegressionTree",
    "best_per_combo",
    "build_metadataset",
    "evaluate_grouped_cv",
    "feature_importance",
    "feature_vector",
    "fit_forest",
    "fit_learner",
    "fit_single_tree",
    "group_folds",
    "grouped_fold_indices",
    "pstats_from_rows",
    "regression_metrics",
    "select_top_k",
    "train_forest",
    "train_metamodel",
]
