"""Metalearning-driven search-space design for preprocessor + classifier pipelines."""

from .components import builtin_registry
from .data import Dataset, load_dataset, preprocess_fixed, save_dataset, stratified_kfold, stratified_split
from .evaluation import Budget, EvaluationRecord, PipelineConfig, best_of, evaluate_pipeline, f1_weighted
from .metamodel import MetaModel, train_metamodel
from .search import OptimizerConfig, SearchTrace, best_at_time, random_search, replay_restricted
from .space import SearchSpace, design_space_mtl, full_space, quantile_filter
from .store import RunStore

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "Dataset",
    "EvaluationRecord",
    "MetaModel",
    "OptimizerConfig",
    "PipelineConfig",
    "RunStore",
    "SearchSpace",
    "SearchTrace",
    "best_at_time",
    "best_of",
    "builtin_registry",
    "design_space_mtl",
    "evaluate_pipeline",
    "f1_weighted",
    "full_space",
    "load_dataset",
    "preprocess_fixed",
    "quantile_filter",
    "random_search",
    "replay_restricted",
    "save_dataset",
    "stratified_kfold",
    "stratified_split",
    "train_metamodel",
]
