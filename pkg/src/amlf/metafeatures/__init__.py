from .core import (
    ExtractorTiming,
    MetaFeatureVector,
    extract_all_timed,
    extract_group,
    filter_by_median_time,
    load_metafeatures,
    save_metafeatures,
)
from .groups import (
    GENERAL,
    GROUP_ORDER,
    INFO_THEORY,
    LANDMARKING,
    MODEL_BASED,
    PIPELINE_STATS,
    STATISTICAL,
)
from .pipeline_stats import PipelineStatsTable, compute_pipeline_stats
from .pipeline_stats import feature_names as pipeline_stats_names

__all__ = [
    "ExtractorTiming",
    "MetaFeatureVector",
    "PipelineStatsTable",
    "compute_pipeline_stats",
    "extract_all_timed",
    "extract_group",
    "filter_by_median_time",
    "load_metafeatures",
    "pipeline_stats_names",
    "save_metafeatures",
    "GENERAL",
    "GROUP_ORDER",
    "INFO_THEORY",
    "LANDMARKING",
    "MODEL_BASED",
    "PIPELINE_STATS",
    "STATISTICAL",
]
