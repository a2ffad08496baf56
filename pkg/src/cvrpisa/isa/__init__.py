"""Instance space analysis stages: PRELIM, SIFTED and PILOT."""

from .metadata import MetadataError, MetadataTable, read_metadata, table_from_features, write_metadata
from .pilot import IllConditioned, PilotResult, pilot
from .prelim import ColumnTransform, ConstantColumn, PrelimConfig, prelim
from .sifted import cluster_features, correlation_filter, k_sweep, select_combination

__all__ = [
    "ColumnTransform", "ConstantColumn", "IllConditioned", "MetadataError", "MetadataTable",
    "PilotResult", "PrelimConfig", "cluster_features", "correlation_filter", "k_sweep",
    "pilot", "prelim", "read_metadata", "select_combination", "table_from_features", "write_metadata",
]
