"""Instance space analysis for the Capacitated Vehicle Routing Problem."""

from .features import CATALOG, PROJECTION_FEATURES, ExtractionConfig, FeatureVector, extract_all
from .instance import Instance, InstanceFormatError, parse_instance, read_instance
from .performance import Trajectory, label_good, primal_gap, primal_integral
from .projection import MissingFeature, ProjectionModel, builtin_model, builtin_paper_model, project, project_batch

__version__ = "0.1.0"

__all__ = [
    "CATALOG", "PROJECTION_FEATURES", "ExtractionConfig", "FeatureVector", "Instance", "InstanceFormatError",
    "MissingFeature", "ProjectionModel", "Trajectory", "builtin_model", "builtin_paper_model", "extract_all",
    "label_good", "parse_instance", "primal_gap", "primal_integral", "project", "project_batch",
    "read_instance",
]
