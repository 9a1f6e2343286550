from importlib import metadata

from .dataset import FEATURE_NAMES, assemble, stratified_kfold
from .evaluation import FeatureSubset, cross_validate, mode_baseline, weighted_prf
from .exceptions import MobilityStressError
from .features import GPS_FEATURES, MetricConfig, extract_user_features
from .labels import label_days
from .nn import Network, default_architecture, train

try:
    __version__ = metadata.version("mobility-stress")
except metadata.PackageNotFoundError:
    # Case where package metadata is not available.
    __version__ = ""
del metadata  # optional, avoids polluting the results of dir(__package__)

__all__ = [
    "FEATURE_NAMES",
    "GPS_FEATURES",
    "FeatureSubset",
    "MetricConfig",
    "MobilityStressError",
    "Network",
    "__version__",
    "assemble",
    "cross_validate",
    "default_architecture",
    "extract_user_features",
    "label_days",
    "mode_baseline",
    "stratified_kfold",
    "train",
    "weighted_prf",
]
