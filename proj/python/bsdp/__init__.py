"""Bicycle station dynamic planning pipeline."""

from ._bsdp import (
    OUTLIER,
    ConfigError,
    ContractError,
    InvalidInputError,
    NumericalError,
    __version__,
    cluster_points,
    haversine_km,
    roc_auc,
    run,
    train_frames,
)

__all__ = [
    "OUTLIER",
    "ConfigError",
    "ContractError",
    "InvalidInputError",
    "NumericalError",
    "__version__",
    "cluster_points",
    "haversine_km",
    "roc_auc",
    "run",
    "train_frames",
]
