"""NOx prediction for a degrading gas turbine.

Load per-year process data, fit the 9-5-5-1 mixed-activation regression
network under temporal or stratified-by-year splits, then rank variables,
profile the response and search for the minimum-NOx operating point.
"""

from noxcast.dataset import (
    DEFAULT_SCHEMA,
    PREDICTORS,
    ColumnSchema,
    DataError,
    Dataset,
    ProcessRecord,
    Standardizer,
    apply_standardizer,
    fit_standardizer,
    invert_standardizer,
    load_csv,
)
from noxcast.network import (
    DEFAULT_LAYER,
    ActivationKind,
    Gradient,
    Network,
    forward,
    gradient,
    init_network,
    load_network,
    predict_batch,
    save_network,
)
from noxcast.trainer import (
    MetricsReport,
    SplitAssignment,
    TrainConfig,
    TrainHistory,
    evaluate,
    metrics_from_predictions,
    split_stratified,
    split_temporal,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_SCHEMA",
    "PREDICTORS",
    "DEFAULT_LAYER",
    "ActivationKind",
    "ColumnSchema",
    "DataError",
    "Dataset",
    "Gradient",
    "MetricsReport",
    "Network",
    "ProcessRecord",
    "SplitAssignment",
    "Standardizer",
    "TrainConfig",
    "TrainHistory",
    "apply_standardizer",
    "evaluate",
    "fit_standardizer",
    "forward",
    "gradient",
    "init_network",
    "invert_standardizer",
    "load_csv",
    "load_network",
    "metrics_from_predictions",
    "predict_batch",
    "save_network",
    "split_stratified",
    "split_temporal",
    "train",
]
