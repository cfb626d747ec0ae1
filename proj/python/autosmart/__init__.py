"""Automatic machine learning on temporal relational tables."""

from autosmart._core import (
    AutosmartError,
    auc,
    average_score,
    competition_score,
    generate_dataset,
    load_labels,
    load_predictions,
    train_predict,
)

__all__ = [
    "AutosmartError",
    "auc",
    "average_score",
    "competition_score",
    "generate_dataset",
    "load_labels",
    "load_predictions",
    "train_predict",
]
