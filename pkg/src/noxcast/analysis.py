"""Residual tables, permutation importance and one-variable prediction profiles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from noxcast.dataset import PREDICTORS, Dataset
from noxcast.network import Network, predict_batch
from noxcast.trainer import SplitAssignment, as_partition, metrics_from_predictions

Predictor = Callable[[np.ndarray], np.ndarray]


def _predictor(model) -> Predictor:
    if isinstance(model, Network):
        return lambda X: predict_batch(model, X)
    return model


@dataclass(frozen=True, eq=False)
class ResidualTable:
    actual: np.ndarray
    predicted: np.ndarray
    residual: np.ndarray
    ordinals: np.ndarray
    partition: str

    def __len__(self):
        return len(self.actual)

    def rows(self):
        return zip(self.ordinals.tolist(), self.actual.tolist(), self.predicted.tolist(), self.residual.tolist())


def residual_table(model, dataset: Dataset, split: SplitAssignment, partition) -> ResidualTable:
    part = as_partition(partition)
    idx = split.indices(part)
    if len(idx) == 0:
        raise ValueError(f"{part.value} partition is empty")
    actual = dataset.nox[idx]
    predicted = np.asarray(_predictor(model)(dataset.X[idx]), dtype=np.float64)
    return ResidualTable(actual, predicted, actual - predicted, idx, part.value)


@dataclass(frozen=True)
class ImportanceEntry:
    variable: str
    score: float
    std: float
    rank: int


def _r2(y, yhat) -> float:
    return metrics_from_predictions(y, yhat).r_square


def permutation_importance(model, X, y, K: int = 10, seed: int = 0,
                           names=PREDICTORS) -> list[ImportanceEntry]:
    """Mean R² drop over ``K`` shuffles of each column, sorted by score.

    Rows are put into a canonical (lexicographic) order first, so the result
    does not depend on how the partition happens to be ordered. Shuffle k of
    column j uses ``default_rng([seed, j, k])``, independent of evaluation order.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise ValueError("cannot rank variables on an empty partition")
    order = np.lexsort(np.column_stack([X, y]).T[::-1])
    X, y = X[order], y[order]
    predict = _predictor(model)
    base = _r2(y, predict(X))

    scored = []
    for j, name in enumerate(names):
        drops = np.empty(K)
        for k in range(K):
            rng = np.random.default_rng([seed, j, k])
            Xp = X.copy()
            Xp[:, j] = X[rng.permutation(len(X)), j]
            drops[k] = base - _r2(y, predict(Xp))
        scored.append((name, float(drops.mean()), float(drops.std())))
    # stable sort keeps column order among ties
    scored.sort(key=lambda t: -t[1])
    return [ImportanceEntry(n, s, sd, r) for r, (n, s, sd) in enumerate(scored, start=1)]


def partition_importance(model, dataset: Dataset, split: SplitAssignment, partition="Validation",
                         K: int = 10, seed: int = 0) -> list[ImportanceEntry]:
    idx = split.indices(partition)
    return permutation_importance(model, dataset.X[idx], dataset.nox[idx], K, seed)


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    variable: str
    grid: np.ndarray
    predictions: np.ndarray
    base: np.ndarray

    @property
    def range(self) -> float:
        return float(self.predictions.max() - self.predictions.min())


def profile(model, dataset: Dataset, variable: str, base=None, grid_n: int = 50) -> ProfileCurve:
    """Sweep ``variable`` across its observed range with the others held at ``base`` (default: medians)."""
    if variable not in PREDICTORS:
        raise KeyError(f"unknown variable {variable!r}; expected one of {PREDICTORS}")
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    j = PREDICTORS.index(variable)
    col = dataset.X[:, j]
    base = np.median(dataset.X, axis=0) if base is None else np.asarray(base, dtype=np.float64).copy()
    grid = np.linspace(col.min(), col.max(), grid_n)
    grid[0], grid[-1] = col.min(), col.max()
    Xs = np.tile(base, (grid_n, 1))
    Xs[:, j] = grid
    return ProfileCurve(variable, grid, np.asarray(_predictor(model)(Xs), dtype=np.float64), base)


def all_profiles(model, dataset: Dataset, base=None, grid_n: int = 50) -> dict[str, ProfileCurve]:
    return {v: profile(model, dataset, v, base, grid_n) for v in PREDICTORS}
