"""Column summaries, histograms, boxplot fences and the Pearson correlation matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from noxcast.dataset import CANONICAL, Dataset

FENCE_FACTOR = 1.5


@dataclass(frozen=True)
class BoxplotSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    iqr: float
    lower_fence: float
    upper_fence: float
    n_outliers: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]
    counts: tuple[int, ...]

    def to_json(self) -> dict:
        return {"edges": list(self.edges), "counts": list(self.counts)}


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    labels: tuple[str, ...]
    values: np.ndarray

    def __getitem__(self, pair):
        a, b = pair
        return float(self.values[self.labels.index(a), self.labels.index(b)])

    def to_csv(self, digits: int = 6) -> str:
        lines = ["," + ",".join(self.labels)]
        for name, row in zip(self.labels, self.values):
            lines.append(name + "," + ",".join(f"{v:.{digits}f}" for v in row))
        return "\n".join(lines) + "\n"


def five_number_summary(values) -> BoxplotSummary:
    """Quartiles by linear interpolation at order-statistic position (n-1)p, plus 1.5 IQR fences."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or len(v) < 2:
        raise ValueError("five_number_summary needs at least two values")
    if not np.all(np.isfinite(v)):
        raise ValueError("five_number_summary needs finite values")
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
    iqr = q3 - q1
    lo = q1 - FENCE_FACTOR * iqr
    hi = q3 + FENCE_FACTOR * iqr
    n_out = int(np.count_nonzero((v < lo) | (v > hi)))
    return BoxplotSummary(float(v.min()), float(q1), float(med), float(q3), float(v.max()),
                          float(iqr), float(lo), float(hi), n_out)


def histogram(values, n_bins: int = 30) -> Histogram:
    v = np.asarray(values, dtype=np.float64)
    if n_bins < 1:
        raise ValueError("n_bins must be at least 1")
    lo, hi = float(v.min()), float(v.max())
    if not hi > lo:
        raise ValueError("zero-width range: all values are equal")
    edges = np.linspace(lo, hi, n_bins + 1)
    # np.histogram closes the last bin on the right
    counts, _ = np.histogram(v, bins=edges)
    return Histogram(tuple(float(e) for e in edges), tuple(int(c) for c in counts))


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    r = float(np.dot(dx, dy) / np.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))
    return min(1.0, max(-1.0, r))


def pearson_matrix(dataset: Dataset | np.ndarray, labels=CANONICAL) -> CorrelationMatrix:
    """Pearson product-moment matrix over all records and columns.

    Accepts a :class:`Dataset` (all ten canonical columns) or a plain
    (n, k) array together with ``labels``.
    """
    table = dataset.table() if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=np.float64)
    labels = tuple(labels)
    if len(table) == 0:
        raise ValueError("correlation needs a non-empty dataset")
    centered = table - table.mean(axis=0)
    ss = np.einsum("ij,ij->j", centered, centered)
    for name, s, col in zip(labels, ss, table.T):
        if s == 0 or np.all(col == col[0]):
            raise ValueError(f"column {name} is constant; correlation undefined")
    norm = np.sqrt(ss)
    k = table.shape[1]
    r = np.empty((k, k))
    for i in range(k):
        r[i, i] = 1.0
        for j in range(i + 1, k):
            v = np.dot(centered[:, i], centered[:, j]) / (norm[i] * norm[j])
            r[i, j] = r[j, i] = min(1.0, max(-1.0, v))
    return CorrelationMatrix(labels, r)


def strong_pairs(cm: CorrelationMatrix, threshold: float = 0.8):
    out = []
    for i, a in enumerate(cm.labels):
        for b in cm.labels[i + 1:]:
            if cm[a, b] > threshold:
                out.append((a, b, cm[a, b]))
    return out


def column_report(dataset: Dataset, n_bins: int = 30) -> dict:
    """Per-column boxplot summary and histogram, keyed by canonical name."""
    report = {}
    for name in CANONICAL:
        v = dataset.column(name)
        report[name] = {
            "unit": dataset.unit(name),
            "n": int(len(v)),
            "mean": float(v.mean()),
            "std": float(v.std()),
            "boxplot": five_number_summary(v).to_json(),
            "histogram": histogram(v, n_bins).to_json(),
        }
    return report
