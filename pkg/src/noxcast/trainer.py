"""Train/validation/test splitting, the training loop and the metric suite."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from noxcast.dataset import Dataset, fit_standardizer
from noxcast.network import (
    DEFAULT_SPEC,
    Network,
    config_digest,
    gradient,
    init_network,
    predict_batch,
)


class Partition(str, Enum):
    TRAIN = "Train"
    VALIDATION = "Validation"
    TEST = "Test"


PARTITIONS = (Partition.TRAIN, Partition.VALIDATION, Partition.TEST)
LABEL_CODES = {p: i for i, p in enumerate(PARTITIONS)}


class Strategy(str, Enum):
    TEMPORAL = "TemporalByYear"
    STRATIFIED = "StratifiedByYear"


def as_partition(p) -> Partition:
    if isinstance(p, Partition):
        return p
    for part in PARTITIONS:
        if str(p).lower() == part.value.lower():
            return part
    raise ValueError(f"unknown partition {p!r}; expected Train, Validation or Test")


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True, eq=False)
class SplitAssignment:
    """Per-record partition codes (0 train, 1 validation, 2 test) and their provenance."""

    labels: np.ndarray
    strategy: Strategy
    parameters: dict
    seed: int | None = None

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int8)
        if labels.size and (labels.min() < 0 or labels.max() > 2):
            raise ValueError("labels must be 0, 1 or 2")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "strategy", Strategy(self.strategy))

    def indices(self, partition) -> np.ndarray:
        return np.flatnonzero(self.labels == LABEL_CODES[as_partition(partition)])

    def counts(self) -> dict[str, int]:
        return {p.value: int(np.count_nonzero(self.labels == LABEL_CODES[p])) for p in PARTITIONS}

    def label_names(self) -> list[str]:
        return [PARTITIONS[c].value for c in self.labels]


def split_temporal(dataset: Dataset, train_years, val_years, test_years) -> SplitAssignment:
    groups = [set(int(y) for y in g) for g in (train_years, val_years, test_years)]
    for i in range(3):
        for j in range(i + 1, 3):
            common = groups[i] & groups[j]
            if common:
                raise ValueError(f"years {sorted(common)} assigned to two partitions")
    present = set(dataset.year_index)
    missing = present - set().union(*groups)
    if missing:
        raise ValueError(f"years {sorted(missing)} are not assigned to any partition")
    labels = np.full(len(dataset), -1, dtype=np.int8)
    for code, years in enumerate(groups):
        for y in years:
            if y in dataset.year_index:
                labels[dataset.year_index[y]] = code
    for code, part in enumerate(PARTITIONS):
        if not np.any(labels == code):
            raise ValueError(f"{part.value} partition is empty")
    return SplitAssignment(
        labels,
        Strategy.TEMPORAL,
        {"train_years": sorted(groups[0]), "val_years": sorted(groups[1]), "test_years": sorted(groups[2])},
    )


def largest_remainder(n: int, fractions) -> list[int]:
    """Integer allocation of ``n`` proportional to ``fractions``; ties go to the earlier partition."""
    quotas = [n * f for f in fractions]
    counts = [math.floor(q) for q in quotas]
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def split_stratified(dataset: Dataset, fractions=(0.6, 0.2, 0.2), seed: int = 0) -> SplitAssignment:
    """Shuffle each year with a seeded generator, then cut it by largest-remainder counts.

    Years are processed in ascending order from one ``default_rng(seed)``
    stream, so the labels depend only on the per-year record counts and seed.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or min(fractions) <= 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must be three positive numbers summing to 1")
    rng = np.random.default_rng(seed)
    labels = np.full(len(dataset), -1, dtype=np.int8)
    per_year = {}
    for year, idx in dataset.year_index.items():
        counts = largest_remainder(len(idx), fractions)
        shuffled = idx[rng.permutation(len(idx))]
        start = 0
        for code, c in enumerate(counts):
            labels[shuffled[start:start + c]] = code
            start += c
        per_year[str(year)] = counts
    return SplitAssignment(labels, Strategy.STRATIFIED, {"fractions": list(fractions), "per_year": per_year}, seed)


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    learning_rate: float = 0.01
    max_epochs: int = 2000
    patience: int = 100
    penalty: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    tol: float = 1e-10  # relative training-loss change counted as converged
    batch_mode: str = "full-batch"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if not 0 <= self.patience <= self.max_epochs:
            raise ValueError("patience must lie in [0, max_epochs]")
        if self.penalty < 0:
            raise ValueError("penalty must be non-negative")
        if self.batch_mode != "full-batch":
            raise ValueError("only full-batch training is supported")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_sse: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = "MaxEpochs"

    def rows(self):
        for epoch, (loss, sse) in enumerate(zip(self.train_loss, self.val_sse), start=1):
            yield epoch, loss, sse


def train(dataset: Dataset, split: SplitAssignment, config: TrainConfig = TrainConfig(),
          spec=DEFAULT_SPEC, init: Network | None = None) -> tuple[Network, TrainHistory]:
    """Full-batch Adam on the penalized squared error, keeping the best-validation epoch.

    The output bias starts at the training-set mean of NOx (the other biases
    at zero), so the optimizer does not spend its first epochs walking the
    bias up to the response level.
    """
    tr = split.indices(Partition.TRAIN)
    va = split.indices(Partition.VALIDATION)
    if len(tr) == 0 or len(va) == 0:
        raise ValueError("training and validation partitions must be non-empty")
    X, y = dataset.X[tr], dataset.nox[tr]
    Xv, yv = dataset.X[va], dataset.nox[va]

    if init is None:
        std = fit_standardizer(dataset, tr, fitted_on="Train")
        net = init_network(config.seed, std, spec).replace(b_out=float(y.mean()))
    else:
        net = init
    theta = net.flat()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    b1, b2 = config.beta1, config.beta2

    hist = TrainHistory()
    best_theta, best_sse = theta.copy(), math.inf
    since_best = 0
    prev_loss = math.inf
    # overflow surfaces as a non-finite loss, reported as divergence
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, config.max_epochs + 1):
            g = gradient(net, X, y, config.penalty)
            if not (math.isfinite(g.loss) and np.all(np.isfinite(g.flat()))):
                raise TrainingDiverged(epoch)
            gf = g.flat()
            m = b1 * m + (1 - b1) * gf
            v = b2 * v + (1 - b2) * gf * gf
            mhat = m / (1 - b1 ** epoch)
            vhat = v / (1 - b2 ** epoch)
            theta = theta - config.learning_rate * mhat / (np.sqrt(vhat) + config.eps)
            net = net.with_flat(theta)

            r = predict_batch(net, Xv) - yv
            sse = float(r @ r)
            if not math.isfinite(sse):
                raise TrainingDiverged(epoch)
            hist.train_loss.append(g.loss)
            hist.val_sse.append(sse)
            if sse < best_sse:
                best_sse, best_theta, hist.best_epoch = sse, theta.copy(), epoch
                since_best = 0
            else:
                since_best += 1
            if since_best >= config.patience:
                hist.stop_reason = "Patience"
                break
            if abs(prev_loss - g.loss) <= config.tol * max(abs(g.loss), 1.0):
                hist.stop_reason = "Converged"
                break
            prev_loss = g.loss

    meta = {
        "train_config": config.to_json(),
        "config_digest": config_digest({"train": config.to_json(), "split": split.parameters,
                                        "strategy": split.strategy.value, "split_seed": split.seed}),
        "split_strategy": split.strategy.value,
        "best_epoch": hist.best_epoch,
        "stop_reason": hist.stop_reason,
    }
    best = net.with_flat(best_theta).replace(seed=config.seed, meta=meta)
    return best, hist


@dataclass(frozen=True)
class MetricsReport:
    r_square: float
    rmse: float
    mean_abs_dev: float
    neg_log_likelihood: float
    sse: float
    sum_freq: int
    partition: str = ""

    def to_json(self) -> dict:
        return {
            "partition": self.partition,
            "RSquare": self.r_square,
            "RMSE": self.rmse,
            "Mean Abs Dev": self.mean_abs_dev,
            "-LogLikelihood": self.neg_log_likelihood,
            "SSE": self.sse,
            "Sum Freq": self.sum_freq,
        }

    @classmethod
    def from_json(cls, d) -> "MetricsReport":
        return cls(d["RSquare"], d["RMSE"], d["Mean Abs Dev"], d["-LogLikelihood"], d["SSE"],
                   int(d["Sum Freq"]), d.get("partition", ""))


def rmse_from_sse(sse: float, n: int) -> float:
    return math.sqrt(sse / n)


def neg_log_likelihood(sse: float, n: int) -> float:
    """Gaussian -log L at the maximum-likelihood variance SSE/n."""
    return 0.5 * n * (math.log(2 * math.pi) + math.log(sse / n) + 1.0)


def metrics_from_predictions(actual, predicted, partition: str = "") -> MetricsReport:
    y = np.asarray(actual, dtype=np.float64)
    yhat = np.asarray(predicted, dtype=np.float64)
    n = len(y)
    if n == 0:
        raise ValueError("cannot evaluate an empty partition")
    resid = y - yhat
    sse = float(resid @ resid)
    dev = y - y.mean()
    sst = float(dev @ dev)
    if sst == 0:
        raise ValueError("response has zero variance in this partition; R² undefined")
    nll = neg_log_likelihood(sse, n) if sse > 0 else -math.inf
    return MetricsReport(1.0 - sse / sst, rmse_from_sse(sse, n), float(np.abs(resid).mean()),
                         nll, sse, n, partition)


def evaluate(net: Network, dataset: Dataset, split: SplitAssignment, partition) -> MetricsReport:
    part = as_partition(partition)
    idx = split.indices(part)
    if len(idx) == 0:
        raise ValueError(f"{part.value} partition is empty")
    return metrics_from_predictions(dataset.nox[idx], predict_batch(net, dataset.X[idx]), part.value)
