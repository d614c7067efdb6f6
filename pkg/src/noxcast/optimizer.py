"""Desirability functions and multi-start pattern search for the minimum-NOx settings."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from noxcast.analysis import _predictor
from noxcast.dataset import PREDICTORS, Dataset


class Mode(str, Enum):
    MINIMIZE = "Minimize"
    MAXIMIZE = "Maximize"
    TARGET = "Target"


@dataclass(frozen=True)
class DesirabilitySpec:
    """Derringer-Suich one-sided (or two-sided for Target) desirability."""

    mode: Mode = Mode.MINIMIZE
    y_low: float = 0.0
    y_high: float = 1.0
    s: float = 1.0
    target: float | None = None
    s_high: float | None = None  # exponent above the target; defaults to s

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.y_low < self.y_high:
            raise ValueError("desirability needs y_low < y_high")
        if not self.s > 0:
            raise ValueError("desirability exponent must be positive")
        if self.mode is Mode.TARGET:
            if self.target is None or not self.y_low < self.target < self.y_high:
                raise ValueError("Target mode needs y_low < target < y_high")


def desirability(y: float, spec: DesirabilitySpec) -> float:
    lo, hi, s = spec.y_low, spec.y_high, spec.s
    if spec.mode is Mode.MINIMIZE:
        if y <= lo:
            return 1.0
        if y >= hi:
            return 0.0
        return ((hi - y) / (hi - lo)) ** s
    if spec.mode is Mode.MAXIMIZE:
        if y <= lo:
            return 0.0
        if y >= hi:
            return 1.0
        return ((y - lo) / (hi - lo)) ** s
    t = spec.target
    if y <= lo or y >= hi:
        return 0.0
    if y <= t:
        return ((y - lo) / (t - lo)) ** s
    return ((hi - y) / (hi - t)) ** (spec.s_high if spec.s_high is not None else s)


@dataclass(frozen=True, eq=False)
class BoxConstraints:
    lower: np.ndarray
    upper: np.ndarray
    names: tuple[str, ...] = PREDICTORS

    def __post_init__(self):
        lo = np.array(self.lower, dtype=np.float64)
        hi = np.array(self.upper, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be vectors of equal length")
        if not np.all(lo < hi):
            bad = [n for n, a, b in zip(self.names, lo, hi) if not a < b]
            raise ValueError(f"box needs lower < upper for every variable: {bad}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "BoxConstraints":
        return cls(dataset.X.min(axis=0), dataset.X.max(axis=0))

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, X) -> bool:
        X = np.asarray(X)
        return bool(np.all((X >= self.lower) & (X <= self.upper)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.lower + rng.random((n, len(self.lower))) * self.width


@dataclass(frozen=True, eq=False)
class StartTrace:
    index: int
    origin: str
    start: np.ndarray
    start_value: float
    final: np.ndarray
    final_value: float
    iterations: int
    history: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    x_star: np.ndarray
    predicted_nox: float
    desirability: float
    n_starts: int
    trace: list[StartTrace] = field(default_factory=list)
    n_evaluations: int = 0

    def settings(self, names=PREDICTORS) -> dict[str, float]:
        return {n: float(v) for n, v in zip(names, self.x_star)}


class _Counted:
    """Model wrapper that checks feasibility of every point it evaluates."""

    def __init__(self, predict, box):
        self.predict = predict
        self.box = box
        self.n = 0

    def __call__(self, X):
        if not self.box.contains(X):
            raise AssertionError("pattern search evaluated a point outside the box")
        self.n += len(X)
        return np.asarray(self.predict(X), dtype=np.float64)


def pattern_search(f, starts, box: BoxConstraints, initial_step=0.1, min_step=1e-6, max_sweeps=10_000):
    """Coordinate pattern search run for all starts in lockstep.

    Each sweep tries ``x ± step_j`` along every coordinate (projected onto the
    box) and moves to the better candidate if it improves; a coordinate that
    fails to improve halves its own step. A start stops once every step is
    below ``min_step`` of its range. Returns final points, values, sweep
    counts and the per-sweep value history of each start.
    """
    X = np.clip(np.array(starts, dtype=np.float64), box.lower, box.upper)
    S, d = X.shape
    fx = f(X)
    steps = np.tile(initial_step * box.width, (S, 1))
    floor = min_step * box.width
    active = np.ones(S, dtype=bool)
    iters = np.zeros(S, dtype=np.int64)
    history = [[float(v)] for v in fx]

    for _ in range(max_sweeps):
        active &= np.any(steps >= floor, axis=1)
        if not active.any():
            break
        rows = np.flatnonzero(active)
        for j in range(d):
            live = rows[steps[rows, j] >= floor[j]]
            if len(live) == 0:
                continue
            up = X[live].copy()
            dn = X[live].copy()
            up[:, j] = np.minimum(up[:, j] + steps[live, j], box.upper[j])
            dn[:, j] = np.maximum(dn[:, j] - steps[live, j], box.lower[j])
            vals = f(np.vstack([up, dn]))
            fu, fd = vals[: len(live)], vals[len(live):]
            take_up = (fu < fx[live]) & (fu <= fd)
            take_dn = (fd < fx[live]) & ~take_up
            X[live[take_up]] = up[take_up]
            fx[live[take_up]] = fu[take_up]
            X[live[take_dn]] = dn[take_dn]
            fx[live[take_dn]] = fd[take_dn]
            failed = live[~(take_up | take_dn)]
            steps[failed, j] *= 0.5
        iters[rows] += 1
        for i in rows:
            history[i].append(float(fx[i]))
    return X, fx, iters, history


def minimize_response(model, box: BoxConstraints, n_starts: int = 32, seed: int = 0,
                      dataset: Dataset | None = None, spec: DesirabilitySpec | None = None,
                      initial_step=0.1, min_step=1e-6) -> OptimizationResult:
    """Multi-start pattern search for the box point with the lowest predicted NOx.

    Half the starts (rounded down) come from the dataset when one is given:
    the record with the lowest predicted NOx, then the records with the lowest
    observed NOx. The rest are uniform draws from ``default_rng(seed)``. Ties
    between starts go to the lowest start index.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    f = _Counted(_predictor(model), box)
    starts, origins = [], []
    if dataset is not None and len(dataset) and n_starts > 1:
        n_obs = n_starts // 2
        inside = np.flatnonzero(np.all((dataset.X >= box.lower) & (dataset.X <= box.upper), axis=1))
        if len(inside):
            pred = np.asarray(f(dataset.X[inside]))
            chosen = [int(inside[np.argmin(pred)])]
            for i in inside[np.argsort(dataset.nox[inside], kind="stable")]:
                if len(chosen) >= n_obs:
                    break
                if int(i) not in chosen:
                    chosen.append(int(i))
            for i in chosen:
                starts.append(dataset.X[i])
                origins.append(f"record {i}")
    rng = np.random.default_rng(seed)
    n_rand = n_starts - len(starts)
    if n_rand:
        starts.extend(box.sample(n_rand, rng))
        origins.extend(["random"] * n_rand)
    starts = np.array(starts)
    start_vals = f(starts)

    X, fx, iters, history = pattern_search(f, starts, box, initial_step, min_step)
    best = int(np.argmin(fx))  # argmin returns the first minimum
    trace = [
        StartTrace(i, origins[i], starts[i], float(start_vals[i]), X[i], float(fx[i]), int(iters[i]),
                   tuple(history[i]))
        for i in range(len(starts))
    ]
    y_star = float(fx[best])
    if spec is None:
        lo = float(dataset.nox.min()) if dataset is not None else y_star
        hi = float(dataset.nox.max()) if dataset is not None else y_star + 1.0
        spec = DesirabilitySpec(Mode.MINIMIZE, lo, hi if hi > lo else lo + 1.0)
    return OptimizationResult(X[best].copy(), y_star, desirability(y_star, spec), len(starts), trace, f.n)
