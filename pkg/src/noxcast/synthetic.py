"""Synthetic turbine-like data for smoke runs and tests.

The generator mimics the layout of the public files (one CSV per year, the
public column names including the unused CO column) and their broad
structure: a load factor drives TIT/TEP/CDP/TEY together, ambient conditions
follow a seasonal cycle, and a slow degradation term shifts NOx year by year
while leaving a faint trace in TET and AFDP. It is not a stand-in for the
real data; numbers from it say nothing about the published results.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from noxcast.dataset import PREDICTORS, Dataset

YEAR_SIZES = {2011: 7411, 2012: 7628, 2013: 7152, 2014: 7158, 2015: 7384}
PUBLIC_HEADER = ("AT", "AP", "AH", "AFDP", "GTEP", "TIT", "TAT", "TEY", "CDP", "CO", "NOX")


def generate(seed: int = 0, year_sizes=None, scale: float = 1.0) -> dict[int, np.ndarray]:
    """Per-year arrays with columns in :data:`PUBLIC_HEADER` order."""
    rng = np.random.default_rng(seed)
    sizes = dict(YEAR_SIZES if year_sizes is None else year_sizes)
    out = {}
    for k, (year, n) in enumerate(sorted(sizes.items())):
        n = max(int(round(n * scale)), 0)
        t = np.arange(n) / max(n, 1)
        deg = (k + t) / len(sizes)
        at = 17 + 8 * np.sin(2 * np.pi * (t - 0.3)) + rng.normal(0, 3, n)
        ap = 1013 - 0.3 * (at - 17) + rng.normal(0, 6, n)
        ah = np.clip(78 - 1.2 * (at - 17) + rng.normal(0, 12, n), 25, 100)
        load = np.where(rng.random(n) < 0.6, rng.normal(0.8, 0.08, n), rng.uniform(0.3, 1.0, n))
        load = np.clip(load, 0.25, 1.05)
        dl = load - 0.7
        tit = 1060 + 60 * dl + rng.normal(0, 4, n)
        tey = 134 + 80 * dl - 0.3 * (at - 17) - 4 * deg + rng.normal(0, 1.5, n)
        cdp = 12 + 5 * dl - 0.2 * deg + rng.normal(0, 0.1, n)
        tep = 25 + 12 * dl + rng.normal(0, 0.6, n)
        tet = 546 - 35 * dl + 0.3 * (at - 17) + 6 * deg + rng.normal(0, 1.5, n)
        afdp = 3.5 + 1.5 * dl + 0.8 * deg + rng.normal(0, 0.15, n)
        co = np.clip(2 - 4 * dl + rng.normal(0, 0.5, n), 0, None)
        nox = (65 - 1.1 * (at - 17) + 0.12 * (ah - 78) + 0.08 * (ap - 1013)
               + 18 * np.tanh(3 * dl) - 14 * deg + rng.normal(0, 4, n))
        out[year] = np.column_stack([at, ap, ah, afdp, tep, tit, tet, tey, cdp, co, nox])
    return out


def write_csvs(directory, seed: int = 0, year_sizes=None, scale: float = 1.0) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for year, arr in generate(seed, year_sizes, scale).items():
        path = directory / f"gt_{year}.csv"
        lines = [",".join(PUBLIC_HEADER)]
        lines.extend(",".join(f"{v:.4f}" for v in row) for row in arr)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def dataset(seed: int = 0, year_sizes=None, scale: float = 1.0) -> Dataset:
    """In-memory equivalent of :func:`write_csvs` followed by loading (without the 4-decimal rounding)."""
    parts = generate(seed, year_sizes, scale)
    keep = [PUBLIC_HEADER.index(c) for c in ("AT", "AP", "AH", "AFDP", "GTEP", "TIT", "TAT", "TEY", "CDP")]
    X = np.vstack([a[:, keep] for a in parts.values()]).reshape(-1, len(PREDICTORS))
    y = np.concatenate([a[:, -1] for a in parts.values()])
    years = np.concatenate([np.full(len(a), yr) for yr, a in parts.items()])
    return Dataset(X, y, years)
