"""Per-year CSV ingest, canonical column schema and predictor standardization.

The public copies of the turbine data name two columns differently from the
canonical names used here (``GTEP`` -> ``TEP``, ``TAT`` -> ``TET``); the schema's
``source_name`` carries that mapping. The year is not a column in those files,
so it is read from the file name (``gt_2013.csv`` -> 2013) unless given.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

PREDICTORS: tuple[str, ...] = ("AT", "AP", "AH", "AFDP", "TEP", "TIT", "TET", "TEY", "CDP")
RESPONSE = "NOX"
CANONICAL: tuple[str, ...] = PREDICTORS + (RESPONSE,)
YEAR_RANGE = (2011, 2015)


class DataError(ValueError):
    """Raised for missing files, missing columns and malformed cells."""

    def __init__(self, message, path=None, row=None, column=None):
        super().__init__(message)
        self.path = path
        self.row = row
        self.column = column


@dataclass(frozen=True)
class ColumnSchema:
    canonical_name: str
    unit: str
    source_name: str

    def __post_init__(self):
        if self.canonical_name not in CANONICAL:
            raise DataError(f"unknown canonical column {self.canonical_name!r}")


DEFAULT_SCHEMA: tuple[ColumnSchema, ...] = (
    ColumnSchema("AT", "°C", "AT"),
    ColumnSchema("AP", "mbar", "AP"),
    ColumnSchema("AH", "%", "AH"),
    ColumnSchema("AFDP", "mbar", "AFDP"),
    ColumnSchema("TEP", "mbar", "GTEP"),
    ColumnSchema("TIT", "°C", "TIT"),
    ColumnSchema("TET", "°C", "TAT"),
    ColumnSchema("TEY", "MWh", "TEY"),
    ColumnSchema("CDP", "bar", "CDP"),
    ColumnSchema("NOX", "mg/m³", "NOX"),
)


def validate_schema(schema: Sequence[ColumnSchema]) -> tuple[ColumnSchema, ...]:
    """Check the schema covers all ten canonical names once and return it in canonical order."""
    by_name = {}
    for col in schema:
        if col.canonical_name in by_name:
            raise DataError(f"canonical column {col.canonical_name} mapped twice")
        by_name[col.canonical_name] = col
    missing = [name for name in CANONICAL if name not in by_name]
    if missing:
        raise DataError(f"schema lacks canonical columns: {', '.join(missing)}")
    sources = [col.source_name for col in by_name.values()]
    if len(set(sources)) != len(sources):
        raise DataError("two canonical columns share one source column")
    return tuple(by_name[name] for name in CANONICAL)


def load_schema(path) -> tuple[ColumnSchema, ...]:
    """Read a JSON schema file: ``{canonical_name: {"source_name": ..., "unit": ...}}``."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"schema file not found: {path}", path=str(path))
    raw = json.loads(path.read_text(encoding="utf-8"))
    cols = [
        ColumnSchema(name, str(entry.get("unit", "")), str(entry.get("source_name", name)))
        for name, entry in raw.items()
    ]
    return validate_schema(cols)


def schema_to_json(schema: Sequence[ColumnSchema]) -> dict:
    return {c.canonical_name: {"source_name": c.source_name, "unit": c.unit} for c in schema}


@dataclass(frozen=True)
class ProcessRecord:
    year: int
    values: tuple[float, ...]
    nox: float


@dataclass(frozen=True)
class RowDiagnostic:
    path: str
    row: int  # line number in the file, header is line 1
    column: str | None
    value: str | None
    reason: str

    def __str__(self):
        where = f"{self.path}:{self.row}"
        if self.column is not None:
            where += f" column {self.column}"
        return f"{where}: {self.reason} ({self.value!r})"


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable column-major view of the loaded records.

    ``X`` holds the nine predictors in :data:`PREDICTORS` order, ``nox`` the
    response in mg/m³ and ``years`` the year tag of each record ordinal.
    """

    X: np.ndarray
    nox: np.ndarray
    years: np.ndarray
    schema: tuple[ColumnSchema, ...] = DEFAULT_SCHEMA
    diagnostics: tuple[RowDiagnostic, ...] = ()
    sources: tuple[str, ...] = ()
    declared_years: tuple[int, ...] = ()  # years of loaded files, kept even when a file is empty
    year_index: Mapping[int, np.ndarray] = field(init=False)

    def __post_init__(self):
        X = _readonly(self.X)
        if X.ndim != 2 or X.shape[1] != len(PREDICTORS):
            raise DataError(f"expected an (n, {len(PREDICTORS)}) predictor matrix, got {X.shape}")
        nox = _readonly(self.nox)
        years = np.array(self.years, dtype=np.int64)
        years.flags.writeable = False
        if not (len(nox) == len(years) == len(X)):
            raise DataError("predictor, response and year lengths differ")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "nox", nox)
        object.__setattr__(self, "years", years)
        index = {}
        for year in sorted(set(years.tolist()) | set(self.declared_years)):
            idx = np.flatnonzero(years == year)
            idx.flags.writeable = False
            index[int(year)] = idx
        object.__setattr__(self, "year_index", index)

    def __len__(self):
        return len(self.nox)

    @property
    def n_records(self) -> int:
        return len(self.nox)

    def record(self, i: int) -> ProcessRecord:
        return ProcessRecord(int(self.years[i]), tuple(float(v) for v in self.X[i]), float(self.nox[i]))

    @property
    def records(self) -> list[ProcessRecord]:
        return [self.record(i) for i in range(len(self))]

    def column(self, name: str) -> np.ndarray:
        if name == RESPONSE:
            return self.nox
        try:
            return self.X[:, PREDICTORS.index(name)]
        except ValueError:
            raise KeyError(f"unknown column {name!r}; expected one of {CANONICAL}") from None

    def table(self) -> np.ndarray:
        """All ten columns in canonical order (predictors, then NOX)."""
        return np.column_stack([self.X, self.nox])

    def unit(self, name: str) -> str:
        return next(c.unit for c in self.schema if c.canonical_name == name)

    def summary(self) -> dict:
        cols = {}
        for name in CANONICAL:
            v = self.column(name)
            cols[name] = {
                "min": float(v.min()) if len(v) else None,
                "max": float(v.max()) if len(v) else None,
                "mean": float(v.mean()) if len(v) else None,
                "unit": self.unit(name),
            }
        return {
            "n_records": len(self),
            "per_year": {str(y): int(len(idx)) for y, idx in self.year_index.items()},
            "columns": cols,
            "n_rejected": len(self.diagnostics),
        }

    @classmethod
    def from_records(cls, records: Iterable[ProcessRecord], schema=DEFAULT_SCHEMA) -> "Dataset":
        records = list(records)
        X = np.array([r.values for r in records], dtype=np.float64).reshape(len(records), len(PREDICTORS))
        return cls(X, [r.nox for r in records], [r.year for r in records], schema=tuple(schema))


_YEAR_RE = re.compile(r"(?<!\d)(\d{4})(?!\d)")


def year_from_path(path) -> int | None:
    m = _YEAR_RE.findall(Path(path).stem)
    return int(m[-1]) if m else None


def _parse_cell(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("non-finite")
    return value


def load_csv(
    paths: Sequence,
    schema: Sequence[ColumnSchema] = DEFAULT_SCHEMA,
    years: Mapping | int | None = None,
    strict: bool = True,
    year_range: tuple[int, int] | None = YEAR_RANGE,
) -> Dataset:
    """Load one CSV per year into a :class:`Dataset`.

    Paths are sorted before reading, so record order only depends on the set
    of files. ``years`` overrides the year parsed from the file name: a single
    int applies to every file, a mapping is keyed by path.

    With ``strict`` a malformed cell raises :class:`DataError` carrying the
    file, line and column. Otherwise the row is dropped and a
    :class:`RowDiagnostic` is kept on ``Dataset.diagnostics``.
    """
    schema = validate_schema(schema)
    if not paths:
        raise DataError("no data files given")
    year_override = {}
    if isinstance(years, Mapping):
        year_override = {str(Path(k)): int(v) for k, v in years.items()}

    rows_x, rows_y, rows_year = [], [], []
    diagnostics = []
    sources, declared = [], []
    for path in sorted(Path(p) for p in paths):
        if not path.is_file():
            raise DataError(f"data file not found: {path}", path=str(path))
        if isinstance(years, int):
            year = years
        else:
            year = year_override.get(str(path), year_from_path(path))
        if year is None:
            raise DataError(f"cannot infer the year of {path}; pass it explicitly", path=str(path))
        if year_range is not None and not (year_range[0] <= year <= year_range[1]):
            raise DataError(f"year {year} of {path} outside {year_range[0]}-{year_range[1]}", path=str(path))
        sources.append(str(path))
        declared.append(int(year))

        with path.open(newline="", encoding="utf-8-sig") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise DataError(f"{path} has no header row", path=str(path))
            header = [h.strip() for h in header]
            lookup = {h: i for i, h in enumerate(header)}
            folded = {h.upper(): i for i, h in enumerate(header)}
            positions = []
            for col in schema:
                pos = lookup.get(col.source_name, folded.get(col.source_name.upper()))
                if pos is None:
                    raise DataError(
                        f"{path}: missing column {col.source_name!r} (for {col.canonical_name})",
                        path=str(path),
                        column=col.source_name,
                    )
                positions.append(pos)

            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                parsed = []
                bad = None
                for col, pos in zip(schema, positions):
                    text = row[pos].strip() if pos < len(row) else ""
                    try:
                        parsed.append(_parse_cell(text))
                    except ValueError:
                        bad = RowDiagnostic(
                            str(path), lineno, col.source_name, text,
                            "missing value" if not text else "non-numeric value",
                        )
                        break
                if bad is not None:
                    if strict:
                        raise DataError(str(bad), path=bad.path, row=bad.row, column=bad.column)
                    diagnostics.append(bad)
                    continue
                rows_x.append(parsed[:-1])
                rows_y.append(parsed[-1])
                rows_year.append(year)

    X = np.array(rows_x, dtype=np.float64).reshape(len(rows_x), len(PREDICTORS))
    return Dataset(X, rows_y, rows_year, schema=schema, diagnostics=tuple(diagnostics),
                   sources=tuple(sources), declared_years=tuple(sorted(set(declared))))


def find_data_files(directory) -> list[Path]:
    """The per-year CSV files of a data directory (any ``*.csv`` with a year in its name)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"data directory not found: {directory}", path=str(directory))
    return sorted(p for p in directory.glob("*.csv") if year_from_path(p) is not None)


@dataclass(frozen=True, eq=False)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray
    fitted_on: str = "train"

    def __post_init__(self):
        mean, std = _readonly(self.mean), _readonly(self.std)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean and std must be vectors of equal length")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std)) and np.all(std > 0)):
            raise ValueError("standardizer needs finite means and positive standard deviations")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def apply(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def invert(self, z):
        return np.asarray(z, dtype=np.float64) * self.std + self.mean

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "fitted_on": self.fitted_on}

    @classmethod
    def from_json(cls, d) -> "Standardizer":
        return cls(d["mean"], d["std"], d.get("fitted_on", "train"))


def fit_standardizer(dataset: Dataset, subset=None, fitted_on: str = "train") -> Standardizer:
    """Mean and population standard deviation (divisor n) of each predictor over ``subset``."""
    X = dataset.X if subset is None else dataset.X[np.asarray(subset, dtype=np.int64)]
    if len(X) == 0:
        raise DataError("cannot fit a standardizer on an empty subset")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    for name, s, col in zip(PREDICTORS, std, X.T):
        if s == 0 or np.all(col == col[0]):
            raise DataError(f"predictor {name} is constant over the fitting subset", column=name)
    return Standardizer(mean, std, fitted_on)


def apply_standardizer(s: Standardizer, x):
    return s.apply(x)


def invert_standardizer(s: Standardizer, z):
    return s.invert(z)
