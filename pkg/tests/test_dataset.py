import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from noxcast import synthetic
from noxcast.dataset import (
    CANONICAL,
    DEFAULT_SCHEMA,
    PREDICTORS,
    ColumnSchema,
    DataError,
    Dataset,
    Standardizer,
    apply_standardizer,
    fit_standardizer,
    invert_standardizer,
    load_csv,
    load_schema,
    validate_schema,
    year_from_path,
)

HEADER = "AT,AP,AH,AFDP,GTEP,TIT,TAT,TEY,CDP,CO,NOX"


def write(path, rows, header=HEADER):
    path.write_text("\n".join([header, *rows]) + "\n")
    return path


ROW = "4.5,1018.7,83.7,3.57,23.98,1086.2,549.83,134.67,11.898,0.32,81.95"


@pytest.fixture
def year_files(tmp_path):
    return synthetic.write_csvs(tmp_path / "data", seed=3, scale=0.01)


def test_load_all_years(year_files):
    ds = load_csv(year_files)
    expected = {y: round(n * 0.01) for y, n in synthetic.YEAR_SIZES.items()}
    assert {y: len(i) for y, i in ds.year_index.items()} == expected
    assert len(ds) == sum(expected.values())
    assert ds.X.shape == (len(ds), 9)
    assert not ds.diagnostics


def test_public_names_map_to_canonical(tmp_path):
    ds = load_csv([write(tmp_path / "gt_2012.csv", [ROW])])
    rec = ds.record(0)
    assert rec.year == 2012
    assert rec.values[PREDICTORS.index("TEP")] == 23.98
    assert rec.values[PREDICTORS.index("TET")] == 549.83
    assert rec.nox == 81.95


def test_header_only_file_gives_empty_year(tmp_path):
    a = write(tmp_path / "gt_2011.csv", [ROW, ROW])
    b = write(tmp_path / "gt_2012.csv", [])
    ds = load_csv([a, b])
    assert len(ds) == 2
    assert len(ds.year_index[2012]) == 0
    only = load_csv([b])
    assert len(only) == 0
    assert only.summary()["per_year"] == {"2012": 0}


def test_non_numeric_cell_names_file_row_column(tmp_path):
    bad = ROW.split(",")
    bad[5] = "abc"
    path = write(tmp_path / "gt_2013.csv", [ROW, ",".join(bad)])
    with pytest.raises(DataError) as info:
        load_csv([path])
    err = info.value
    assert err.path == str(path)
    assert err.row == 3
    assert err.column == "TIT"
    assert "gt_2013.csv" in str(err) and "TIT" in str(err)


def test_lenient_rejects_rows_with_diagnostics(tmp_path):
    rows = [ROW] * 6
    broken = ROW.split(",")
    broken[0] = ""
    rows[1] = ",".join(broken)
    broken = ROW.split(",")
    broken[-1] = "nan"
    rows[4] = ",".join(broken)
    ds = load_csv([write(tmp_path / "gt_2014.csv", rows)], strict=False)
    assert len(ds) == 4
    assert len(ds.diagnostics) == 2
    assert [d.row for d in ds.diagnostics] == [3, 6]
    assert ds.diagnostics[0].reason == "missing value"
    assert np.all(np.isfinite(ds.X))


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_csv([tmp_path / "gt_2011.csv"])


def test_missing_column(tmp_path):
    path = write(tmp_path / "gt_2011.csv", ["1,2"], header="AT,AP")
    with pytest.raises(DataError, match="AH") as info:
        load_csv([path])
    assert info.value.column == "AH"


def test_year_outside_range(tmp_path):
    with pytest.raises(DataError, match="outside"):
        load_csv([write(tmp_path / "gt_2019.csv", [ROW])])


def test_year_override(tmp_path):
    path = write(tmp_path / "turbine.csv", [ROW])
    with pytest.raises(DataError, match="infer the year"):
        load_csv([path])
    assert load_csv([path], years=2015).years.tolist() == [2015]
    assert load_csv([path], years={path: 2011}).years.tolist() == [2011]


def test_year_from_path():
    assert year_from_path("data/gt_2013.csv") == 2013
    assert year_from_path("data/turbine.csv") is None


def test_reload_is_bit_identical(year_files):
    a = load_csv(year_files)
    b = load_csv(list(reversed(year_files)))
    assert a.X.tobytes() == b.X.tobytes()
    assert a.nox.tobytes() == b.nox.tobytes()
    assert a.years.tolist() == b.years.tolist()


def test_year_index_partitions_ordinals(year_files):
    ds = load_csv(year_files)
    all_idx = np.concatenate(list(ds.year_index.values()))
    assert len(all_idx) == len(ds)
    assert sorted(all_idx.tolist()) == list(range(len(ds)))


def test_schema_file(tmp_path):
    schema = {c.canonical_name: {"source_name": c.source_name.lower(), "unit": c.unit} for c in DEFAULT_SCHEMA}
    path = tmp_path / "schema.json"
    path.write_text(json.dumps(schema))
    loaded = load_schema(path)
    assert [c.canonical_name for c in loaded] == list(CANONICAL)
    # header lookup falls back to a case-insensitive match
    ds = load_csv([write(tmp_path / "gt_2011.csv", [ROW])], loaded)
    assert len(ds) == 1


def test_schema_must_cover_every_column():
    with pytest.raises(DataError, match="NOX"):
        validate_schema(DEFAULT_SCHEMA[:-1])
    with pytest.raises(DataError, match="twice"):
        validate_schema(DEFAULT_SCHEMA + (ColumnSchema("AT", "°C", "AT2"),))


def test_summary(year_files):
    s = load_csv(year_files).summary()
    assert s["n_records"] == sum(s["per_year"].values())
    assert set(s["columns"]) == set(CANONICAL)
    assert s["columns"]["NOX"]["min"] <= s["columns"]["NOX"]["mean"] <= s["columns"]["NOX"]["max"]


# ---------------------------------------------------------------------------
# standardizer


def ds_from(X):
    X = np.asarray(X, dtype=float)
    return Dataset(X, np.zeros(len(X)), np.full(len(X), 2011))


def test_two_point_standardizer():
    X = np.array([[1.0] * 9, [3.0] * 9])
    s = fit_standardizer(ds_from(X), [0, 1])
    assert np.all(s.mean == 2.0)
    assert np.all(s.std == 1.0)


def test_subset_only(small_ds):
    idx = np.arange(0, len(small_ds), 3)
    s = fit_standardizer(small_ds, idx)
    np.testing.assert_array_equal(s.mean, small_ds.X[idx].mean(axis=0))


def test_centering_identity(small_ds):
    s = fit_standardizer(small_ds)
    z = apply_standardizer(s, s.mean)
    assert np.all(z == 0.0)
    assert np.all(invert_standardizer(s, np.zeros(9)) == s.mean)


def test_constant_column_rejected():
    X = np.random.default_rng(0).normal(size=(10, 9))
    X[:, 4] = 7.0
    with pytest.raises(DataError, match="TEP"):
        fit_standardizer(ds_from(X))


def test_empty_subset_rejected(small_ds):
    with pytest.raises(DataError):
        fit_standardizer(small_ds, [])


def test_round_trip_random_records(small_ds):
    s = fit_standardizer(small_ds)
    rng = np.random.default_rng(5)
    X = small_ds.X[rng.integers(0, len(small_ds), 1000)]
    back = invert_standardizer(s, apply_standardizer(s, X))
    assert np.max(np.abs(back - X) / np.abs(X).clip(1e-300)) < 1e-9


finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(arrays(np.float64, 9, elements=finite),
       arrays(np.float64, 9, elements=finite),
       arrays(np.float64, 9, elements=st.floats(1e-3, 1e3)))
def test_round_trip_property(x, mean, std):
    s = Standardizer(mean, std)
    back = s.invert(s.apply(x))
    scale = np.maximum(np.abs(x), np.abs(mean) + 1e-300)
    assert np.all(np.abs(back - x) <= 1e-9 * scale)


def test_standardizer_validation():
    with pytest.raises(ValueError):
        Standardizer(np.zeros(9), np.zeros(9))
    s = Standardizer(np.zeros(9), np.ones(9), "Train")
    assert Standardizer.from_json(s.to_json()).fitted_on == "Train"
