import os
from pathlib import Path

import hypothesis
import numpy as np
import pytest

from noxcast import synthetic
from noxcast.dataset import DataError, find_data_files, load_csv

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

np.seterr(all="raise", under="ignore")

# criterion lines collected by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_runtest_logreport(report):
    if report.skipped and "test_acceptance" in report.nodeid and report.when == "setup":
        reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
        ACCEPTANCE_LINES.append(f"[SKIP] {report.nodeid.split('::')[-1]}: {reason}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_ds():
    """Synthetic turbine data, 1/20 of the real size, all five years."""
    return synthetic.dataset(seed=7, scale=0.05)


@pytest.fixture(scope="session")
def full_layout_ds():
    """Synthetic data with the public files' per-year record counts."""
    return synthetic.dataset(seed=11)


@pytest.fixture(scope="session")
def real_data():
    """The public turbine dataset from $NOXCAST_DATA (a directory of gt_<year>.csv files)."""
    where = os.environ.get("NOXCAST_DATA")
    if not where:
        pytest.skip("NOXCAST_DATA not set; the public gas-turbine dataset is needed")
    try:
        files = find_data_files(Path(where))
        return load_csv(files)
    except DataError as exc:
        pytest.skip(f"cannot load NOXCAST_DATA: {exc}")
