import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from conekit import calibration
from conekit.cones import lorentz, orthant, product, random_points, simplicial

settings.register_profile("conekit", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("conekit")


@pytest.fixture(autouse=True, scope="session")
def _calibration_cache(tmp_path_factory):
    """Keep the calibration cache out of the user's home directory."""
    path = tmp_path_factory.mktemp("cache") / "calibration.json"
    mp = pytest.MonkeyPatch()
    mp.setenv("CONEKIT_CACHE", str(path))
    calibration.clear_memo()
    yield path
    mp.undo()


def _regular_matrix(n):
    entries = st.floats(-0.6, 0.6, allow_nan=False)
    return st.lists(st.lists(entries, min_size=n, max_size=n), min_size=n, max_size=n).map(
        lambda rows: np.eye(n) + np.array(rows)).filter(lambda a: abs(np.linalg.det(a)) > 0.1)


def cone_strategy(include_product=True):
    base = [st.integers(1, 4).map(orthant), st.integers(2, 4).map(lorentz),
            st.integers(2, 3).flatmap(_regular_matrix).map(simplicial)]
    if include_product:
        base.append(st.tuples(st.integers(1, 2).map(orthant), st.integers(2, 3).map(lorentz))
                    .map(lambda fs: product(*fs)))
    return st.one_of(*base)


def points(cone, seed, size, spread=0.5):
    return random_points(cone, np.random.default_rng(seed), size, spread)


cones_st = cone_strategy()
seeds_st = st.integers(0, 2**32 - 1)


# ---------------------------------------------------------------- acceptance summary

_ACCEPTANCE: dict[int, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    n = int(name.split("_")[2])
    if report.when == "call" or report.outcome != "passed":
        _ACCEPTANCE[n] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    import test_acceptance
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        detail = test_acceptance.DETAILS.get(n, "")
        terminalreporter.write_line(f"criterion {n:2d}: {_ACCEPTANCE[n]}  {detail}")
