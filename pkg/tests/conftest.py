import os

import numpy as np
import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture(scope="session", autouse=True)
def threshold_cache(tmp_path_factory):
    """Keep threshold computations out of the user's cache directory."""
    path = tmp_path_factory.mktemp("cache") / "thresholds.json"
    old = os.environ.get("FOCKFILTER_CACHE")
    os.environ["FOCKFILTER_CACHE"] = str(path)
    yield path
    if old is None:
        os.environ.pop("FOCKFILTER_CACHE", None)
    else:
        os.environ["FOCKFILTER_CACHE"] = old


@pytest.fixture(scope="session")
def t10():
    from fockfilter.qng import qng_threshold

    return qng_threshold(10)


@pytest.fixture(scope="session")
def curve10():
    from fockfilter.qng import rqng_curve

    return rqng_curve(10)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_runtest_logreport(report):
    num = getattr(report, "criterion", None)
    if num is None:
        return
    ok = _CRITERIA.get(num, (True, ""))[0]
    if report.when == "call" or report.failed:
        _CRITERIA[num] = (ok and report.passed, report.criterion_title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = m.args[0]
        rep.criterion_title = m.args[1]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        ok, title = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}")
