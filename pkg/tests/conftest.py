import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sasakipmc import models as md

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True)
settings.load_profile("default")

MODEL_SPECS = [
    ("standard_sphere", {}),
    ("deformed_sphere", {"a": 0.5}),
    ("deformed_sphere", {"a": 2.0}),
    ("heisenberg", {}),
    ("ball_times_line", {"k": -4.0}),
]


def model_id(spec):
    kind, kw = spec
    return kind + "".join(f"-{k}{v:g}" for k, v in kw.items())


@pytest.fixture(params=MODEL_SPECS, ids=model_id)
def model_n1(request):
    kind, kw = request.param
    return md.make_model(kind, 1, **kw)


@pytest.fixture(params=MODEL_SPECS, ids=model_id)
def model_n2(request):
    kind, kw = request.param
    return md.make_model(kind, 2, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance summary: one line per criterion ---------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    num, title = mark.args
    ok = rep.passed and not rep.skipped
    prev = _CRITERIA.get(num, (title, True))
    _CRITERIA[num] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, ok = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {title}")
