import re

import pytest

ACCEPTANCE_TITLES = {
    1: "closed-form consistency",
    2: "mean formulas",
    3: "exact variance",
    4: "kernel identities",
    5: "kernel second-moment oracle",
    6: "CLT normality",
    7: "multivariate structure",
    8: "planar marked CLT and random normalisation",
    9: "interval coverage and test",
    10: "Voronoi vertex CLT and interval",
    11: "determinism",
}

_results: dict[int, list[tuple[str, str]]] = {}
_AC_RE = re.compile(r"test_ac(\d+)_")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criterion check")


def pytest_runtest_logreport(report):
    m = _AC_RE.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _results.setdefault(int(m.group(1)), []).append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for ac in sorted(_results):
        parts = _results[ac]
        ok = all(outcome == "passed" for _, outcome in parts)
        detail = ", ".join(f"{name}={outcome}" for name, outcome in parts)
        tr.write_line(f"AC{ac:<2} {'PASS' if ok else 'FAIL'}  {ACCEPTANCE_TITLES.get(ac, '')}  [{detail}]")


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(12345)
