import sys
from collections import OrderedDict
from pathlib import Path

import pytest

from twistedhall.groups import cayley_ball, realize
from twistedhall.signatures import Signature

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = OrderedDict([
    ("1", "exact invariants"),
    ("2", "trace-lattice minimal element vs brute force"),
    ("3", "realizations, cone orders, collision audit to R = 6"),
    ("4", "multiplier and area cocycle identities"),
    ("5", "square-lattice Bloch/TKNN oracle"),
    ("6a", "comparison |trK - trc| <= 5% |trc| for g = 2"),
    ("6b", "coboundary defect residual < 1e-6 (g = 2), > 0.05 (2,3,7)"),
    ("7a", "|sigma - k phi| non-increasing over three radii (g = 2)"),
    ("7b", "Im sigma < 1e-9 and exact plateau constancy"),
    ("8", "twisted algebra identities"),
])

_outcomes: dict[str, list[tuple[str, bool]]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    ids = getattr(report, "acceptance_ids", ())
    for cid in ids:
        _outcomes.setdefault(cid, []).append((report.nodeid, report.passed))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    outcome.get_result().acceptance_ids = marker.args if marker else ()


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid, text in CRITERIA.items():
        runs = _outcomes.get(cid)
        if not runs:
            tr.write_line(f"criterion {cid:<3} NOT RUN  {text}")
            continue
        ok = all(p for _, p in runs)
        tr.write_line(f"criterion {cid:<3} {'PASS' if ok else 'FAIL'}     {text}")
        for nodeid, passed in runs:
            if not passed:
                tr.write_line(f"    failed: {nodeid}")


# ---- shared, expensive objects

_cache: dict = {}


def _get(key, build):
    if key not in _cache:
        _cache[key] = build()
    return _cache[key]


def realization(text: str, seed: int = 0):
    return _get(("real", text, seed), lambda: realize(Signature.parse(text), seed))


def ball(text: str, R: int, seed: int = 0):
    return _get(("ball", text, R, seed), lambda: cayley_ball(realization(text, seed), R))


@pytest.fixture(scope="session")
def get_ball():
    return ball


@pytest.fixture(scope="session")
def get_realization():
    return realization
