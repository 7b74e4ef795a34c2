import time

import pytest

from traffic5g.mixture import EmpiricalDistribution, ScenarioConfig, aggregate_totals

_ACCEPTANCE = []


class AcceptanceRecorder:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def __init__(self, criterion, title):
        self.criterion = criterion
        self.title = title
        self.checks = []

    def check(self, label, ok, detail=""):
        self.checks.append((label, bool(ok), detail))
        return bool(ok)

    @property
    def passed(self):
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def assert_all(self):
        bad = [f"{label}: {detail}" for label, ok, detail in self.checks if not ok]
        assert not bad, "; ".join(bad)


@pytest.fixture
def acceptance(request):
    marker = request.node.get_closest_marker("criterion")
    rec = AcceptanceRecorder(*marker.args)
    _ACCEPTANCE.append(rec)
    return rec


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for rec in sorted(_ACCEPTANCE, key=lambda r: str(r.criterion)):
        tr.write_line(f"[{'PASS' if rec.passed else 'FAIL'}] criterion {rec.criterion}: {rec.title}")
        for label, ok, detail in rec.checks:
            tr.write_line(f"    {'ok  ' if ok else 'FAIL'} {label}: {detail}")


@pytest.fixture(scope="session")
def default_aggregate_run():
    """Default scenario, 10^6 runs of 40 users on 4 workers: (distribution, seconds)."""
    t0 = time.perf_counter()
    totals = aggregate_totals(ScenarioConfig(), workers=4)
    dist = EmpiricalDistribution.from_samples(totals)
    return dist, time.perf_counter() - t0


@pytest.fixture(scope="session")
def default_aggregate(default_aggregate_run):
    return default_aggregate_run[0]
