import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, n, floor=0.1):
    A = rng.standard_normal((n, n))
    return A @ A.T + floor * np.eye(n)


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "acceptance" in rep.keywords:
                props = dict(rep.user_properties)
                rows.append((rep.nodeid, "PASS" if rep.passed else "FAIL", props.get("criterion", rep.nodeid),
                             props.get("detail", "")))
    if rows:
        terminalreporter.section("acceptance criteria")
        for _, verdict, name, detail in sorted(rows):
            terminalreporter.write_line(f"{verdict}  {name}: {detail}")
