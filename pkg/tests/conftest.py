import numpy as np
import pytest

from svbench.circuit import Circuit, Gate

_ACCEPTANCE: dict[int, list[str]] = {}


def random_native_circuit(n, d, rng, p_cx=0.4, labels=None, edges=None):
    """Random rz/sx/cx circuit with every layer fully packed.

    When ``edges`` is given, cx gates are restricted to those pairs.
    """
    qs = list(labels) if labels else [f"q{i}" for i in range(n)]
    pairs = [tuple(e) for e in edges] if edges is not None else None
    layers = []
    for _ in range(d):
        free = list(qs)
        rng.shuffle(free)
        layer = []
        while free:
            q = free.pop()
            partners = [p for p in free if pairs is None or (q, p) in pairs or (p, q) in pairs]
            if partners and rng.random() < p_cx:
                p = partners[int(rng.integers(len(partners)))]
                free.remove(p)
                layer.append(Gate("cx", [q, p]))
            elif rng.random() < 0.5:
                layer.append(Gate("rz", [q], [float(rng.uniform(-np.pi, np.pi))]))
            else:
                layer.append(Gate("sx", [q]))
        layers.append(layer)
    return Circuit(qs, layers)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    n = getattr(report, "_acceptance", None)
    if n is not None:
        _ACCEPTANCE.setdefault(n, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        rep._acceptance = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        outcomes = _ACCEPTANCE[n]
        failed = sum(o != "passed" for o in outcomes)
        status = "PASS" if failed == 0 else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status} ({len(outcomes) - failed}/{len(outcomes)} checks)")
