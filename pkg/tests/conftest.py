import numpy as np
import pytest

from spgpnav import _fallback, kernels

try:
    from spgpnav import _core
except ImportError:
    _core = None

BACKENDS = {"python": _fallback}
if _core is not None:
    BACKENDS["cython"] = _core


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    mod = BACKENDS[request.param]
    monkeypatch.setattr(kernels, "assemble", mod.assemble)
    monkeypatch.setattr(kernels, "solve_qp", mod.solve_qp)
    monkeypatch.setattr(kernels, "hausdorff", mod.hausdorff)
    return mod


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line; the lines are printed after the run."""
    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
