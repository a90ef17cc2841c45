import math

import numpy as np
import pytest

from bellprobe.dynamics import SingleQubitHamiltonian


@pytest.fixture
def rng():
    return np.random.default_rng(20241015)


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_single_qubit(rng, jt_low=0.01, jt_high=math.pi / 2 - 0.01):
    """Random (H, t) with |J| t drawn uniformly inside the sign-recovery window."""
    n = random_unit(rng)
    mag = rng.uniform(0.2, 3.0)
    t = rng.uniform(jt_low, jt_high) / mag
    return SingleQubitHamiltonian(tuple(mag * n)), t


@pytest.fixture
def report(request):
    """Record one acceptance line: printed immediately and repeated in the terminal summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def _report(name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        print(line)
        lines.append(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
