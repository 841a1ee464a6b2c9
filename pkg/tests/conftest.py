import itertools
from functools import reduce

import numpy as np
import pytest

S2 = 1.0 / np.sqrt(2.0)

_KETS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([S2, S2], dtype=complex),
    "-": np.array([S2, -S2], dtype=complex),
}


def brute_born(amps, wires, labels=("0", "1")):
    """Born-rule oracle by enumerating full product-basis vectors.

    Every wire gets a basis vector; measured wires use ``labels``, the rest
    are summed over the computational basis. No reshapes, no kernels.
    """
    amps = np.asarray(amps, dtype=complex)
    n = amps.size.bit_length() - 1
    out = {}
    for full in itertools.product(*[labels if w in wires else ("0", "1") for w in range(n)]):
        vec = reduce(np.kron, [_KETS[x] for x in full])
        p = abs(np.vdot(vec, amps)) ** 2
        key = tuple(full[w] for w in wires)
        out[key] = out.get(key, 0.0) + p
    return {k: v for k, v in out.items() if v > 1e-15}


def assert_dist(actual, expected, atol=1e-12):
    keys = set(actual) | set(expected)
    for k in keys:
        assert abs(actual.get(k, 0.0) - expected.get(k, 0.0)) < atol, (k, dict(actual), expected)


_ACCEPTANCE = []


def pytest_runtest_makereport(item, call):
    if call.when == "call" and item.module.__name__.endswith("test_acceptance"):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _ACCEPTANCE.append((doc, call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for doc, ok in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {doc}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
