import functools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from koethelab import build_deadend, demo_matrix, koethe_from_config, verify_conditions
from koethelab.basis import extract_basis, range_basis
from koethelab.operator import OperatorMatrix, operator_from_config, rescale_to_contraction

# (matrix conf, operator conf) pairs used across modules.  All sit at desk
# scale: K <= 6, N <= 64.
CASES = {
    "demo-projection": (
        {"family": "geometric", "base": 4, "exponents": [0, 1, 3, 7], "N": 4},
        {"family": "coordinate-projection", "coords": [1, 2]},
    ),
    "g6-n16-random": (
        {"family": "geometric", "base": 2, "exponents": [0, 1, 3, 7, 15, 31], "N": 16},
        {"family": "random-nonneg", "density": 0.3, "seed": 1},
    ),
    "g4-n64-random": (
        {"family": "geometric", "base": 2, "exponents": [0, 1, 3, 7], "N": 64},
        {"family": "random-nonneg", "density": 0.3, "seed": 2},
    ),
    "g5-n32-random": (
        {"family": "geometric", "base": 2, "exponents": [0, 1, 3, 7, 15], "N": 32},
        {"family": "random-nonneg", "density": 0.5, "seed": 3},
    ),
    "g5-n12-backshift": (
        {"family": "geometric", "base": 2, "exponents": [0, 1, 3, 7, 15], "N": 12},
        {"grid": np.eye(12, k=-1).ravel().tolist()},
    ),
}


@functools.lru_cache(maxsize=None)
def build_case(name):
    mcfg, ocfg = CASES[name]
    m = verify_conditions(koethe_from_config(mcfg)).matrix
    Tp, c = rescale_to_contraction(operator_from_config(ocfg, m))
    dd = build_deadend(m)
    e = extract_basis(range_basis(Tp), dd)
    return m, Tp, dd, e


@pytest.fixture(scope="session")
def demo():
    return demo_matrix()


@pytest.fixture(scope="session")
def demo_projection(demo):
    return OperatorMatrix(np.diag([1.0, 1.0, 0.0, 0.0]), demo)


@pytest.fixture(scope="session", params=sorted(CASES))
def case(request):
    return build_case(request.param)


@pytest.fixture(scope="session")
def demo_case():
    return build_case("demo-projection")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
