import math
import sys

import numpy as np
import pytest

from qgraph import VertexCondition, build_graph

NK = VertexCondition.neumann_kirchhoff()
DIR = VertexCondition.dirichlet()
SQRT2 = math.sqrt(2.0)


def lasso(ell=1.0):
    g = build_graph(["v1"], [("e1", ["v1"], "lead"), ("e2", ["v1", "v1"], ell)])
    return g, {"v1": NK}


def star3(l2=1.0, l3=SQRT2):
    g = build_graph(["v1", "v2", "v3"], [("e1", ["v1"], "lead"), ("e2", ["v1", "v2"], l2),
                                         ("e3", ["v1", "v3"], l3)])
    return g, {"v1": NK, "v2": DIR, "v3": DIR}


def compact_star3(l2=1.0, l3=SQRT2, l4=0.7):
    g = build_graph(["v1", "v2", "v3", "v4"], [("e2", ["v1", "v2"], l2), ("e3", ["v1", "v3"], l3),
                                               ("e4", ["v1", "v4"], l4)])
    return g, {"v1": NK, "v2": DIR, "v3": DIR, "v4": DIR}


def interval(ell=math.pi):
    g = build_graph(["v1", "v2"], [("e1", ["v1", "v2"], ell)])
    return g, {"v1": DIR, "v2": DIR}


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_general(d, rng, scale=1.0):
    """Random self-adjoint (A, B): A = X(I - V), B = iX(I + V)/scale."""
    V = random_unitary(d, rng)
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) + 3 * np.eye(d)
    return VertexCondition.general(X @ (np.eye(d) - V), 1j * X @ (np.eye(d) + V) / scale)


def general_graph(rng, leads=True):
    """Two vertices, three bonds (one a loop), optional lead; General conditions."""
    edges = [("b1", ["u", "w"], 1.1), ("b2", ["u", "w"], 0.63), ("b3", ["w", "w"], 0.9)]
    if leads:
        edges.insert(1, ("l1", ["u"], "lead"))
    g = build_graph(["u", "w"], edges)
    return g, {v: random_general(g.degrees[v], rng) for v in g.vertices}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
