import math

import numpy as np
import pytest

from contactframe.classifier import TheoremData
from contactframe.constructor import build_e2_circle, build_e2_helix, build_example_1
from contactframe.curve import FrenetApparatus

THETA = 3 * math.pi / 4
# cos^2(theta) = 2/3 with c2 = 6 makes the E(2) circle genuinely order 2
CIRCLE_C2 = 6.0
CIRCLE_THETA = math.pi - math.acos(math.sqrt(2.0 / 3.0))


@pytest.fixture(scope="session")
def ex1():
    return build_example_1((0.0, 1.0), 1e-3)


@pytest.fixture(scope="session")
def e2_circle():
    return build_e2_circle(2.0, THETA, (0.0, 10.0), 1e-3)


@pytest.fixture(scope="session")
def e2_helix():
    return build_e2_helix(2.0, THETA, (0.0, 10.0), 1e-3)


@pytest.fixture(scope="session")
def true_circle():
    return build_e2_circle(CIRCLE_C2, CIRCLE_THETA, (0.0, 2.0), 1e-3)


def _householder(y):
    """Symmetric orthogonal matrix whose first column is the unit vector y."""
    y = np.asarray(y, dtype=float)
    e = np.zeros_like(y)
    e[0] = 1.0
    w = e - y
    n = np.linalg.norm(w)
    if n < 1e-15:
        return np.eye(len(y))
    w = w / n
    return np.eye(len(y)) - 2.0 * np.outer(w, w)


def synthetic_data(s, curvatures, etas, g_t_hT=None, g_hT_hT=None):
    """Frenet data with xi = e0, T = e1 and eta(v_a) prescribed per sample.

    ``curvatures`` is k_1..k_{r-1}; ``etas`` has shape (N, r-1) holding
    eta(v_2)..eta(v_r), each row of unit norm. v_2..v_r are built inside
    span{e0, e2, ..., e_{r-1}} by a Householder reflection sending the first
    basis vector to the prescribed eta row.
    """
    s = np.asarray(s, dtype=float)
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    r = len(curvatures) + 1
    m = max(r, 3)
    n = len(s)
    frames = np.zeros((n, r, m))
    frames[:, 0, 1] = 1.0
    others = [0] + list(range(2, r))     # basis of the xi-containing block
    for i in range(n):
        P = _householder(etas[i])
        for a in range(r - 1):
            frames[i, a + 1, others] = P[a]
    ks = [np.broadcast_to(np.asarray(k, dtype=float), s.shape).copy() for k in curvatures]
    f = FrenetApparatus(s, r, tuple(ks), frames, 0)
    zeros = np.zeros(n)
    G = ks[0] * f.eta_of(2)
    return TheoremData(f, G,
                       zeros if g_t_hT is None else np.broadcast_to(g_t_hT, s.shape).copy(),
                       zeros if g_hT_hT is None else np.broadcast_to(g_hT_hT, s.shape).copy(),
                       zeros)


def unit_rows(*cols):
    arr = np.column_stack([np.broadcast_to(np.asarray(c, dtype=float), np.shape(cols[0]) or (1,))
                           for c in cols])
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


# --- acceptance summary ---------------------------------------------------

ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
