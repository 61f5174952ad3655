"""Small numerical kernel: fixed-step RK4, finite differences, Gram-Schmidt.

Vectors are plain 1-d numpy float arrays. Sampled quantities live on a
uniform grid and are carried around as :class:`SampledFunction`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_STEP = 1e-3
DEFAULT_RANK_TOL = 1e-8


class NumericsError(ValueError):
    pass


class IntegrationDiverged(NumericsError):
    def __init__(self, s: float):
        super().__init__(f"integration diverged: non-finite state at s={s!r}")
        self.s = s


class SampleSizeError(NumericsError):
    pass


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values on a uniform grid. ``values[i]`` is a scalar or a vector."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or len(grid) < 1:
            raise NumericsError("grid must be a non-empty 1-d array")
        if len(values) != len(grid):
            raise NumericsError(
                f"values length {len(values)} != grid length {len(grid)}")
        if len(grid) > 1:
            d = np.diff(grid)
            h = (grid[-1] - grid[0]) / (len(grid) - 1)
            if h <= 0 or np.max(np.abs(d - h)) > 1e-9 * max(1.0, abs(h)):
                raise NumericsError("grid must be strictly increasing with constant step")
        if not np.all(np.isfinite(values)):
            raise NumericsError("non-finite sample values")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def step(self) -> float:
        return float((self.grid[-1] - self.grid[0]) / (len(self.grid) - 1))

    def __len__(self):
        return len(self.grid)


def uniform_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Grid from ``start`` to ``stop`` inclusive; ``step`` is adjusted so the
    span divides evenly."""
    if step <= 0:
        raise NumericsError("step must be positive")
    if not stop > start:
        raise NumericsError("span must satisfy start < stop")
    n = max(1, int(round((stop - start) / step)))
    return start + (stop - start) * np.arange(n + 1) / n


def rk4_integrate(rhs: Callable[[float, np.ndarray], np.ndarray],
                  state0, s_span: tuple[float, float],
                  step: float = DEFAULT_STEP) -> SampledFunction:
    """Classical fixed-step Runge-Kutta integration of ``y' = rhs(s, y)``.

    The trajectory is returned at every grid node, both endpoints included.
    Raises :class:`IntegrationDiverged` as soon as a non-finite state shows up.
    """
    grid = uniform_grid(s_span[0], s_span[1], step)
    h = grid[1] - grid[0]
    y = np.array(state0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise IntegrationDiverged(float(grid[0]))
    out = np.empty((len(grid),) + y.shape)
    out[0] = y
    for n in range(len(grid) - 1):
        s = grid[n]
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(s, y)
            k2 = rhs(s + h / 2, y + (h / 2) * k1)
            k3 = rhs(s + h / 2, y + (h / 2) * k2)
            k4 = rhs(s + h, y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationDiverged(float(grid[n + 1]))
        out[n + 1] = y
    return SampledFunction(grid, out)


def gram_schmidt(vectors: Sequence, inner: Callable | None = None,
                 tol: float = DEFAULT_RANK_TOL):
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Returns ``(basis, coeffs, rank)``. ``coeffs[k, j]`` is the coefficient of
    ``basis[j]`` in input vector ``k`` (rows past ``rank`` are not filled).
    Processing stops at the first vector whose residual norm drops below
    ``tol`` times the norm of the first vector.
    """
    if inner is None:
        inner = lambda u, v: float(np.dot(u, v))
    vecs = [np.asarray(v, dtype=float) for v in vectors]
    if not vecs:
        return [], np.zeros((0, 0)), 0
    dim = vecs[0].shape
    if any(v.shape != dim for v in vecs):
        raise NumericsError("all vectors must have the same dimension")

    scale = np.sqrt(max(inner(vecs[0], vecs[0]), 0.0))
    threshold = tol * scale if scale > 0 else tol
    basis: list[np.ndarray] = []
    coeffs = np.zeros((len(vecs), len(vecs)))
    for k, v in enumerate(vecs):
        w = v.copy()
        for _ in range(2):
            for j, u in enumerate(basis):
                c = inner(u, w)
                coeffs[k, j] += c
                w = w - c * u
        norm = np.sqrt(max(inner(w, w), 0.0))
        if norm < threshold:
            break
        coeffs[k, len(basis)] = norm
        basis.append(w / norm)
    return basis, coeffs[:, :len(basis)], len(basis)


# Finite-difference stencils as integer numerators over 12 * h**order.
# Keys: (order, position); positions 0/1 are the first two nodes (forward
# stencils), "c" is the five-point interior stencil.
_STENCILS = {
    (1, "c"): ((-2, -1, 0, 1, 2), (1, -8, 0, 8, -1)),
    (1, 0): ((0, 1, 2, 3, 4), (-25, 48, -36, 16, -3)),
    (1, 1): ((-1, 0, 1, 2, 3), (-3, -10, 18, -6, 1)),
    (2, "c"): ((-2, -1, 0, 1, 2), (-1, 16, -30, 16, -1)),
    (2, 0): ((0, 1, 2, 3, 4, 5), (45, -154, 214, -156, 61, -10)),
    (2, 1): ((-1, 0, 1, 2, 3, 4), (10, -15, -4, 14, -6, 1)),
}


def _apply(y, centre, offsets, weights, mirror=False):
    # Differences against the centre sample: constants map to exactly zero.
    base = y[centre]
    acc = 0.0
    for o, w in zip(offsets, weights):
        if w and o:
            idx = centre - o if mirror else centre + o
            acc = acc + w * (y[idx] - base)
    return acc


def central_diff(f: SampledFunction, order: int = 1) -> SampledFunction:
    """Fourth-order finite-difference derivative of a sampled function.

    Five-point central stencils in the interior; one-sided fourth-order
    stencils at the first and last two nodes (mirrored, with the sign of odd
    derivatives flipped).
    """
    if order not in (1, 2):
        raise NumericsError("order must be 1 or 2")
    y = f.values
    n = len(y)
    need = 5 if order == 1 else 6
    if n < need:
        raise SampleSizeError(f"order-{order} differences need at least {need} samples, got {n}")
    h = f.step
    scale = h ** order
    out = np.empty_like(y)

    offsets, w = _STENCILS[(order, "c")]
    centre = y[2:n - 2]
    acc = np.zeros_like(centre)
    for o, c in zip(offsets, w):
        if c and o:
            acc = acc + c * (y[2 + o:n - 2 + o] - centre)
    out[2:n - 2] = acc / (12.0 * scale)

    sign = -1.0 if order == 1 else 1.0
    for node in (0, 1):
        offsets, w = _STENCILS[(order, node)]
        out[node] = _apply(y, node, offsets, w) / (12.0 * scale)
        out[n - 1 - node] = sign * _apply(y, n - 1 - node, offsets, w, mirror=True) / (12.0 * scale)
    return SampledFunction(f.grid, out)


def diff_samples(values: np.ndarray, step: float, order: int = 1) -> np.ndarray:
    """Array convenience wrapper around :func:`central_diff`."""
    values = np.asarray(values, dtype=float)
    grid = step * np.arange(len(values))
    return central_diff(SampledFunction(grid, values), order).values
