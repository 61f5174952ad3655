"""Curve builders: Frenet-system integration and the closed-form example curves."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import exprdsl
from .curve import Curve, FrenetApparatus, frenet, orthonormality_defect
from .manifold import CoordinateError, FrameManifold, builtin_e2, builtin_rkmn
from .numerics import DEFAULT_STEP, rk4_integrate, uniform_grid

FRAME0_TOL = 1e-12
DRIFT_TOL = 1e-6


class HypothesisViolation(ValueError):
    pass


class FrameDriftError(RuntimeError):
    def __init__(self, drift: float, s: float):
        super().__init__(
            f"frame orthonormality drifted by {drift:.3g} (first beyond {DRIFT_TOL:g} "
            f"at s={s:.6g}); reduce the step or check the connection table")
        self.drift = drift
        self.s = s


@dataclass
class FrenetInitialData:
    manifold: FrameManifold
    frame0: np.ndarray                    # (r, m): T0, v2_0, ...
    curvatures: Sequence                  # k_1 .. k_{r-1}: expressions in s
    span: tuple = (0.0, 1.0)
    step: float = DEFAULT_STEP
    p0: Sequence[float] | None = None

    def __post_init__(self):
        self.frame0 = np.atleast_2d(np.asarray(self.frame0, dtype=float))
        r, m = self.frame0.shape
        if m != self.manifold.dim:
            raise ValueError(f"frame vectors must have {self.manifold.dim} components")
        if len(self.curvatures) != r - 1:
            raise ValueError(f"{r} frame vectors need {r - 1} curvature functions")
        defect = np.max(np.abs(self.frame0 @ self.frame0.T - np.eye(r)))
        if defect > FRAME0_TOL:
            raise ValueError(f"initial frame is not orthonormal (defect {defect:.3g})")
        self.curvatures = [exprdsl.parse(k, ["s"]) if isinstance(k, str) else k
                           for k in self.curvatures]
        if self.p0 is None and not self.manifold.homogeneous:
            raise CoordinateError("a starting point is required on a non-homogeneous manifold")


def integrate_frenet_curve(d: FrenetInitialData) -> tuple[Curve, FrenetApparatus]:
    """Integrate coordinates and Frenet frame jointly with RK4.

    Frame components obey
    (v_a^k)' = [-k_{a-1} v_{a-1} + k_a v_{a+1}]^k - sum_ij T^i v_a^j omega[i, j, k]
    and, with a chart, dx/ds = F(x) T.
    """
    M = d.manifold
    r, m = d.frame0.shape
    use_coords = d.p0 is not None and M.frame is not None
    n = len(M.coords) if use_coords else 0
    kfns = [exprdsl.compile_expr(k, ["s"]) for k in d.curvatures]
    omega_const = M.omega_at() if M.omega.is_constant else None

    def rhs(s, y):
        x = y[:n]
        V = y[n:].reshape(r, m)
        omega = omega_const if omega_const is not None else M.omega_at(tuple(x))
        k = np.array([0.0] + [f(s) for f in kfns] + [0.0])
        frenet_term = np.zeros_like(V)
        if r > 1:
            frenet_term[1:] -= k[1:r, None] * V[:-1]
            frenet_term[:-1] += k[1:r, None] * V[1:]
        dV = frenet_term - np.einsum("i,aj,ijk->ak", V[0], V, omega)
        if n:
            dx = M.frame.evaluate(tuple(x)) @ V[0]
            return np.concatenate([dx, dV.ravel()])
        return dV.ravel()

    s = uniform_grid(d.span[0], d.span[1], d.step)
    for a, f in enumerate(kfns, start=1):
        k = np.broadcast_to(np.asarray(f(s), dtype=float), s.shape)
        if np.any(k <= 0):
            raise HypothesisViolation(
                f"prescribed k{a} must be positive on the span (min {float(np.min(k)):.3g})")

    y0 = np.concatenate([np.asarray(d.p0, dtype=float) if n else np.zeros(0), d.frame0.ravel()])
    traj = rk4_integrate(rhs, y0, d.span, d.step)
    frames = traj.values[:, n:].reshape(-1, r, m)
    drift = orthonormality_defect(frames)
    if np.max(drift) > DRIFT_TOL:
        first = int(np.argmax(drift > DRIFT_TOL))
        raise FrameDriftError(float(np.max(drift)), float(traj.grid[first]))
    curve = Curve(M, s, frames[:, 0], traj.values[:, :n] if n else None)
    ks = tuple(np.broadcast_to(np.asarray(f(s), dtype=float), s.shape).copy() for f in kfns)
    return curve, FrenetApparatus(s, r, ks, frames, M.xi_index)


# --- closed-form reference curves ---------------------------------------------

def build_example_1(span=(0.0, 1.0), step: float = DEFAULT_STEP) -> Curve:
    """gamma(s) = (ln 2, 0, s/sqrt 2) on the R^3 manifold, T = (-X + phi X)/sqrt 2."""
    M = builtin_rkmn()
    s = uniform_grid(span[0], span[1], step)
    c = math.sqrt(2) / 2
    coords = np.column_stack([np.full_like(s, math.log(2)), np.zeros_like(s), c * s])
    T = np.tile([0.0, -c, c], (len(s), 1))
    return Curve(M, s, T, coords)


def _check_theta(theta: float):
    if not math.sin(theta) * math.cos(theta) < 0:
        raise HypothesisViolation(f"need sin(theta) cos(theta) < 0, got theta={theta!r}")


def _e2_constant_curve(c2, T, span, step) -> Curve:
    M = builtin_e2(c2)
    s = uniform_grid(span[0], span[1], step)
    return Curve(M, s, np.tile(T, (len(s), 1)))


def build_e2_circle(c2: float, theta: float, span=(0.0, 1.0), step: float = DEFAULT_STEP) -> Curve:
    """Legendre curve T = -cos(theta) X - sin(theta) phi X on E(2)."""
    _check_theta(theta)
    return _e2_constant_curve(c2, [-math.cos(theta), -math.sin(theta), 0.0], span, step)


def build_e2_helix(c2: float, theta: float, span=(0.0, 1.0), step: float = DEFAULT_STEP) -> Curve:
    """Legendre curve T = cos(theta) X + sin(theta) phi X on E(2)."""
    _check_theta(theta)
    return _e2_constant_curve(c2, [math.cos(theta), math.sin(theta), 0.0], span, step)


def e2_helix_binormal(theta: float) -> np.ndarray:
    """T x xi = sin(theta) e1 - cos(theta) e2 for the helix tangent."""
    return np.array([math.sin(theta), -math.cos(theta), 0.0])


def e2_curvatures(c2: float, theta: float) -> tuple[float, float]:
    """Closed-form (k1, signed k2) of the E(2) helix.

    The Frenet k2 is the absolute value; a negative value flips v3.
    """
    k1 = -math.cos(theta) * math.sin(theta) * c2
    k2 = 0.5 * (math.cos(theta) ** 2 * (2 - c2) + math.sin(theta) ** 2 * (c2 + 2))
    return k1, k2


# --- sweeps ----------------------------------------------------------------

FAMILIES = {"circle": build_e2_circle, "helix": build_e2_helix}


@dataclass
class SweepRow:
    family: str
    c2: float
    theta: float
    kind: str
    verdict: str
    lambda_min: float = math.nan
    lambda_max: float = math.nan
    max_residual: float = math.nan
    error: str = ""

    def as_row(self) -> list:
        fmt = lambda v: format(v, ".17g")
        return [self.family, fmt(self.c2), fmt(self.theta), self.kind, self.verdict,
                fmt(self.lambda_min), fmt(self.lambda_max), fmt(self.max_residual)]


SWEEP_HEADER = ["family", "c2", "theta", "kind", "verdict", "lambda_min", "lambda_max", "max_residual"]


def sweep(family: str, c2_grid: Iterable[float], theta_grid: Iterable[float], kinds,
          span=(0.0, 1.0), step: float = DEFAULT_STEP, tol: float | None = None,
          lambda_floor: float | None = None) -> list[SweepRow]:
    """Classify every (c2, theta) member of an E(2) family for each kind.

    Rows come out c2-major, then theta, then kind. Failures to build or
    classify a member are recorded in the row (verdict ``error``).
    """
    from .classifier import ConditionKind, classify

    builder = FAMILIES[family]
    kinds = [ConditionKind.parse(k) for k in kinds]
    c2_grid, theta_grid = list(c2_grid), list(theta_grid)
    if not c2_grid or not theta_grid:
        raise ValueError("sweep grids must be non-empty")
    options = {}
    if tol is not None:
        options["tol"] = tol
    if lambda_floor is not None:
        options["lambda_floor"] = lambda_floor
    rows = []
    for c2 in c2_grid:
        for theta in theta_grid:
            if not kinds:
                continue
            try:
                c = builder(c2, theta, span, step)
                f = frenet(c)
            except Exception as err:  # recorded per cell
                rows.extend(SweepRow(family, c2, theta, k.value, "error", error=str(err)) for k in kinds)
                continue
            for k in kinds:
                try:
                    rep = classify(c, k, apparatus=f, **options)
                    rows.append(SweepRow(family, c2, theta, k.value, rep.verdict,
                                         float(np.min(rep.lambda_.values)), float(np.max(rep.lambda_.values)),
                                         rep.max_residual))
                except Exception as err:
                    rows.append(SweepRow(family, c2, theta, k.value, "error", error=str(err)))
    return rows


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for row in rows:
        writer.writerow(row.as_row())
    return buf.getvalue()
