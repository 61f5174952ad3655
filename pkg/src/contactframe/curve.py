"""Unit-speed sampled curves, covariant differentiation and Frenet frames.

All vectors along a curve are stored as ``(N, m)`` arrays of frame
components, one row per arc-length sample.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .manifold import (BUILTINS, CoordinateError, FrameManifold, get_builtin,
                       structure_along)
from .numerics import DEFAULT_RANK_TOL, SampledFunction, diff_samples

UNIT_SPEED_TOL = 1e-8
CHART_TOL = 1e-6
LEGENDRE_TOL = 1e-6


class CurveError(ValueError):
    pass


class GridMismatchError(CurveError):
    pass


class AmbiguousOrderError(CurveError):
    def __init__(self, index: int, s_min: float, s_max: float, tol: float):
        super().__init__(
            f"curvature k{index} crosses the rank tolerance {tol:.3g} on "
            f"s in [{s_min:.6g}, {s_max:.6g}]; osculating order is not constant")
        self.index = index
        self.interval = (s_min, s_max)


@dataclass(frozen=True, eq=False)
class Curve:
    manifold: FrameManifold
    s: np.ndarray
    tangent: np.ndarray
    coords: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        T = np.atleast_2d(np.asarray(self.tangent, dtype=float))
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "tangent", T)
        M = self.manifold
        if T.shape != (len(s), M.dim):
            raise CurveError(f"tangent must have shape ({len(s)}, {M.dim}), got {T.shape}")
        SampledFunction(s, T)  # grid checks
        if self.coords is not None:
            x = np.atleast_2d(np.asarray(self.coords, dtype=float))
            if x.shape != (len(s), len(M.coords)) or not M.coords:
                raise CurveError(f"coords must have shape ({len(s)}, {len(M.coords)})")
            object.__setattr__(self, "coords", x)
        elif not M.homogeneous:
            raise CoordinateError(
                f"manifold {M.name!r} is not homogeneous: curves need coordinates")
        speed_dev = np.max(np.abs(np.linalg.norm(T, axis=1) - 1.0))
        if speed_dev >= UNIT_SPEED_TOL:
            raise CurveError(f"curve is not unit speed (max | |T| - 1 | = {speed_dev:.3g})")
        if self.coords is not None and len(s) >= 5:
            dev = self.chart_deviation()
            if dev >= CHART_TOL:
                raise CurveError(
                    f"coordinates disagree with the tangent (max deviation {dev:.3g})")

    def __len__(self):
        return len(self.s)

    @property
    def step(self) -> float:
        return float((self.s[-1] - self.s[0]) / (len(self.s) - 1))

    @property
    def interior(self) -> slice:
        """Samples away from the one-sided difference stencils."""
        return slice(2, len(self.s) - 2)

    @cached_property
    def structure(self):
        """(omega, h) along the curve, each with a leading sample axis."""
        return structure_along(self.manifold, self.coords, len(self.s))

    def chart_deviation(self) -> float:
        x = self.coords
        F = self.manifold.frame.evaluate(tuple(x[:, i] for i in range(x.shape[1])))
        if F.ndim == 2:
            F = np.broadcast_to(F, (len(x),) + F.shape)
        dx = diff_samples(x, self.step)
        return float(np.max(np.abs(dx - np.einsum("naj,nj->na", F, self.tangent))))

    def diff(self, V: np.ndarray, order: int = 1) -> np.ndarray:
        return diff_samples(V, self.step, order)


@dataclass(frozen=True, eq=False)
class FrenetApparatus:
    """Frenet data sampled along a curve.

    ``frames[n, a]`` is v_{a+1} at sample n (so ``frames[:, 0]`` is T) and
    ``curvatures[a]`` is k_{a+1}.
    """

    s: np.ndarray
    order: int
    curvatures: tuple
    frames: np.ndarray
    xi_index: int
    eta: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float))
        object.__setattr__(self, "frames", np.asarray(self.frames, dtype=float))
        object.__setattr__(self, "curvatures", tuple(np.asarray(k, dtype=float) for k in self.curvatures))
        if self.frames.shape[1] != self.order or len(self.curvatures) != self.order - 1:
            raise CurveError("frames/curvatures do not match the osculating order")
        object.__setattr__(self, "eta", self.frames[:, :, self.xi_index].copy())

    @property
    def step(self) -> float:
        return float((self.s[-1] - self.s[0]) / (len(self.s) - 1))

    @property
    def dim(self) -> int:
        return self.frames.shape[2]

    def k(self, a: int) -> np.ndarray:
        """k_a for a >= 1; zero beyond the osculating order."""
        if 1 <= a <= len(self.curvatures):
            return self.curvatures[a - 1]
        return np.zeros(len(self.s))

    def dk(self, a: int, order: int = 1) -> np.ndarray:
        if 1 <= a <= len(self.curvatures):
            return diff_samples(self.curvatures[a - 1], self.step, order)
        return np.zeros(len(self.s))

    def v(self, a: int) -> np.ndarray:
        """v_a (1-based, v_1 = T); zero vectors beyond the order."""
        if 1 <= a <= self.order:
            return self.frames[:, a - 1]
        return np.zeros((len(self.s), self.dim))

    def eta_of(self, a: int) -> np.ndarray:
        if 1 <= a <= self.order:
            return self.eta[:, a - 1]
        return np.zeros(len(self.s))


def covariant_derivative(c: Curve, V: np.ndarray) -> np.ndarray:
    """(nabla_T V)^k = dV^k/ds + sum_ij T^i V^j omega[i, j, k]."""
    V = np.asarray(V, dtype=float)
    if V.shape != c.tangent.shape:
        raise GridMismatchError(f"vector field shape {V.shape} does not match curve {c.tangent.shape}")
    omega, _ = c.structure
    return c.diff(V) + np.einsum("ni,nj,nijk->nk", c.tangent, V, omega)


def _inner(a, b):
    return np.einsum("nk,nk->n", a, b)


def frenet(c: Curve, rank_tol: float | None = None) -> FrenetApparatus:
    """Frenet frame and curvature functions of a unit-speed curve.

    At each level the covariant derivative of the last frame vector is
    stripped of its components along the earlier vectors; the norm of what
    remains is the next curvature. The order is fixed once the remainder is
    below ``rank_tol`` at every sample (default ``1e-8 * max k1``); a
    remainder that is small on part of the curve only raises
    :class:`AmbiguousOrderError`.
    """
    T = c.tangent
    speed_dev = np.max(np.abs(np.linalg.norm(T, axis=1) - 1.0))
    if speed_dev >= UNIT_SPEED_TOL:
        raise CurveError(f"frenet needs a unit-speed curve (deviation {speed_dev:.3g})")
    m = c.manifold.dim
    frames = [T]
    ks: list[np.ndarray] = []
    while len(frames) < m:
        w = covariant_derivative(c, frames[-1])
        if ks:
            w = w + ks[-1][:, None] * frames[-2]
        for _ in range(2):
            for u in frames:
                w = w - _inner(w, u)[:, None] * u
        norm = np.linalg.norm(w, axis=1)
        if rank_tol is not None:
            tol = rank_tol
        elif ks:
            tol = DEFAULT_RANK_TOL * float(np.max(ks[0]))
        else:
            tol = DEFAULT_RANK_TOL
        small = norm < tol
        if np.all(small):
            break
        if np.any(small):
            raise AmbiguousOrderError(len(ks) + 1, float(c.s[small].min()), float(c.s[small].max()), tol)
        ks.append(norm)
        frames.append(w / norm[:, None])
    return FrenetApparatus(c.s, len(frames), tuple(ks), np.stack(frames, axis=1),
                           c.manifold.xi_index)


def frenet_residuals(c: Curve, f: FrenetApparatus) -> np.ndarray:
    """Per-sample max over a of |nabla_T v_a - (-k_{a-1} v_{a-1} + k_a v_{a+1})|."""
    out = np.zeros(len(c.s))
    for a in range(1, f.order + 1):
        expected = -f.k(a - 1)[:, None] * f.v(a - 1) + f.k(a)[:, None] * f.v(a + 1)
        err = np.linalg.norm(covariant_derivative(c, f.v(a)) - expected, axis=1)
        out = np.maximum(out, err)
    return out


def orthonormality_defect(frames: np.ndarray) -> np.ndarray:
    """Per-sample max |<v_a, v_b> - delta_ab| for frames of shape (N, r, m)."""
    gram = np.einsum("nak,nbk->nab", frames, frames)
    eye = np.eye(frames.shape[1])
    return np.max(np.abs(gram - eye).reshape(len(frames), -1), axis=1)


def contact_angle(c: Curve) -> SampledFunction:
    """alpha(s) with cos(alpha) = g(T, xi)."""
    cos_alpha = np.clip(c.tangent[:, c.manifold.xi_index], -1.0, 1.0)
    return SampledFunction(c.s, np.arccos(cos_alpha))


def is_legendre(c: Curve, tol: float = LEGENDRE_TOL) -> bool:
    return bool(np.max(np.abs(c.tangent[:, c.manifold.xi_index])) < tol)


def _h_tangent(c: Curve) -> np.ndarray:
    _, h = c.structure
    return np.einsum("nkj,nj->nk", h, c.tangent)


def legendre_scalar(c: Curve) -> SampledFunction:
    """g(T, phi h T) along the curve."""
    phi_hT = _h_tangent(c) @ c.manifold.phi_matrix.T
    return SampledFunction(c.s, _inner(c.tangent, phi_hT))


def h_scalars(c: Curve) -> tuple[np.ndarray, np.ndarray]:
    """(g(T, hT), g(hT, hT)) along the curve."""
    hT = _h_tangent(c)
    return _inner(c.tangent, hT), _inner(hT, hT)


# --- CSV -------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def manifold_tag(M: FrameManifold) -> str:
    parts = [M.name] + [f"{k}={_fmt(v)}" for k, v in M.params]
    return "# manifold: " + " ".join(parts)


def curve_to_csv(c: Curve) -> str:
    M = c.manifold
    buf = io.StringIO()
    buf.write(manifold_tag(M) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    coord_cols = list(M.coords) if c.coords is not None else []
    writer.writerow(["s"] + coord_cols + [f"T{j + 1}" for j in range(M.dim)])
    for n in range(len(c.s)):
        row = [c.s[n]]
        if c.coords is not None:
            row.extend(c.coords[n])
        row.extend(c.tangent[n])
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_curve_csv(c: Curve, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(curve_to_csv(c))


def parse_manifold_tag(line: str) -> tuple[str, dict]:
    body = line.lstrip("#").strip()
    if not body.startswith("manifold:"):
        raise CurveError(f"unrecognized comment line {line!r}")
    fields = body[len("manifold:"):].split()
    if not fields:
        raise CurveError("empty manifold tag")
    params = {}
    for item in fields[1:]:
        key, _, value = item.partition("=")
        params[key] = float(value)
    return fields[0], params


def curve_from_csv(text: str, manifold: FrameManifold | None = None) -> Curve:
    """Read a curve. Without ``manifold`` the leading ``# manifold:`` tag must
    name a builtin."""
    lines = text.splitlines()
    tag = None
    while lines and lines[0].startswith("#"):
        tag = lines.pop(0)
    if manifold is None:
        if tag is None:
            raise CurveError("curve CSV has no manifold tag; pass a manifold explicitly")
        name, params = parse_manifold_tag(tag)
        if name not in BUILTINS:
            raise CurveError(f"manifold {name!r} is not a builtin; pass a manifold explicitly")
        manifold = get_builtin(name, **params)
    rows = list(csv.reader(lines))
    if not rows:
        raise CurveError("empty curve CSV")
    header = rows[0]
    m = manifold.dim
    t_cols = [f"T{j + 1}" for j in range(m)]
    with_coords = ["s"] + list(manifold.coords) + t_cols
    if header == with_coords and manifold.coords:
        has_coords = True
    elif header == ["s"] + t_cols:
        has_coords = False
    else:
        raise CurveError(f"unexpected CSV header {header}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as err:
        raise CurveError(f"bad numeric value in curve CSV: {err}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise CurveError("ragged or empty curve CSV")
    s = data[:, 0]
    if has_coords:
        n = len(manifold.coords)
        return Curve(manifold, s, data[:, 1 + n:], data[:, 1:1 + n])
    return Curve(manifold, s, data[:, 1:])


def read_curve_csv(path, manifold: FrameManifold | None = None) -> Curve:
    with open(path, newline="") as fh:
        return curve_from_csv(fh.read(), manifold)
