"""Contact metric manifolds described by an orthonormal moving frame.

A :class:`FrameManifold` stores everything in frame components: the metric is
the identity, ``omega[i, j, k]`` is the coefficient of ``E_k`` in
``nabla_{E_i} E_j``, and ``phi``/``h`` act on component vectors by matrix
multiplication (column ``j`` is the image of ``E_j``). Entries that depend on
position are arithmetic expressions in the coordinate names.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import exprdsl

PHI_TOL = 1e-12


class ManifoldSpecError(ValueError):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class CoordinateError(ValueError):
    """A coordinate-dependent quantity was requested without coordinates."""


class ExprTable:
    """An n-d array of expressions evaluated in one shot, pointwise or batched."""

    def __init__(self, exprs, shape: tuple[int, ...], names: Sequence[str]):
        self.exprs = tuple(exprs)
        self.shape = tuple(shape)
        self.names = tuple(names)
        if len(self.exprs) != int(np.prod(self.shape)):
            raise ValueError("expression count does not match table shape")
        const = np.zeros(len(self.exprs))
        self._varying = []
        for idx, e in enumerate(self.exprs):
            if exprdsl.variables(e):
                self._varying.append((idx, exprdsl.compile_expr(e, self.names)))
            else:
                const[idx] = exprdsl.evaluate(e, {})
        self._const = const.reshape(self.shape)

    @classmethod
    def from_nested(cls, nested, shape, names):
        flat = np.empty(shape, dtype=object)
        for idx in np.ndindex(*shape):
            item = nested
            for i in idx:
                item = item[i]
            flat[idx] = item
        return cls(flat.ravel().tolist(), shape, names)

    @property
    def is_constant(self) -> bool:
        return not self._varying

    def nested(self):
        arr = np.empty(self.shape, dtype=object)
        arr.ravel()[:] = self.exprs
        return arr.tolist()

    def evaluate(self, values=()) -> np.ndarray:
        """``values`` lines up with ``names``; each entry a float or an (N,) array.

        Returns shape ``self.shape`` for scalar input, ``(N,) + self.shape``
        for array input.
        """
        values = tuple(values)
        batch = ()
        for v in values:
            if np.ndim(v) > 0:
                batch = (len(v),)
                break
        if not self._varying:
            return np.broadcast_to(self._const, batch + self.shape).copy() if batch else self._const.copy()
        if len(values) != len(self.names):
            raise CoordinateError(f"need values for {self.names}, got {len(values)}")
        out = np.empty(batch + (len(self.exprs),))
        out[...] = self._const.ravel()
        for idx, fn in self._varying:
            out[..., idx] = fn(*values)
        return out.reshape(batch + self.shape)

    def __eq__(self, other):
        return isinstance(other, ExprTable) and (self.exprs, self.shape) == (other.exprs, other.shape)

    def __hash__(self):
        return hash((self.exprs, self.shape))

    def __repr__(self):
        return f"ExprTable(shape={self.shape})"


@dataclass(frozen=True)
class FrameManifold:
    name: str
    dim: int
    coords: tuple
    frame: ExprTable | None
    omega: ExprTable
    phi: tuple
    xi_index: int
    h: ExprTable
    metadata: tuple = ()
    brackets: ExprTable | None = None
    description: str = field(default="", compare=False)
    params: tuple = field(default=(), compare=False)

    @cached_property
    def phi_matrix(self) -> np.ndarray:
        return np.array(self.phi, dtype=float)

    @cached_property
    def xi(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[self.xi_index] = 1.0
        return e

    @property
    def homogeneous(self) -> bool:
        return self.omega.is_constant and self.h.is_constant

    def _values(self, p):
        if isinstance(p, Mapping):
            return tuple(p[c] for c in self.coords)
        return tuple(p) if p is not None else ()

    def omega_at(self, p=None) -> np.ndarray:
        if self.omega.is_constant:
            return self.omega.evaluate()
        return self.omega.evaluate(self._require(p))

    def h_at(self, p=None) -> np.ndarray:
        if self.h.is_constant:
            return self.h.evaluate()
        return self.h.evaluate(self._require(p))

    def frame_at(self, p) -> np.ndarray:
        """Coordinate components of the frame: column ``j`` is ``E_j``."""
        if self.frame is None:
            raise CoordinateError(f"manifold {self.name!r} has no coordinate chart")
        return self.frame.evaluate(self._require(p))

    def _require(self, p):
        values = self._values(p)
        if len(values) != len(self.coords) or not self.coords:
            raise CoordinateError(
                f"manifold {self.name!r} needs coordinates {self.coords} here")
        return values

    def metadata_at(self, p=None) -> dict:
        env = dict(zip(self.coords, self._values(p))) if p is not None else {}
        return {k: exprdsl.evaluate(e, env) for k, e in self.metadata}


class TangentVector(NamedTuple):
    base: tuple | None
    comp: np.ndarray


# --- construction ----------------------------------------------------------

def _check_phi(phi: np.ndarray, xi_index: int, path="phi"):
    m = phi.shape[0]
    e = np.zeros(m)
    e[xi_index] = 1.0
    target = -np.eye(m) + np.outer(e, e)
    dev = np.max(np.abs(phi @ phi - target))
    if dev > PHI_TOL:
        raise ManifoldSpecError(f"phi^2 != -I + eta (x) xi (max deviation {dev:.3g})", path)
    if np.max(np.abs(phi @ e)) > PHI_TOL:
        raise ManifoldSpecError("phi xi != 0", path)
    if np.max(np.abs(phi + phi.T)) > PHI_TOL:
        raise ManifoldSpecError("phi is not skew-symmetric in the orthonormal frame", path)


def _parse_table(doc, key, shape, names, params, required=True):
    if key not in doc:
        if required:
            raise ManifoldSpecError("missing key", key)
        return None
    raw = doc[key]
    try:
        arr = np.array(raw, dtype=object)
    except ValueError:
        raise ManifoldSpecError("ragged array", key) from None
    if arr.shape != shape:
        raise ManifoldSpecError(f"dimension mismatch: expected shape {shape}, got {arr.shape}", key)
    exprs = []
    for idx in np.ndindex(*shape):
        item = arr[idx]
        where = key + "".join(f"[{i}]" for i in idx)
        if isinstance(item, (int, float)) and not isinstance(item, bool):
            item = repr(float(item))
        if not isinstance(item, str):
            raise ManifoldSpecError("expected an expression string", where)
        try:
            e = exprdsl.parse(item, tuple(names) + tuple(params))
        except exprdsl.ExprError as err:
            raise ManifoldSpecError(str(err), where) from None
        exprs.append(exprdsl.substitute(e, params) if params else e)
    return ExprTable(exprs, shape, names)


def load_manifold(doc: Mapping, params: Mapping[str, float] | None = None) -> FrameManifold:
    """Build a manifold from a spec document (see README for the format).

    Constant identities on ``phi`` are checked here; pointwise identities are
    left to :func:`verify_structure`.
    """
    for key in ("name", "dim", "omega", "phi", "xi_index", "h"):
        if key not in doc:
            raise ManifoldSpecError("missing key", key)
    m = doc["dim"]
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise ManifoldSpecError("dim must be a positive integer", "dim")
    if m % 2 == 0:
        raise ManifoldSpecError(f"dimension must be odd, got {m}", "dim")
    coords = tuple(doc.get("coords", ()))
    if coords and len(coords) != m:
        raise ManifoldSpecError(f"dimension mismatch: {len(coords)} coordinates for dim {m}", "coords")
    for c in coords:
        if c in exprdsl.RESERVED or not isinstance(c, str) or not c.isidentifier():
            raise ManifoldSpecError(f"invalid coordinate name {c!r}", "coords")

    declared = doc.get("params", {})
    if isinstance(declared, list):
        declared = {name: None for name in declared}
    values = {k: v for k, v in declared.items() if v is not None}
    values.update(params or {})
    unknown = set(values) - set(declared)
    if unknown:
        raise ManifoldSpecError(f"unknown parameters {sorted(unknown)}", "params")
    missing = set(declared) - set(values)
    if missing:
        raise ManifoldSpecError(f"no value for parameters {sorted(missing)}", "params")
    values = {k: float(v) for k, v in values.items()}
    for k, v in values.items():
        if not math.isfinite(v):
            raise ManifoldSpecError(f"parameter {k} is not finite", "params")

    xi_index = doc["xi_index"]
    if not isinstance(xi_index, int) or not 0 <= xi_index < m:
        raise ManifoldSpecError(f"xi_index must be in [0, {m})", "xi_index")

    try:
        phi = np.array(doc["phi"], dtype=float)
    except (TypeError, ValueError):
        raise ManifoldSpecError("phi must be a numeric matrix", "phi") from None
    if phi.shape != (m, m):
        raise ManifoldSpecError(f"dimension mismatch: expected ({m}, {m}), got {phi.shape}", "phi")
    _check_phi(phi, xi_index)

    if coords:
        frame = _parse_table(doc, "frame", (m, m), coords, values)
    else:
        if "frame" in doc and doc["frame"] is not None:
            raise ManifoldSpecError("frame given but no coordinates declared", "frame")
        frame = None
    omega = _parse_table(doc, "omega", (m, m, m), coords, values)
    h = _parse_table(doc, "h", (m, m), coords, values)
    brackets = None
    if doc.get("brackets") is not None:
        if coords:
            raise ManifoldSpecError("structure constants are only accepted without a chart", "brackets")
        brackets = _parse_table(doc, "brackets", (m, m, m), coords, values)

    metadata = []
    for key, text in (doc.get("metadata") or {}).items():
        try:
            e = exprdsl.parse(str(text), coords + tuple(values))
        except exprdsl.ExprError as err:
            raise ManifoldSpecError(str(err), f"metadata.{key}") from None
        metadata.append((key, exprdsl.substitute(e, values)))

    return FrameManifold(
        name=doc["name"], dim=m, coords=coords, frame=frame, omega=omega,
        phi=tuple(tuple(float(x) for x in row) for row in phi),
        xi_index=xi_index, h=h, metadata=tuple(metadata), brackets=brackets,
        description=doc.get("description", ""), params=tuple(sorted(values.items())),
    )


def load_manifold_file(path, params: Mapping[str, float] | None = None) -> FrameManifold:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ManifoldSpecError(f"invalid JSON: {err}", str(path)) from None
    return load_manifold(doc, params)


def dump_manifold(M: FrameManifold) -> dict:
    """Serialize to a spec document; ``load_manifold(dump_manifold(M)) == M``."""
    text = lambda table: [_map_nested(exprdsl.to_text, row) for row in table.nested()]
    doc = {
        "name": M.name,
        "dim": M.dim,
        "coords": list(M.coords),
        "omega": text(M.omega),
        "phi": [list(row) for row in M.phi],
        "xi_index": M.xi_index,
        "h": text(M.h),
    }
    if M.frame is not None:
        doc["frame"] = text(M.frame)
    if M.brackets is not None:
        doc["brackets"] = text(M.brackets)
    if M.metadata:
        doc["metadata"] = {k: exprdsl.to_text(e) for k, e in M.metadata}
    if M.description:
        doc["description"] = M.description
    return doc


def _map_nested(fn, item):
    if isinstance(item, list):
        return [_map_nested(fn, x) for x in item]
    return fn(item)


def shipped_spec(name: str) -> dict:
    """The JSON spec document shipped with the package (``rkmn`` or ``e2``)."""
    ref = resources.files("contactframe") / "data" / f"{name}.json"
    return json.loads(ref.read_text())


# --- builtins --------------------------------------------------------------

def _sparse(m, entries, rank):
    shape = (m,) * rank
    nested = np.full(shape, "0", dtype=object)
    for idx, text in entries.items():
        nested[idx] = text
    return nested.tolist()


def rkmn_doc() -> dict:
    a = "exp(2*x)/4"
    omega = {
        (1, 0, 2): f"-{a} - 1",     # nabla_X xi
        (2, 0, 1): f"1 - {a}",      # nabla_{phi X} xi
        (0, 1, 2): f"-{a} - 1",     # nabla_xi X
        (0, 2, 1): f"1 + {a}",      # nabla_xi phi X
        (1, 1, 2): "2*y",           # nabla_X X
        (1, 2, 1): "-2*y",          # nabla_X phi X
        (1, 2, 0): f"{a} + 1",
        (2, 1, 0): f"{a} - 1",      # nabla_{phi X} X
    }
    return {
        "name": "rkmn",
        "description": "(kappa,mu,nu)-contact metric manifold on R^3",
        "dim": 3,
        "coords": ["x", "y", "z"],
        "frame": [["1", "0", "2*y"],
                  ["0", "1", "(1/4)*exp(2*x) - y^2"],
                  ["0", "0", "1"]],
        "omega": _sparse(3, omega, 3),
        "phi": [[0, 0, 0], [0, 0, -1], [0, 1, 0]],
        "xi_index": 0,
        "h": _sparse(3, {(1, 1): a, (2, 2): f"-{a}"}, 2),
        "metadata": {"kappa": "1 - exp(4*x)/16",
                     "mu": "2*(1 + exp(2*x)/4)",
                     "nu": "2"},
    }


def builtin_rkmn() -> FrameManifold:
    """The (kappa, mu, nu)-contact metric structure on R^3.

    Frame order is (xi, X, phi X) = (e1, e2, e3) with e1 = d/dx, e2 = d/dy,
    e3 = 2y d/dx + (e^{2x}/4 - y^2) d/dy + d/dz.
    """
    return load_manifold(rkmn_doc())


def e2_doc() -> dict:
    omega = {
        (0, 1, 2): "(1/2)*(-c2 + 2)",
        (0, 2, 1): "-(1/2)*(-c2 + 2)",
        (1, 0, 2): "-(1/2)*(c2 + 2)",
        (1, 2, 0): "(1/2)*(c2 + 2)",
        (2, 0, 1): "(1/2)*(c2 - 2)",
        (2, 1, 0): "-(1/2)*(c2 - 2)",
    }
    return {
        "name": "e2",
        "description": "group of rigid motions of the Euclidean plane",
        "dim": 3,
        "coords": [],
        "params": ["c2"],
        "omega": _sparse(3, omega, 3),
        "phi": [[0, -1, 0], [1, 0, 0], [0, 0, 0]],
        "xi_index": 2,
        "h": _sparse(3, {(0, 0): "-(1/2)*c2", (1, 1): "(1/2)*c2"}, 2),
        # [e1, e2] = 2 e3, [e2, e3] = c2 e1, [e3, e1] = 0
        "brackets": _sparse(3, {(0, 1, 2): "2", (1, 0, 2): "-2",
                                (1, 2, 0): "c2", (2, 1, 0): "-c2"}, 3),
    }


def builtin_e2(c2: float) -> FrameManifold:
    """Left-invariant contact metric structure on E(2), frame (X, phi X, xi).

    Homogeneous: no coordinate chart, constant connection table.
    """
    c2 = float(c2)
    if not (c2 > 0 and math.isfinite(c2)):
        raise ValueError(f"c2 must be a positive real, got {c2}")
    return load_manifold(e2_doc(), {"c2": c2})


BUILTINS = {
    "rkmn": (builtin_rkmn, ()),
    "e2": (builtin_e2, ("c2",)),
}


def get_builtin(name: str, **params) -> FrameManifold:
    try:
        factory, needed = BUILTINS[name]
    except KeyError:
        raise ManifoldSpecError(f"unknown builtin manifold {name!r}") from None
    args = []
    for p in needed:
        if params.get(p) is None:
            raise ManifoldSpecError(f"builtin {name!r} needs parameter {p}")
        args.append(params[p])
    return factory(*args)


# --- pointwise queries -----------------------------------------------------

def structure_at(M: FrameManifold, p=None) -> tuple[np.ndarray, np.ndarray]:
    """Connection coefficients and h at ``p`` as numeric arrays."""
    return M.omega_at(p), M.h_at(p)


def structure_along(M: FrameManifold, coords: np.ndarray | None, n: int):
    """Batched :func:`structure_at`: arrays with a leading axis of length ``n``."""
    if M.homogeneous:
        om, h = M.omega.evaluate(), M.h.evaluate()
        return np.broadcast_to(om, (n,) + om.shape), np.broadcast_to(h, (n,) + h.shape)
    if coords is None:
        raise CoordinateError(f"manifold {M.name!r} is not homogeneous; coordinates required")
    cols = tuple(coords[:, i] for i in range(coords.shape[1]))
    om = M.omega.evaluate(cols) if not M.omega.is_constant else np.broadcast_to(M.omega.evaluate(), (n,) + M.omega.shape)
    h = M.h.evaluate(cols) if not M.h.is_constant else np.broadcast_to(M.h.evaluate(), (n,) + M.h.shape)
    return om, h


# --- self-checks -----------------------------------------------------------

@dataclass
class StructureReport:
    manifold: str
    points: np.ndarray
    tol: float
    violations: dict          # check name -> per-point max violation
    h_norm: np.ndarray        # per-point Frobenius norm of h
    skipped: tuple = ()

    @property
    def per_point_pass(self) -> dict:
        return {k: v < self.tol for k, v in self.violations.items()}

    @property
    def max_violation(self) -> dict:
        return {k: float(np.max(v)) for k, v in self.violations.items()}

    @property
    def non_sasakian(self) -> bool:
        return bool(np.all(self.h_norm > self.tol))

    @property
    def passed(self) -> bool:
        return all(np.all(v < self.tol) for v in self.violations.values())

    def to_dict(self) -> dict:
        return {
            "manifold": self.manifold,
            "verdict": "pass" if self.passed else "fail",
            "points": int(len(self.points)),
            "tol": self.tol,
            "checks": [{"name": k, "max_violation": v, "tol": self.tol,
                        "failed_points": int(np.sum(self.violations[k] >= self.tol))}
                       for k, v in self.max_violation.items()],
            "skipped": list(self.skipped),
            "non_sasakian": self.non_sasakian,
            "min_h_norm": float(np.min(self.h_norm)),
        }


def _frame_jacobian(M: FrameManifold, pts: np.ndarray, step: float) -> np.ndarray:
    """d_a (E_j)^b by fourth-order central differences; shape (P, a, b, j)."""
    P, n = pts.shape
    jac = np.empty((P, n, n, M.dim))
    for a in range(n):
        def at(shift):
            q = pts.copy()
            q[:, a] += shift
            return M.frame.evaluate(tuple(q[:, i] for i in range(n)))
        jac[:, a] = (at(-2 * step) - 8 * at(-step) + 8 * at(step) - at(2 * step)) / (12 * step)
    return jac


def verify_structure(M: FrameManifold, points=None, tol: float = 1e-6,
                     fd_step: float = 1e-4) -> StructureReport:
    """Check the pointwise contact metric identities at sample points.

    Checks h symmetric, h xi = 0, h phi = -phi h, metric compatibility of
    omega and torsion-freeness. Torsion uses Lie brackets of the frame fields
    by finite differences when a chart exists, or the declared structure
    constants of a chart-free (left-invariant) frame.
    """
    m = M.dim
    if M.coords:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != len(M.coords):
            raise CoordinateError(f"points must have {len(M.coords)} coordinates")
    else:
        pts = np.zeros((1 if points is None else max(1, len(points)), 0))
    P = len(pts)
    cols = tuple(pts[:, i] for i in range(pts.shape[1]))
    om, h = structure_along(M, pts if M.coords else None, P)
    om = np.asarray(om)
    h = np.asarray(h)
    phi = M.phi_matrix
    xi = M.xi

    flat = lambda a: np.max(np.abs(a.reshape(P, -1)), axis=1)
    violations = {
        "h_symmetric": flat(h - np.swapaxes(h, 1, 2)),
        "h_xi": flat(h @ xi),
        "h_phi_anticommute": flat(h @ phi + phi @ h),
        "metric_compatibility": flat(om + np.swapaxes(om, 2, 3)),
    }
    skipped = []
    if M.frame is not None:
        F = M.frame.evaluate(cols)
        if F.ndim == 2:
            F = np.broadcast_to(F, (P, m, m))
        jac = _frame_jacobian(M, pts, fd_step)
        # bracket[p, b, i, j] = E_i^a d_a E_j^b - E_j^a d_a E_i^b
        d_i_ej = np.einsum("pai,pabj->pbij", F, jac)
        bracket = d_i_ej - np.swapaxes(d_i_ej, 2, 3)
        Finv = np.linalg.inv(F)
        bracket_frame = np.einsum("pkb,pbij->pijk", Finv, bracket)
        torsion = om - np.swapaxes(om, 1, 2) - bracket_frame
        violations["torsion_free"] = flat(torsion)
    elif M.brackets is not None:
        torsion = om - np.swapaxes(om, 1, 2) - M.brackets.evaluate()
        violations["torsion_free"] = flat(torsion)
    else:
        skipped.append("torsion_free (no coordinate chart or structure constants)")
    h_norm = np.sqrt(np.sum(h.reshape(P, -1) ** 2, axis=1))
    return StructureReport(M.name, pts, tol, violations, h_norm, tuple(skipped))


@dataclass
class GradXiReport:
    tol: float
    violations: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(self.violations < self.tol))

    @property
    def max_violation(self) -> float:
        return float(np.max(self.violations)) if len(self.violations) else 0.0


def grad_xi(M: FrameManifold, directions: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """nabla_u xi in frame components; xi has constant components, so only
    the connection term survives."""
    return np.einsum("...i,...ik->...k", directions, omega[..., :, M.xi_index, :])


def grad_xi_expected(M: FrameManifold, directions: np.ndarray, h: np.ndarray) -> np.ndarray:
    """-phi u - phi h u."""
    phi = M.phi_matrix
    hu = np.einsum("...kj,...j->...k", h, directions)
    return -(directions + hu) @ phi.T


def verify_grad_xi(M: FrameManifold, samples: Iterable[TangentVector], tol: float = 1e-8) -> GradXiReport:
    """Check nabla_u xi = -phi u - phi h u for each sampled tangent vector."""
    out = []
    for tv in samples:
        u = np.asarray(tv.comp, dtype=float)
        om, h = structure_at(M, tv.base)
        lhs = grad_xi(M, u, om)
        rhs = grad_xi_expected(M, u, h)
        out.append(float(np.max(np.abs(lhs - rhs))))
    return GradXiReport(tol, np.array(out))


def random_points(M: FrameManifold, count: int, seed: int = 0, box: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-box, box, size=(count, len(M.coords)))


def random_unit_directions(dim: int, count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
