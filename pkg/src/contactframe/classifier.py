"""C-parallel / C-proper classification and theorem verification.

A curve satisfies one of the four conditions when the chosen mean-curvature
vector V equals lambda * xi for a nowhere-vanishing function lambda. Since xi
is a unit field, lambda = g(V, xi) is the least-squares coefficient and the
residual ||V - lambda xi|| measures the failure.

Theorem verifiers evaluate the characterizing identities on the interior
samples of a concrete curve. They accept either a :class:`Curve` or a
:class:`TheoremData` bundle; the latter lets tests feed synthetic Frenet data
for orders no reference curve reaches.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .curve import (Curve, CurveError, FrenetApparatus, covariant_derivative, frenet,
                    h_scalars, legendre_scalar)
from .meancurvature import mean_vectors_formula
from .numerics import SampledFunction

DEFAULT_TOL = 1e-4
DEFAULT_LAMBDA_FLOOR = 1e-6


class OrderMismatchError(CurveError):
    def __init__(self, theorem: str, order: int, expected: str):
        super().__init__(f"{theorem} needs osculating order {expected}, curve has order {order}")
        self.theorem = theorem
        self.order = order


class ClassificationFailedError(CurveError):
    def __init__(self, theorem: str, kind: "ConditionKind", verdict: str, max_residual: float):
        super().__init__(
            f"{theorem} presupposes the {kind.value} condition, but classification "
            f"gave {verdict!r} (max residual {max_residual:.3g})")
        self.theorem = theorem
        self.kind = kind
        self.verdict = verdict


class ConditionKind(enum.Enum):
    C_PARALLEL_TANGENT = "c-parallel-tangent"
    C_PROPER_TANGENT = "c-proper-tangent"
    C_PARALLEL_NORMAL = "c-parallel-normal"
    C_PROPER_NORMAL = "c-proper-normal"

    @property
    def vector_name(self) -> str:
        return _VECTOR_OF[self]

    @classmethod
    def parse(cls, text) -> "ConditionKind":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("_", "-")
        for kind in cls:
            if key in (kind.value, kind.value.replace("-", ""), kind.name.lower().replace("_", "-")):
                return kind
        raise ValueError(f"unknown condition kind {text!r}; expected one of "
                         + ", ".join(k.value for k in cls))


_VECTOR_OF = {
    ConditionKind.C_PARALLEL_TANGENT: "nabla_t_h",
    ConditionKind.C_PROPER_TANGENT: "delta_h",
    ConditionKind.C_PARALLEL_NORMAL: "nabla_perp_h",
    ConditionKind.C_PROPER_NORMAL: "delta_perp_h",
}


def _lambda_summary(lam: np.ndarray) -> dict:
    return {"min": float(np.min(lam)), "max": float(np.max(lam))}


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    kind: ConditionKind
    lambda_: SampledFunction
    residual: SampledFunction
    verdict: str                      # holds / fails / degenerate
    max_residual: float
    lambda_nonzero: bool
    tol: float
    lambda_floor: float

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_dict(self, samples: bool = False) -> dict:
        lam = _lambda_summary(self.lambda_.values)
        if samples:
            lam["samples"] = [float(x) for x in self.lambda_.values]
        return {
            "kind": self.kind.value,
            "verdict": self.verdict,
            "max_residual": self.max_residual,
            "lambda": lam,
            "lambda_nonzero": self.lambda_nonzero,
            "checks": [
                {"name": "residual", "max_violation": self.max_residual, "tol": self.tol},
                {"name": "min_abs_lambda", "max_violation": float(np.min(np.abs(self.lambda_.values))),
                 "tol": self.lambda_floor},
            ],
        }


def _xi_of(dim: int, xi_index: int) -> np.ndarray:
    xi = np.zeros(dim)
    xi[xi_index] = 1.0
    return xi


def extract_lambda(V: np.ndarray, xi_index: int) -> tuple[np.ndarray, np.ndarray]:
    """lambda = g(V, xi) and residual = ||V - lambda xi|| per sample."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    lam = V[:, xi_index].copy()
    rest = V - lam[:, None] * _xi_of(V.shape[1], xi_index)
    return lam, np.linalg.norm(rest, axis=1)


def _apparatus(source, apparatus: FrenetApparatus | None) -> FrenetApparatus:
    if apparatus is not None:
        return apparatus
    if isinstance(source, FrenetApparatus):
        return source
    if isinstance(source, TheoremData):
        return source.apparatus
    if isinstance(source, Curve):
        return frenet(source)
    raise TypeError(f"cannot classify a {type(source).__name__}")


def classify(source, kind, tol: float = DEFAULT_TOL, lambda_floor: float = DEFAULT_LAMBDA_FLOOR,
             apparatus: FrenetApparatus | None = None) -> ClassificationReport:
    """Decide one condition on a curve (or on precomputed Frenet data).

    ``degenerate`` means V is parallel to xi within ``tol`` but lambda comes
    within ``lambda_floor`` of zero somewhere, so the non-vanishing
    requirement on lambda is not met.
    """
    kind = ConditionKind.parse(kind)
    f = _apparatus(source, apparatus)
    V = getattr(mean_vectors_formula(f), kind.vector_name)
    lam, res = extract_lambda(V, f.xi_index)
    max_res = float(np.max(res))
    nonzero = bool(np.min(np.abs(lam)) > lambda_floor)
    if max_res >= tol:
        verdict = "fails"
    elif nonzero:
        verdict = "holds"
    else:
        verdict = "degenerate"
    return ClassificationReport(kind, SampledFunction(f.s, lam), SampledFunction(f.s, res),
                                verdict, max_res, nonzero, tol, lambda_floor)


# --- theorem verification --------------------------------------------------

@dataclass(frozen=True, eq=False)
class TheoremData:
    """Everything the verifiers read: Frenet data plus the h-derived scalars.

    ``g_t_phihT`` is g(T, phi h T); ``g_t_hT`` and ``g_hT_hT`` are g(T, hT)
    and g(hT, hT); ``eta_t`` is eta(T). ``curve`` is optional and enables the
    direct (non-formula) obstruction check.
    """

    apparatus: FrenetApparatus
    g_t_phihT: np.ndarray
    g_t_hT: np.ndarray
    g_hT_hT: np.ndarray
    eta_t: np.ndarray
    curve: Curve | None = None

    @property
    def s(self) -> np.ndarray:
        return self.apparatus.s


def theorem_data(c: Curve, apparatus: FrenetApparatus | None = None) -> TheoremData:
    f = apparatus if apparatus is not None else frenet(c)
    a, b = h_scalars(c)
    return TheoremData(f, legendre_scalar(c).values, a, b,
                       c.tangent[:, c.manifold.xi_index].copy(), c)


@dataclass(frozen=True)
class Check:
    name: str
    max_violation: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.max_violation < self.tol)


@dataclass(frozen=True, eq=False)
class TheoremReport:
    theorem: str
    checks: tuple
    branch: str | None = None
    lambda_: np.ndarray | None = None
    verdict_note: str = ""
    classification: ClassificationReport | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(ch.passed for ch in self.checks)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def check(self, name: str) -> Check:
        for ch in self.checks:
            if ch.name == name:
                return ch
        raise KeyError(name)

    def to_dict(self) -> dict:
        out = {
            "theorem": self.theorem,
            "verdict": self.verdict,
            "max_residual": max((ch.max_violation for ch in self.checks), default=0.0),
            "branch": self.branch,
            "checks": [{"name": ch.name, "max_violation": ch.max_violation, "tol": ch.tol}
                       for ch in self.checks],
        }
        if self.lambda_ is not None:
            out["lambda"] = _lambda_summary(self.lambda_)
        if self.classification is not None:
            out["condition"] = {"kind": self.classification.kind.value,
                                "verdict": self.classification.verdict}
        if self.verdict_note:
            out["note"] = self.verdict_note
        return out


THEOREMS = ("T2.1", "T2.2", "T2.3", "T2.4", "T3.1", "T3.2", "T3.3", "T3.4", "T3.5", "T3.6")


class _Ctx:
    """Interior-sample views shared by the individual verifiers."""

    def __init__(self, theorem: str, data: TheoremData, tol: float, lambda_floor: float):
        self.theorem = theorem
        self.data = data
        self.tol = tol
        self.lambda_floor = lambda_floor
        f = data.apparatus
        self.f = f
        n = len(f.s)
        self.sl = slice(2, n - 2) if n > 4 else slice(0, n)
        self.checks: list[Check] = []

    def k(self, a, order=0):
        f = self.f
        return (f.k(a) if order == 0 else f.dk(a, order))[self.sl]

    def eta(self, a):
        return self.f.eta_of(a)[self.sl]

    def v(self, a):
        return self.f.v(a)[self.sl]

    @property
    def G(self):
        return self.data.g_t_phihT[self.sl]

    @property
    def xi(self):
        return _xi_of(self.f.dim, self.f.xi_index)

    def add(self, name: str, violation, tol: float | None = None):
        v = float(np.max(np.abs(violation))) if np.size(violation) else 0.0
        self.checks.append(Check(name, v, self.tol if tol is None else tol))

    def sign_of(self, a: int) -> float:
        """Sign of eta(v_a) at the first interior sample."""
        value = self.eta(a)[0]
        return 1.0 if value >= 0 else -1.0

    def require_order(self, accept: Callable[[int], bool], expected: str):
        if not accept(self.f.order):
            raise OrderMismatchError(self.theorem, self.f.order, expected)

    def require(self, kind: ConditionKind, allow_degenerate: bool = False) -> ClassificationReport:
        rep = classify(self.data.apparatus, kind, tol=self.tol, lambda_floor=self.lambda_floor)
        ok = rep.verdict == "holds" or (allow_degenerate and rep.verdict == "degenerate")
        if not ok:
            raise ClassificationFailedError(self.theorem, kind, rep.verdict, rep.max_residual)
        self.report = rep
        return rep

    def lam(self):
        return self.report.lambda_.values[self.sl]

    def legendre(self):
        self.add("eta_T_zero", self.data.eta_t[self.sl])
        self.add("legendre_identity", self.k(1) * self.eta(2) - self.G)


def _obstruction(ctx: _Ctx):
    """No non-geodesic Legendre curve has nabla_T H = lambda xi."""
    k1 = ctx.k(1)
    ctx.add("eta_T_zero", ctx.data.eta_t[ctx.sl])
    c = ctx.data.curve
    if c is not None:
        H = covariant_derivative(c, c.tangent)
        dH = covariant_derivative(c, H)
        t_comp = np.einsum("nk,nk->n", dH, c.tangent)[ctx.sl]
    else:
        t_comp = np.einsum("nk,nk->n", mean_vectors_formula(ctx.f).nabla_t_h, ctx.f.v(1))[ctx.sl]
    ctx.add("tangential_part_is_minus_k1_squared", t_comp + k1 ** 2)
    # k1^2 > 0 everywhere makes lambda xi (no T-component) unreachable
    ctx.add("k1_squared_positive", max(0.0, ctx.lambda_floor - float(np.min(k1 ** 2))))
    rep = classify(ctx.f, ConditionKind.C_PARALLEL_TANGENT, tol=ctx.tol, lambda_floor=ctx.lambda_floor)
    ctx.report = rep
    ctx.add("condition_fails", 0.0 if rep.verdict == "fails" else 1.0, 0.5)
    return None


def _t21(ctx):
    ctx.require_order(lambda r: r >= 2, ">= 2")
    return _obstruction(ctx)


def _t23(ctx):
    ctx.require_order(lambda r: r >= 3, ">= 3")
    return _obstruction(ctx)


def _t22(ctx):
    ctx.require_order(lambda r: r == 2, "2")
    ctx.require(ConditionKind.C_PARALLEL_NORMAL)
    sigma = ctx.sign_of(2)
    ctx.legendre()
    ctx.add("k1_equals_sigma_G", ctx.k(1) - sigma * ctx.G)
    ctx.add("xi_equals_sigma_v2", ctx.v(2) - sigma * ctx.xi)
    ctx.add("lambda_equals_sigma_dk1", ctx.lam() - sigma * ctx.k(1, 1))
    return None


def _k1_constant(ctx) -> bool:
    return float(np.max(np.abs(ctx.k(1, 1)))) < ctx.tol * float(np.max(ctx.k(1)))


def _t24(ctx):
    ctx.require_order(lambda r: r == 3, "3")
    ctx.require(ConditionKind.C_PARALLEL_NORMAL)
    ctx.legendre()
    k1, k2, dk1, G, lam = ctx.k(1), ctx.k(2), ctx.k(1, 1), ctx.G, ctx.lam()
    if not _k1_constant(ctx):
        with np.errstate(divide="ignore", invalid="ignore"):
            k2_expected = np.abs(dk1) * np.sqrt(np.clip(k1 ** 2 - G ** 2, 0, None)) / (k1 * np.abs(G))
            ctx.add("k2_formula", k2 - k2_expected)
            ctx.add("eta_v2", ctx.eta(2) - G / k1)
            ctx.add("eta_v3", ctx.eta(3) - k2 * G / dk1)
            ctx.add("lambda_formula", lam - dk1 * k1 / G)
        ctx.add("unit_norm", ctx.eta(2) ** 2 + ctx.eta(3) ** 2 - 1)
        return "k1-nonconstant"
    sigma = ctx.sign_of(3)
    a, b = ctx.data.g_t_hT[ctx.sl], ctx.data.g_hT_hT[ctx.sl]
    ctx.add("k2_formula", k2 - np.sqrt(np.clip(1 + 2 * a + b, 0, None)))
    ctx.add("xi_equals_sigma_v3", ctx.v(3) - sigma * ctx.xi)
    ctx.add("lambda_equals_sigma_k1k2", lam - sigma * k1 * k2)
    return "k1-constant"


def _t31(ctx):
    ctx.require_order(lambda r: r == 2, "2")
    ctx.require(ConditionKind.C_PROPER_TANGENT)
    sigma = ctx.sign_of(2)
    ctx.legendre()
    ctx.add("k1_constant", ctx.k(1, 1))
    ctx.add("k1_equals_sigma_G", ctx.k(1) - sigma * ctx.G)
    ctx.add("xi_equals_sigma_v2", ctx.v(2) - sigma * ctx.xi)
    ctx.add("lambda_equals_G_cubed", ctx.lam() - ctx.G ** 3)
    return None


def _t32(ctx):
    ctx.require_order(lambda r: r == 2, "2")
    ddk1, k1 = ctx.k(1, 2), ctx.k(1)
    affine = float(np.max(np.abs(ddk1))) < ctx.tol * float(np.max(k1))
    rep = ctx.require(ConditionKind.C_PROPER_NORMAL, allow_degenerate=affine)
    ctx.legendre()
    if affine:
        ctx.add("k1_affine", ddk1)
        ctx.add("lambda_vanishes", ctx.lam())
        if rep.verdict == "degenerate":
            ctx.note = "lambda vanishes identically, so the non-zero requirement is violated"
        return "i"
    sigma = ctx.sign_of(2)
    ctx.add("k1_equals_sigma_G", k1 - sigma * ctx.G)
    ctx.add("xi_equals_sigma_v2", ctx.v(2) - sigma * ctx.xi)
    ctx.add("lambda_equals_minus_sigma_ddk1", ctx.lam() + sigma * ddk1)
    return "ii"


def _proper_tangent_high(ctx, four: bool):
    k1, k2, k3, dk2, G, lam = ctx.k(1), ctx.k(2), ctx.k(3), ctx.k(2, 1), ctx.G, ctx.lam()
    ctx.legendre()
    ctx.add("k1_constant", ctx.k(1, 1))
    ctx.add("lambda_formula", lam - k1 ** 2 * (k1 ** 2 + k2 ** 2) / G)
    ctx.add("eta_v2", ctx.eta(2) - G / k1)
    ctx.add("eta_v3", ctx.eta(3) + k1 * dk2 / lam)
    norm = ctx.eta(2) ** 2 + ctx.eta(3) ** 2
    if four:
        ctx.add("eta_v4", ctx.eta(4) + k1 * k2 * k3 / lam)
        norm = norm + ctx.eta(4) ** 2
    ctx.add("unit_norm", norm - 1)


def _proper_normal_high(ctx, four: bool):
    k1, k2, k3, dk1, ddk1, dk2 = (ctx.k(1), ctx.k(2), ctx.k(3), ctx.k(1, 1),
                                  ctx.k(1, 2), ctx.k(2, 1))
    G, lam = ctx.G, ctx.lam()
    ctx.legendre()
    ctx.add("lambda_formula", lam - (k1 ** 2 * k2 ** 2 - k1 * ddk1) / G)
    ctx.add("eta_v2", ctx.eta(2) - G / k1)
    ctx.add("eta_v3", ctx.eta(3) + (2 * dk1 * k2 + k1 * dk2) / lam)
    norm = ctx.eta(2) ** 2 + ctx.eta(3) ** 2
    if four:
        ctx.add("eta_v4", ctx.eta(4) + k1 * k2 * k3 / lam)
        norm = norm + ctx.eta(4) ** 2
    ctx.add("unit_norm", norm - 1)


def _t33(ctx):
    ctx.require_order(lambda r: r == 3, "3")
    ctx.require(ConditionKind.C_PROPER_TANGENT)
    _proper_tangent_high(ctx, four=False)


def _t34(ctx):
    ctx.require_order(lambda r: r == 3, "3")
    ctx.require(ConditionKind.C_PROPER_NORMAL)
    _proper_normal_high(ctx, four=False)


def _t35(ctx):
    ctx.require_order(lambda r: r >= 4, ">= 4")
    ctx.require(ConditionKind.C_PROPER_TANGENT)
    _proper_tangent_high(ctx, four=True)


def _t36(ctx):
    ctx.require_order(lambda r: r >= 4, ">= 4")
    ctx.require(ConditionKind.C_PROPER_NORMAL)
    _proper_normal_high(ctx, four=True)


_VERIFIERS = {"T2.1": _t21, "T2.2": _t22, "T2.3": _t23, "T2.4": _t24, "T3.1": _t31,
              "T3.2": _t32, "T3.3": _t33, "T3.4": _t34, "T3.5": _t35, "T3.6": _t36}


def parse_theorem_id(text: str) -> str:
    key = str(text).strip().upper()
    if not key.startswith("T"):
        key = "T" + key
    if key not in _VERIFIERS:
        raise ValueError(f"unknown theorem {text!r}; expected one of {', '.join(THEOREMS)}")
    return key


def verify_theorem(theorem: str, source, tol: float = DEFAULT_TOL,
                   lambda_floor: float = DEFAULT_LAMBDA_FLOOR) -> TheoremReport:
    """Evaluate a theorem's characterizing identities on interior samples.

    Raises :class:`OrderMismatchError` when the osculating order is outside
    the theorem's hypothesis and :class:`ClassificationFailedError` when the
    condition the theorem characterizes does not hold.
    """
    tid = parse_theorem_id(theorem)
    data = theorem_data(source) if isinstance(source, Curve) else source
    if not isinstance(data, TheoremData):
        raise TypeError("verify_theorem needs a Curve or TheoremData")
    ctx = _Ctx(tid, data, tol, lambda_floor)
    ctx.note = ""
    ctx.report = None
    branch = _VERIFIERS[tid](ctx)
    lam = ctx.report.lambda_.values if ctx.report is not None else None
    return TheoremReport(tid, tuple(ctx.checks), branch, lam, ctx.note, ctx.report)
