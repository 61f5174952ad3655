"""The four mean-curvature derivative vectors of a Frenet curve.

``mean_vectors_formula`` assembles them from curvature functions and the
Frenet frame; ``mean_vectors_direct`` differentiates H = nabla_T T along the
curve. The second is an independent cross-check of the first; classification
only ever uses the formula route.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import Curve, CurveError, FrenetApparatus, covariant_derivative


class GeodesicError(CurveError):
    pass


@dataclass(frozen=True, eq=False)
class MeanVectors:
    s: np.ndarray
    nabla_t_h: np.ndarray
    delta_h: np.ndarray
    nabla_perp_h: np.ndarray
    delta_perp_h: np.ndarray

    def as_dict(self) -> dict:
        return {
            "nabla_t_h": self.nabla_t_h,
            "delta_h": self.delta_h,
            "nabla_perp_h": self.nabla_perp_h,
            "delta_perp_h": self.delta_perp_h,
        }


def mean_vectors_formula(f: FrenetApparatus) -> MeanVectors:
    """Closed forms in k1, k2, k3 and their derivatives.

    Terms involving curvatures or frame vectors beyond the osculating order
    vanish.
    """
    if f.order < 2:
        raise GeodesicError("mean-curvature vectors need a non-geodesic curve")
    col = lambda a: a[:, None]
    k1, k2, k3 = f.k(1), f.k(2), f.k(3)
    dk1, ddk1, dk2 = f.dk(1), f.dk(1, 2), f.dk(2)
    v1, v2, v3, v4 = f.v(1), f.v(2), f.v(3), f.v(4)

    nabla_perp = col(dk1) * v2 + col(k1 * k2) * v3
    nabla = col(-k1 ** 2) * v1 + nabla_perp
    mixed = 2 * dk1 * k2 + k1 * dk2
    delta_perp = col(k1 * k2 ** 2 - ddk1) * v2 - col(mixed) * v3 - col(k1 * k2 * k3) * v4
    delta = col(3 * k1 * dk1) * v1 + col(k1 ** 3) * v2 + delta_perp
    return MeanVectors(f.s, nabla, delta, nabla_perp, delta_perp)


def _normal_part(c: Curve, V: np.ndarray) -> np.ndarray:
    T = c.tangent
    return V - np.einsum("nk,nk->n", V, T)[:, None] * T


def mean_vectors_direct(c: Curve, rank_tol: float | None = None) -> MeanVectors:
    """Repeated covariant differentiation of H = nabla_T T.

    Delta H = -nabla_T nabla_T H; the normal-bundle versions take the part
    orthogonal to T after every differentiation.
    """
    H = covariant_derivative(c, c.tangent)
    if np.max(np.linalg.norm(H, axis=1)) < (rank_tol or 1e-8):
        raise GeodesicError("mean-curvature vectors need a non-geodesic curve")
    dH = covariant_derivative(c, H)
    ddH = covariant_derivative(c, dH)
    perp_H = _normal_part(c, H)
    perp_dH = _normal_part(c, covariant_derivative(c, perp_H))
    perp_ddH = _normal_part(c, covariant_derivative(c, perp_dH))
    return MeanVectors(c.s, dH, -ddH, perp_dH, -perp_ddH)


def tangential_defect(c: Curve, mv: MeanVectors) -> float:
    """Largest |g(V, T)| over the normal-bundle vectors."""
    T = c.tangent
    return float(max(np.max(np.abs(np.einsum("nk,nk->n", mv.nabla_perp_h, T))),
                     np.max(np.abs(np.einsum("nk,nk->n", mv.delta_perp_h, T)))))
