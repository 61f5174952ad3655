import math

import numpy as np
import pytest

from contactframe.constructor import FrenetInitialData, integrate_frenet_curve
from contactframe.curve import Curve, FrenetApparatus, frenet
from contactframe.manifold import builtin_e2, builtin_rkmn
from contactframe.meancurvature import (GeodesicError, mean_vectors_direct, mean_vectors_formula,
                                        tangential_defect)
from contactframe.numerics import uniform_grid

FIRST = ("nabla_t_h", "nabla_perp_h")
TRIPLE = ("delta_h", "delta_perp_h")


def _discrepancy(c, name):
    formula = mean_vectors_formula(frenet(c)).as_dict()[name]
    direct = mean_vectors_direct(c).as_dict()[name]
    return float(np.max(np.abs(formula - direct)[c.interior]))


@pytest.fixture(scope="module")
def wobbly():
    """Integrated curve on the R^3 example with non-constant k1 and k2."""
    f0 = frenet(_ex1_short())
    d = FrenetInitialData(builtin_rkmn(), f0.frames[0], ["1 + 0.3*sin(2*s)", "1 + 0.2*s"],
                          (0.0, 1.0), 1e-3, (math.log(2), 0.0, 0.0))
    c, _ = integrate_frenet_curve(d)
    return c


def _ex1_short():
    from contactframe.constructor import build_example_1
    return build_example_1((0.0, 0.1), 1e-2)


def test_example_1_normal_laplacian_is_minus_xi(ex1):
    mv = mean_vectors_formula(frenet(ex1))
    assert np.max(np.abs(mv.delta_perp_h - [-1, 0, 0])) < 1e-12


def test_constant_k1_order_two_delta_h(true_circle):
    f = frenet(true_circle)
    k1 = f.k(1)
    mv = mean_vectors_formula(f)
    assert np.allclose(mv.delta_h, (k1 ** 3)[:, None] * f.v(2), atol=1e-10)
    assert np.all(mv.nabla_perp_h == 0)


def test_affine_k1_has_zero_normal_laplacian():
    s = uniform_grid(0.0, 1.0, 1e-2)
    frames = np.zeros((len(s), 2, 3))
    frames[:, 0, 1] = 1.0
    frames[:, 1, 0] = 1.0
    f = FrenetApparatus(s, 2, (2.0 * s + 1.0,), frames, 0)
    assert np.max(np.abs(mean_vectors_formula(f).delta_perp_h)) < 1e-10


def test_geodesic_rejected():
    M = builtin_e2(1.0)
    s = uniform_grid(0.0, 1.0, 1e-2)
    c = Curve(M, s, np.tile(M.xi, (len(s), 1)))
    with pytest.raises(GeodesicError):
        mean_vectors_formula(frenet(c))
    with pytest.raises(GeodesicError):
        mean_vectors_direct(c)


def test_direct_delta_h_of_helix_has_no_tangent_part(e2_helix):
    mv = mean_vectors_direct(e2_helix)
    t_part = np.einsum("nk,nk->n", mv.delta_h, e2_helix.tangent)
    assert np.max(np.abs(t_part)) < 1e-6


def test_true_circle_parallel_in_normal_bundle(true_circle):
    mv = mean_vectors_direct(true_circle)
    assert np.max(np.abs(mv.nabla_perp_h)) < 1e-9


@pytest.mark.parametrize("curve", ["ex1", "e2_circle", "e2_helix", "true_circle", "wobbly"])
def test_oracle_equivalence(curve, request):
    c = request.getfixturevalue(curve)
    for name in FIRST:
        assert _discrepancy(c, name) < 1e-4, name
    for name in TRIPLE:
        assert _discrepancy(c, name) < 1e-3, name


@pytest.mark.parametrize("curve", ["ex1", "e2_helix", "wobbly"])
def test_normal_bundle_vectors_orthogonal_to_tangent(curve, request):
    c = request.getfixturevalue(curve)
    for mv in (mean_vectors_formula(frenet(c)), mean_vectors_direct(c)):
        assert tangential_defect(c, mv) < 1e-6


def test_oracle_discrepancy_shrinks_with_step():
    f0 = frenet(_ex1_short())

    def curve(step):
        d = FrenetInitialData(builtin_rkmn(), f0.frames[0], ["1 + 0.3*sin(2*s)", "1 + 0.2*s"],
                              (0.0, 1.0), step, (math.log(2), 0.0, 0.0))
        return integrate_frenet_curve(d)[0]

    coarse, fine = curve(2e-2), curve(1e-2)
    for name in FIRST + TRIPLE:
        assert _discrepancy(fine, name) < _discrepancy(coarse, name) / 4, name


def test_constant_curvatures_reduce_nabla_perp(e2_helix):
    f = frenet(e2_helix)
    mv = mean_vectors_formula(f)
    assert np.allclose(mv.nabla_perp_h, (f.k(1) * f.k(2))[:, None] * f.v(3), atol=1e-12)
