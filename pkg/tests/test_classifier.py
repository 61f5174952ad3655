import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import CIRCLE_C2, CIRCLE_THETA, synthetic_data, unit_rows
from contactframe.classifier import (THEOREMS, ClassificationFailedError, ConditionKind,
                                     OrderMismatchError, classify, extract_lambda, theorem_data,
                                     verify_theorem)
from contactframe.constructor import build_e2_circle, build_e2_helix, build_example_1, e2_curvatures
from contactframe.curve import frenet
from contactframe.meancurvature import mean_vectors_formula
from contactframe.numerics import uniform_grid

thetas = st.one_of(st.floats(math.pi / 2 + 0.05, math.pi - 0.05),
                   st.floats(-math.pi / 2 + 0.05, -0.05))
c2s = st.floats(0.2, 8.0)
S = uniform_grid(0.0, 1.0, 1e-2)


# --- extraction ----------------------------------------------------------

def test_extract_lambda_trivial_cases(ex1):
    lam, res = extract_lambda(np.array([[3.0, 0.0, 0.0]]), 0)
    assert lam[0] == 3.0 and res[0] == 0.0
    lam, res = extract_lambda(ex1.tangent, 0)
    assert np.all(lam == 0) and np.allclose(res, 1.0)
    V = mean_vectors_formula(frenet(ex1)).delta_perp_h
    lam, res = extract_lambda(V, 0)
    assert np.allclose(lam, -1.0) and np.max(res) < 1e-5


@pytest.mark.parametrize("kind", list(ConditionKind))
@pytest.mark.parametrize("curve", ["ex1", "e2_helix", "true_circle"])
def test_orthogonal_decomposition(kind, curve, request):
    c = request.getfixturevalue(curve)
    f = frenet(c)
    V = getattr(mean_vectors_formula(f), kind.vector_name)
    rep = classify(c, kind, apparatus=f)
    norm2 = np.einsum("nk,nk->n", V, V)
    assert np.max(np.abs(rep.residual.values ** 2 + rep.lambda_.values ** 2 - norm2)) < 1e-10


def test_condition_kind_parse():
    assert ConditionKind.parse("c-proper-normal") is ConditionKind.C_PROPER_NORMAL
    assert ConditionKind.parse("C_PARALLEL_TANGENT") is ConditionKind.C_PARALLEL_TANGENT
    with pytest.raises(ValueError):
        ConditionKind.parse("c-biharmonic")


# --- classification on reference curves --------------------------------------

def test_example_1_proper_normal(ex1):
    rep = classify(ex1, "c-proper-normal")
    assert rep.verdict == "holds" and rep.lambda_nonzero
    assert np.max(np.abs(rep.lambda_.values + 1)) < 1e-5


def test_example_1_parallel_tangent_obstruction(ex1):
    rep = classify(ex1, "c-parallel-tangent")
    assert rep.verdict == "fails"
    assert rep.max_residual >= 1.0


def test_e2_circle_proper_tangent_at_reference_parameters(e2_circle):
    # r = 3 with k1 = k2 = 1, so lambda = k1 (k1^2 + k2^2) = 2 rather than G^3 = 1
    rep = classify(e2_circle, "c-proper-tangent")
    assert rep.verdict == "holds"
    assert np.max(np.abs(rep.lambda_.values - 2.0)) < 1e-9


def test_true_circle_proper_tangent_lambda_is_g_cubed(true_circle):
    rep = classify(true_circle, "c-proper-tangent")
    G = -math.sin(CIRCLE_THETA) * math.cos(CIRCLE_THETA) * CIRCLE_C2
    assert rep.verdict == "holds"
    assert np.max(np.abs(rep.lambda_.values - G ** 3)) < 1e-9


@settings(max_examples=20, deadline=None)
@given(c2s, thetas)
def test_helix_lambdas_match_theorems(c2, theta):
    k1, k2 = e2_curvatures(c2, theta)
    c = build_e2_helix(c2, theta, (0, 0.1), 1e-2)
    f = frenet(c)
    tangent = classify(c, "c-proper-tangent", apparatus=f)
    normal = classify(c, "c-proper-normal", apparatus=f)
    assert tangent.verdict == "holds"
    assert np.max(np.abs(tangent.lambda_.values - k1 * (k1 ** 2 + k2 ** 2))) < 1e-8 * (1 + k1 ** 3)
    lam_n = k1 * k2 ** 2
    assert np.max(np.abs(normal.lambda_.values - lam_n)) < 1e-8 * (1 + k1 ** 3)
    assert normal.verdict == ("holds" if abs(lam_n) > 1e-6 else "degenerate")


@settings(max_examples=20, deadline=None)
@given(c2s, thetas, st.sampled_from(["circle", "helix"]))
def test_parallel_tangent_obstruction_property(c2, theta, family):
    build = build_e2_circle if family == "circle" else build_e2_helix
    c = build(c2, theta, (0, 0.1), 1e-2)
    f = frenet(c)
    rep = classify(c, "c-parallel-tangent", apparatus=f)
    assert rep.verdict == "fails"
    assert rep.max_residual >= float(np.min(f.k(1) ** 2)) - 1e-4


@pytest.mark.parametrize("kind", list(ConditionKind))
def test_verdicts_step_stable(kind):
    pairs = [(build_example_1((0, 1), 1e-3), build_example_1((0, 1), 5e-4)),
             (build_e2_helix(2, 3 * math.pi / 4, (0, 1), 1e-3),
              build_e2_helix(2, 3 * math.pi / 4, (0, 1), 5e-4)),
             (build_e2_circle(CIRCLE_C2, CIRCLE_THETA, (0, 1), 1e-3),
              build_e2_circle(CIRCLE_C2, CIRCLE_THETA, (0, 1), 5e-4))]
    for coarse, fine in pairs:
        assert classify(coarse, kind).verdict == classify(fine, kind).verdict


def test_report_json_schema(ex1):
    d = classify(ex1, "c-proper-normal").to_dict(samples=True)
    json.dumps(d)
    assert d["kind"] == "c-proper-normal" and d["verdict"] == "holds"
    assert set(d["lambda"]) == {"min", "max", "samples"}
    assert {c["name"] for c in d["checks"]} == {"residual", "min_abs_lambda"}


# --- theorems on reference curves ----------------------------------------------

def test_t34_example_1(ex1):
    rep = verify_theorem("T3.4", ex1)
    assert rep.passed
    assert np.allclose(rep.lambda_, -1.0)


def test_t21_and_t23_example_1(ex1):
    for tid in ("T2.1", "T2.3"):
        rep = verify_theorem(tid, ex1)
        assert rep.passed
        assert rep.check("tangential_part_is_minus_k1_squared").max_violation < 1e-6


def test_t33_and_t34_helix(e2_helix):
    rep = verify_theorem("T3.3", e2_helix)
    assert rep.passed and np.allclose(rep.lambda_, 2.0)
    assert verify_theorem("T3.4", e2_helix).passed


def test_t31_true_circle(true_circle):
    rep = verify_theorem("T3.1", true_circle)
    assert rep.passed
    G = -math.sin(CIRCLE_THETA) * math.cos(CIRCLE_THETA) * CIRCLE_C2
    assert np.allclose(rep.lambda_, G ** 3)


def test_t31_rejects_reference_circle_for_order(e2_circle):
    with pytest.raises(OrderMismatchError):
        verify_theorem("T3.1", e2_circle)


def test_prerequisite_condition_must_hold(ex1):
    with pytest.raises(ClassificationFailedError) as info:
        verify_theorem("T2.4", ex1)
    assert info.value.kind is ConditionKind.C_PARALLEL_NORMAL


def test_order_mismatch_names_theorem(ex1):
    with pytest.raises(OrderMismatchError) as info:
        verify_theorem("T3.5", ex1)
    assert info.value.theorem == "T3.5" and info.value.order == 3


def test_unknown_theorem():
    with pytest.raises(ValueError):
        verify_theorem("T9.9", None)
    assert len(THEOREMS) == 10


# --- synthetic Frenet data -------------------------------------------------

@pytest.mark.parametrize("sigma", [1.0, -1.0])
def test_t22_synthetic(sigma):
    k1 = 1.0 + S
    data = synthetic_data(S, [k1], np.full((len(S), 1), sigma))
    rep = verify_theorem("T2.2", data)
    assert rep.passed, rep.to_dict()
    assert np.allclose(rep.lambda_, sigma)


def test_t24_nonconstant_branch_synthetic():
    k1 = 1.0 + S
    eta2, eta3 = 0.5, math.sqrt(3) / 2
    data = synthetic_data(S, [k1, math.sqrt(3) / k1], np.tile([eta2, eta3], (len(S), 1)))
    rep = verify_theorem("T2.4", data)
    assert rep.branch == "k1-nonconstant"
    assert rep.passed, rep.to_dict()
    assert np.allclose(rep.lambda_, 2.0)


@pytest.mark.parametrize("sigma", [1.0, -1.0])
def test_t24_constant_branch_synthetic(sigma):
    a, b = 0.3, 0.5
    k2 = math.sqrt(1 + 2 * a + b)
    data = synthetic_data(S, [1.5, k2], np.tile([0.0, sigma], (len(S), 1)), g_t_hT=a, g_hT_hT=b)
    rep = verify_theorem("T2.4", data)
    assert rep.branch == "k1-constant"
    assert rep.passed, rep.to_dict()
    assert np.allclose(rep.lambda_, sigma * 1.5 * k2)


def test_t24_constant_branch_detects_wrong_k2():
    data = synthetic_data(S, [1.5, 2.0], np.tile([0.0, 1.0], (len(S), 1)), g_t_hT=0.3, g_hT_hT=0.5)
    rep = verify_theorem("T2.4", data)
    assert not rep.passed
    assert not rep.check("k2_formula").passed


def test_t32_branch_i_is_degenerate():
    data = synthetic_data(S, [1.0 + 2.0 * S], np.ones((len(S), 1)))
    assert classify(data, "c-proper-normal").verdict == "degenerate"
    rep = verify_theorem("T3.2", data)
    assert rep.branch == "i" and rep.passed
    assert rep.to_dict()["condition"]["verdict"] == "degenerate"


@pytest.mark.parametrize("sigma", [1.0, -1.0])
def test_t32_branch_ii(sigma):
    data = synthetic_data(S, [1.0 + S ** 2], np.full((len(S), 1), sigma))
    rep = verify_theorem("T3.2", data)
    assert rep.branch == "ii"
    assert rep.passed, rep.to_dict()
    # lambda = g(-k1'' v2, xi) = -sigma k1''
    assert np.allclose(rep.lambda_, -2.0 * sigma, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.sampled_from([1.0, -1.0]))
def test_t35_constant_curvatures(k1, k2, k3, sigma):
    etas = sigma * unit_rows(np.full(len(S), k1 ** 2 + k2 ** 2), np.zeros(len(S)),
                             np.full(len(S), -k2 * k3))
    data = synthetic_data(S, [k1, k2, k3], etas)
    rep = verify_theorem("T3.5", data)
    assert rep.passed, rep.to_dict()
    assert np.allclose(rep.lambda_, k1 ** 2 * (k1 ** 2 + k2 ** 2) / (k1 * etas[:, 0]))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.sampled_from([1.0, -1.0]))
def test_t36_constant_curvatures(k1, k2, k3, sigma):
    etas = sigma * unit_rows(np.full(len(S), k2), np.zeros(len(S)), np.full(len(S), -k3))
    data = synthetic_data(S, [k1, k2, k3], etas)
    rep = verify_theorem("T3.6", data)
    assert rep.passed, rep.to_dict()


def test_t36_varying_k2():
    k1, k3 = 1.2, 0.7
    k2 = 1.0 + 0.5 * S
    dk2 = 0.5
    etas = unit_rows(k2 ** 2, -dk2 * np.ones(len(S)), -k2 * k3)
    rep = verify_theorem("T3.6", synthetic_data(S, [k1, k2, k3], etas))
    assert rep.passed, rep.to_dict()


def test_t35_rejects_wrong_decomposition():
    # a unit eta that is not proportional to the Delta H coefficients
    etas = unit_rows(np.ones(len(S)), np.ones(len(S)), np.ones(len(S)))
    with pytest.raises(ClassificationFailedError):
        verify_theorem("T3.5", synthetic_data(S, [1.0, 1.0, 1.0], etas))


def test_theorem_data_scalars(ex1):
    data = theorem_data(ex1)
    assert np.allclose(data.g_t_phihT, -1.0)
    assert np.all(data.eta_t == 0)
    # T = (-X + phi X)/sqrt2 at x = ln 2: hT = (-X - phi X)/sqrt2
    assert np.allclose(data.g_t_hT, 0.0) and np.allclose(data.g_hT_hT, 1.0)


def test_theorem_report_json(ex1):
    d = verify_theorem("T3.4", ex1).to_dict()
    json.dumps(d)
    assert d["theorem"] == "T3.4" and d["verdict"] == "pass"
    assert all({"name", "max_violation", "tol"} <= set(c) for c in d["checks"])
