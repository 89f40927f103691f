import math

import numpy as np
import pytest

from conicgeom.cones import Circular, Full, Orthant
from conicgeom.feasibility import (
    DUAL, ILL_POSED, NEITHER, PRIMAL, FeasibilityReport, classify, kinematic_vanishing_prob,
    perturbation_to_primal, renegar,
)
from conicgeom.geometry import circular_profile, indicator_profile, orthant_profile, profile
from conicgeom.numerics import kappa, operator_norm
from conicgeom.restricted import SolverConfig, polyhedral_feasible, restricted_sv


def test_classify_orthants():
    r = classify(-np.eye(2), Orthant(2), Orthant(2))
    assert r.status == PRIMAL
    assert r.dist_primal <= 1e-12 and r.dist_dual == pytest.approx(1)
    r = classify(np.eye(2), Orthant(2), Orthant(2))
    assert r.status == DUAL
    assert r.dist_primal == pytest.approx(1) and r.dist_dual <= 1e-12
    assert r.dual_certificate is not None and r.primal_certificate is None


def test_wide_full_is_primal(rng):
    r = classify(rng.standard_normal((2, 4)), Full(4), Full(2))
    assert r.status == PRIMAL and r.dist_primal == 0


def test_full_square_is_neither(rng):
    r = classify(np.diag([3.0, 1.0]), Full(2), Full(2))
    assert r.status == NEITHER
    assert r.renegar == pytest.approx(3)


@pytest.mark.parametrize("seed", range(10))
def test_one_side_always_feasible(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 3))
    C, D = Circular(3, float(rng.uniform(0.3, 2))), Orthant(4)
    r = classify(A, C, D)
    assert min(r.dist_primal, r.dist_dual) <= r.tol
    assert r.renegar >= 1 - 1e-9


def test_renegar_below_kappa(rng):
    for _ in range(10):
        A = rng.standard_normal((5, 3))
        assert renegar(A, Circular(3, 0.8), Full(5)) <= kappa(A) * (1 + 1e-8)


def test_renegar_symmetry_and_scale(rng):
    A = rng.standard_normal((3, 3))
    C, D = Circular(3, 0.5), Orthant(3)
    assert renegar(A, C, D) == pytest.approx(renegar(-A.T, D, C), rel=1e-6)
    assert renegar(10 * A, C, D) == pytest.approx(renegar(A, C, D), rel=1e-6)


def test_renegar_infinite_on_ill_posed_set(rng):
    # the nearest primal feasible matrix to a dual feasible one is ill-posed
    C, D = Circular(3, 0.6), Circular(4, 0.9)
    while True:
        A = rng.standard_normal((4, 3))
        rep = classify(A, C, D)
        if rep.status == DUAL and rep.dist_primal > 0.1:
            break
    B = A + perturbation_to_primal(A, C, D)
    rep = classify(B, C, D)
    assert rep.status == ILL_POSED
    assert math.isinf(rep.renegar)


def test_zero_matrix_rejected():
    with pytest.raises(ValueError):
        classify(np.zeros((2, 2)), Orthant(2), Orthant(2))


def test_report_text_order():
    rep = FeasibilityReport(0.5, 0.0, DUAL, 2.0, 1.0, 1e-6, None, np.array([1.0, 0.0]))
    keys = [ln.split("=")[0] for ln in rep.to_text().splitlines()]
    assert tuple(keys) == FeasibilityReport.KEYS
    assert "renegar=2.00000000e+00" in rep.to_text()


def test_perturbation_identity_orthant():
    A = np.eye(2)
    dA = perturbation_to_primal(A, Orthant(2), Orthant(2))
    assert operator_norm(dA) == pytest.approx(1)
    assert restricted_sv(A + dA, Orthant(2), Orthant(2)).value <= 1e-6


def test_perturbation_one_dimensional():
    dA = perturbation_to_primal(np.array([[2.5]]), Orthant(1), Orthant(1))
    assert np.allclose(dA, [[-2.5]])


@pytest.mark.parametrize("seed", range(8))
def test_rank_one_perturbation(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 3))
    C, D = Circular(3, 1.0), Circular(4, 1.0)
    d = restricted_sv(A, C, D).value
    if d <= 1e-3:
        pytest.skip("instance already primal feasible")
    dA = perturbation_to_primal(A, C, D)
    assert operator_norm(dA) <= d + 1e-6
    assert restricted_sv(A + dA, C, D).value <= 1e-6


def test_left_projector_form_overshoots():
    # x0 = e1 on the boundary of the orthant; |A^T y0| = sqrt 2 > distance 1
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    C, D = Orthant(2), Full(2)
    d = restricted_sv(A, C, D).value
    assert d == pytest.approx(1)
    bad = perturbation_to_primal(A, C, D, form="left_projector")
    good = perturbation_to_primal(A, C, D)
    assert operator_norm(bad) == pytest.approx(math.sqrt(2))
    assert operator_norm(good) == pytest.approx(1)


def test_perturbation_rejects_feasible():
    with pytest.raises(ValueError):
        perturbation_to_primal(-np.eye(2), Orthant(2), Orthant(2))


def test_kinematic_examples():
    p = kinematic_vanishing_prob(indicator_profile(20, 20), circular_profile(100, 1.0), 20, 100)
    assert 2.5e-6 <= p <= 1e-5
    p = kinematic_vanishing_prob(circular_profile(40, 1.0), circular_profile(100, 1.0), 40, 100)
    assert 5e-5 <= p <= 2e-4
    with pytest.raises(ValueError):
        kinematic_vanishing_prob(indicator_profile(20, 20), indicator_profile(50, 50), 20, 50)


def test_kinematic_small_orthants_against_lp():
    exact = kinematic_vanishing_prob(orthant_profile(2), orthant_profile(1), 2, 1)
    assert exact == pytest.approx(0.75)
    rng = np.random.default_rng(0)
    hits = [polyhedral_feasible(rng.standard_normal((1, 2)), Orthant(2), Orthant(1)) for _ in range(4000)]
    assert abs(np.mean(hits) - exact) < 3 * math.sqrt(exact * (1 - exact) / 4000)


def test_kinematic_full_domain_matches_dimension_count():
    # C = R^m with m > n forces a kernel: probability one
    assert kinematic_vanishing_prob(profile(Full(5)), orthant_profile(3), 5, 3) == pytest.approx(1)


def test_ill_posed_fraction_is_negligible():
    rng = np.random.default_rng(1)
    cfg = SolverConfig(multistarts=16)
    both = 0
    for _ in range(200):
        r = classify(rng.standard_normal((3, 3)), Orthant(3), Circular(3, 0.7), cfg)
        both += r.status == ILL_POSED
    assert both == 0
