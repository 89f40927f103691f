import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conicgeom.cones import (
    Circular, Full, Orthant, PolyhedralV, ZeroCone, coordinate_subspace, polar, project, zero_cone,
)
from conicgeom.numerics import smallest_sv, stream_generator
from conicgeom.restricted import (
    OracleUnavailable, SolverConfig, apply_restricted, format_matrix, oracle_restricted, parse_matrix,
    polyhedral_feasible, restricted_norm, restricted_sv, solve_batch, sphere_grid,
)

FAST = SolverConfig(multistarts=24)


def test_apply_restricted_examples():
    C = D = Orthant(2)
    assert np.allclose(apply_restricted(np.eye(2), C, D, [1, 0]), [1, 0])
    assert np.allclose(apply_restricted(-np.eye(2), C, D, [0, 1]), [0, 0])
    assert np.allclose(apply_restricted(np.array([[1.0], [-3.0]]), Orthant(1), D, [1]), [1, 0])
    with pytest.raises(ValueError):
        apply_restricted(np.eye(2), C, D, [-1, 0])


def test_norm_examples():
    assert restricted_norm(np.diag([2.0, 1]), Orthant(2), Orthant(2)).value == pytest.approx(2)
    assert restricted_norm(np.eye(3), Circular(3, 0.5), Orthant(3)).value == pytest.approx(1)
    g = np.array([[0.3], [-1.2], [2.0]])
    for D in (Orthant(3), Circular(3, 0.7), Full(3)):
        assert restricted_norm(g, Orthant(1), D).value == pytest.approx(np.linalg.norm(project(D, g[:, 0])))


def test_sv_examples():
    assert restricted_sv(np.diag([3.0, 1]), Full(2), Full(2)).value == pytest.approx(1)
    for C in (Orthant(3), Circular(3, 0.4), Circular(4, 2.0)):
        assert restricted_sv(np.eye(C.dim), C, C).value == pytest.approx(1, abs=1e-8)
    A = np.array([[0.0, 1], [0, 0]])
    assert restricted_sv(A, Orthant(2), Full(2)).value <= 1e-9


def test_certificates_verified(rng):
    A = rng.standard_normal((4, 3))
    for kind, fn in (("norm", restricted_norm), ("sv", restricted_sv)):
        r = fn(A, Circular(3, 0.8), Orthant(4))
        assert r.verified and r.kind == kind
        assert np.linalg.norm(r.x_cert) == pytest.approx(1, abs=1e-10)
        assert np.linalg.norm(project(Orthant(4), A @ r.x_cert)) == pytest.approx(r.value, abs=1e-8)


def test_zero_cone_rejected():
    with pytest.raises(ZeroCone):
        restricted_sv(np.eye(2), zero_cone(2), Full(2))
    with pytest.raises(ValueError):
        restricted_norm(np.eye(3), Full(2), Full(3))


def test_full_cones_match_svd(rng):
    for shape in ((5, 3), (3, 3), (2, 4)):
        A = rng.standard_normal(shape)
        s = np.linalg.svd(A, compute_uv=False)
        assert restricted_norm(A, Full(shape[1]), Full(shape[0])).value == pytest.approx(s[0])
        expected = s[-1] if shape[0] >= shape[1] else 0.0
        assert restricted_sv(A, Full(shape[1]), Full(shape[0])).value == pytest.approx(expected, abs=1e-12)
        assert smallest_sv(A) == pytest.approx(s[-1])


def test_batch_is_deterministic(rng):
    A = rng.standard_normal((7, 3, 3))
    a = solve_batch(A, Circular(3, 0.5), Orthant(3), "sv", FAST, stream_generator(1))
    b = solve_batch(A, Circular(3, 0.5), Orthant(3), "sv", FAST, stream_generator(1))
    assert np.array_equal(a.values, b.values)


def test_symmetry_of_norm(rng):
    for _ in range(10):
        A = rng.standard_normal((3, 4))
        C, D = Circular(4, 0.6), Orthant(3)
        assert restricted_norm(A, C, D).value == pytest.approx(restricted_norm(A.T, D, C).value, abs=2e-8)


def test_monotone_in_domain_cone(rng):
    for _ in range(10):
        A = rng.standard_normal((4, 3))
        small, big = Circular(3, 0.3), Circular(3, 1.2)
        D = Orthant(4)
        assert restricted_sv(A, big, D).value <= restricted_sv(A, small, D).value + 1e-8
        assert restricted_norm(A, big, D).value >= restricted_norm(A, small, D).value - 1e-8


def test_orthonormal_columns_angle_identity(rng):
    for _ in range(10):
        Q, _ = np.linalg.qr(rng.standard_normal((5, 3)))
        C, D = Circular(3, 0.7), Circular(5, 1.3)
        s = restricted_sv(Q, C, D).value
        n = restricted_norm(Q, C, polar(D)).value
        assert s ** 2 + n ** 2 == pytest.approx(1, abs=1e-6)


def test_tensor_support_identity(rng):
    # the restricted norm is the max of <A, y x^T> over the two stubs
    A = rng.standard_normal((3, 3))
    C, D = Circular(3, 0.6), Orthant(3)
    val = restricted_norm(A, C, D).value
    G = sphere_grid(3, 40)

    def unit_in(K):
        P = project(K, G)
        n = np.linalg.norm(P, axis=1)
        return P[n > 1e-9] / n[n > 1e-9, None]

    X, Y = unit_in(C), unit_in(D)
    best = np.max(Y @ A @ X.T)
    assert best <= val + 1e-9
    assert best == pytest.approx(val, rel=1e-3)


def test_oracle_examples():
    assert oracle_restricted(np.diag([2.0, 1]), Orthant(2), Orthant(2), "norm") == pytest.approx(2)
    A = np.array([[1.0, -1, 0], [0, 0, 1], [1, -1, 0]])
    assert oracle_restricted(A, Orthant(3), Full(3), "sv") <= 1e-9
    with pytest.raises(OracleUnavailable):
        oracle_restricted(np.eye(6), Circular(6, 1.0), Circular(6, 1.0), "sv")


@pytest.mark.parametrize("seed", range(6))
def test_solver_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 3))
    C, D = Circular(3, float(rng.uniform(0.3, 2))), Circular(3, float(rng.uniform(0.3, 2)))
    for kind, fn in (("norm", restricted_norm), ("sv", restricted_sv)):
        o = oracle_restricted(A, C, D, kind)
        v = fn(A, C, D).value
        assert abs(v - o) <= 1e-3 * max(o, 1e-3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 6))
def test_zero_sv_iff_polyhedral_feasible(seed, m, n):
    rng = np.random.default_rng(seed)
    C = PolyhedralV(m, rng.standard_normal((m, int(rng.integers(1, 5)))))
    D = PolyhedralV(n, rng.standard_normal((n, int(rng.integers(1, 5)))))
    A = rng.standard_normal((n, m))
    sv = oracle_restricted(A, C, D, "sv")
    assert (sv <= 1e-9) == polyhedral_feasible(A, C, D)


def test_subspace_shortcut(rng):
    A = rng.standard_normal((4, 4))
    C, D = coordinate_subspace(4, 2), coordinate_subspace(4, 3)
    s = np.linalg.svd(A[:3, :2], compute_uv=False)
    assert restricted_norm(A, C, D).value == pytest.approx(s[0])
    assert restricted_sv(A, C, D).value == pytest.approx(s[-1])


def test_matrix_roundtrip(rng):
    A = rng.standard_normal((3, 2))
    assert np.array_equal(parse_matrix(format_matrix(A)), A)
    with pytest.raises(ValueError):
        parse_matrix("# 2 2\n1 2\n3\n")
    with pytest.raises(ValueError):
        parse_matrix("1 2\n")
