import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from conicgeom.numerics import (
    ChiDist, QuadratureConfig, SeededSampler, chi_cdf, chi_moment, chi_pdf, chi_sf, chi_tail_cut,
    gauss_matrix, gauss_vector, jacobi_singular_values, kappa, log_gamma, mixed_chi_tail,
    operator_norm, singular_values, smallest_sv, stream_generator,
)


@pytest.mark.parametrize("x, expected", [(1, 0.0), (0.5, 0.5723649429), (10, 12.8018274801)])
def test_log_gamma_values(x, expected):
    assert log_gamma(x) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("x", [0, -1.5])
def test_log_gamma_rejects_nonpositive(x):
    with pytest.raises(ValueError):
        log_gamma(x)


@pytest.mark.parametrize("k, r, expected", [(1, 1, math.sqrt(2 / math.pi)), (2, 2, 2.0), (0, 3, 0.0), (0, 0, 1.0)])
def test_chi_moment_values(k, r, expected):
    assert chi_moment(k, r) == pytest.approx(expected, abs=1e-10)


def test_chi_second_moment_is_dof():
    for k in range(201):
        assert abs(chi_moment(k, 2) - k) <= 1e-10 * max(1, k)


def test_chi_cdf_examples():
    assert chi_cdf(0, 0.5) == 1.0
    assert chi_cdf(1, 1.0) == pytest.approx(0.6826895, abs=1e-7)
    assert chi_cdf(2, math.sqrt(2 * math.log(2))) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 7, 20, 100])
def test_chi_matches_scipy(k):
    x = np.linspace(0, 15, 61)
    assert np.allclose(chi_cdf(k, x), stats.chi.cdf(x, k), atol=1e-13)
    assert np.allclose(chi_pdf(k, x), stats.chi.pdf(x, k), atol=1e-12)
    assert np.allclose(chi_sf(k, x), stats.chi.sf(x, k), atol=1e-13)


@pytest.mark.parametrize("k", [1, 2, 5, 40, 200])
def test_chi_pdf_integrates_to_one(k):
    val, _ = integrate.quad(lambda x: chi_pdf(k, x), 0, chi_tail_cut(k), limit=400, epsabs=1e-13,
                            points=[math.sqrt(max(k - 1, 0))])
    assert abs(val - 1) <= 1e-10


def test_chi_zero_dof_is_atom():
    assert chi_sf(0, 0.0) == 1.0
    assert chi_sf(0, 0.0, strict=True) == 0.0
    assert ChiDist(0).moment(1) == 0.0


@pytest.mark.parametrize("i, j, lam, sign, expected", [
    (0, 0, 0.5, "+", 0.0),
    (0, 2, 1.0, "+", math.exp(-0.5)),
    (1, 1, 0.0, "-", 0.5),
])
def test_mixed_chi_tail_examples(i, j, lam, sign, expected):
    assert mixed_chi_tail(i, j, lam, sign) == pytest.approx(expected, abs=1e-9)


def test_mixed_chi_tail_against_mc():
    rng = np.random.default_rng(1)
    a = np.sqrt(rng.chisquare(3, 200_000))
    b = np.sqrt(rng.chisquare(5, 200_000))
    for lam in (0.5, 2.0, 3.5):
        for sign, s in (("+", a + b), ("-", b - a)):
            p = (s >= lam).mean()
            assert abs(mixed_chi_tail(3, 5, lam, sign) - p) < 4 * math.sqrt(p * (1 - p) / 200_000) + 1e-4


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 12), st.integers(0, 12), st.sampled_from(["+", "-"]))
def test_mixed_chi_tail_monotone_in_unit_interval(i, j, sign):
    grid = np.linspace(-3, 8, 23)
    vals = np.array([mixed_chi_tail(i, j, x, sign) for x in grid])
    assert np.all((vals >= 0) & (vals <= 1))
    assert np.all(np.diff(vals) <= 1e-10)


def test_quadrature_config_validates():
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0)


def test_sampler_determinism():
    a = gauss_vector(SeededSampler(0, 0), 3)
    b = gauss_vector(SeededSampler(0, 0), 3)
    c = gauss_vector(SeededSampler(0, 1), 3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.array_equal(stream_generator(4, 2, 9).standard_normal(5), stream_generator(4, 2, 9).standard_normal(5))


def test_sampler_moments():
    x = SeededSampler(7, 0).generator().standard_normal(100_000)
    assert abs(x.mean()) < 4 / math.sqrt(1e5)
    assert abs(x.var() - 1) < 0.05
    assert gauss_matrix(SeededSampler(7, 3), 4, 2).shape == (4, 2)


def test_matrix_norm_examples():
    assert kappa(np.diag([1.0, 2, 2])) == pytest.approx(2)
    assert operator_norm(np.eye(5)) == pytest.approx(1)
    assert smallest_sv(np.eye(5)) == pytest.approx(1)
    assert smallest_sv(np.array([[1.0, 0], [0, 1], [0, 0]])) == pytest.approx(1)


def test_kappa_rank_deficient_is_infinite():
    assert math.isinf(kappa(np.array([[1.0, 1], [1, 1]])))
    with pytest.raises(ValueError):
        kappa(np.zeros((2, 2)))


def test_kappa_is_norm_times_inverse_norm(rng):
    for _ in range(20):
        n = int(rng.integers(1, 21))
        A = rng.standard_normal((n, n)) + 3 * np.eye(n)
        assert kappa(A) == pytest.approx(operator_norm(A) * operator_norm(np.linalg.inv(A)), rel=1e-8)


@pytest.mark.parametrize("shape", [(1, 1), (3, 5), (6, 2), (12, 12)])
def test_jacobi_matches_lapack(rng, shape):
    A = rng.standard_normal(shape)
    assert np.allclose(jacobi_singular_values(A), singular_values(A), atol=1e-12)
