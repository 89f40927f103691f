"""Special functions, chi distributions, quadrature helpers, seeded sampling
and small dense spectral routines."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature misses its tolerance."""


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    max_subdivisions: int = 200
    tail_mass: float = 1e-14

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureConfig()


def log_gamma(x: float) -> float:
    if not x > 0:
        raise ValueError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def _check_dof(k):
    if int(k) != k or k < 0:
        raise ValueError(f"degrees of freedom must be a nonnegative integer, got {k}")
    return int(k)


def chi_moment(k: int, r: float) -> float:
    """E[chi_k^r] = 2^{r/2} Gamma((k+r)/2) / Gamma(k/2)."""
    k = _check_dof(k)
    if r < 0:
        raise ValueError("r must be >= 0")
    if k == 0:
        return 1.0 if r == 0 else 0.0
    if r == 0:
        return 1.0
    return math.exp(0.5 * r * math.log(2.0) + math.lgamma(0.5 * (k + r)) - math.lgamma(0.5 * k))


def chi_cdf(k: int, x):
    """P{chi_k <= x}. The k = 0 law is the point mass at the origin."""
    k = _check_dof(k)
    x = np.asarray(x, dtype=float)
    if k == 0:
        out = (x >= 0).astype(float)
    else:
        xp = np.maximum(x, 0.0)
        out = np.where(x > 0, special.gammainc(0.5 * k, 0.5 * xp * xp), 0.0)
    return out if out.ndim else float(out)


def chi_sf(k: int, x, strict: bool = False):
    """P{chi_k >= x}, or P{chi_k > x} when ``strict``."""
    k = _check_dof(k)
    x = np.asarray(x, dtype=float)
    if k == 0:
        out = ((0.0 > x) if strict else (0.0 >= x)).astype(float)
    else:
        xp = np.maximum(x, 0.0)
        out = np.where(x > 0, special.gammaincc(0.5 * k, 0.5 * xp * xp), 1.0)
    return out if out.ndim else float(out)


def chi_pdf(k: int, x):
    """Density of chi_k. For k = 0 there is no density; zero is returned."""
    k = _check_dof(k)
    x = np.asarray(x, dtype=float)
    if k == 0:
        out = np.zeros_like(x)
    else:
        with np.errstate(divide="ignore"):
            lx = np.log(np.where(x > 0, x, 1.0))
        logc = (1.0 - 0.5 * k) * math.log(2.0) - math.lgamma(0.5 * k)
        out = np.where(x > 0, np.exp(logc + (k - 1) * lx - 0.5 * x * x), 0.0)
        if k == 1:
            out = np.where(x == 0, math.sqrt(2.0 / math.pi), out)
    return out if out.ndim else float(out)


def chi_tail_cut(k: int, mass: float = 1e-14) -> float:
    """Point beyond which chi_k carries less than ``mass``."""
    k = _check_dof(k)
    if k == 0:
        return 0.0
    return math.sqrt(2.0 * special.gammainccinv(0.5 * k, mass))


@dataclass(frozen=True)
class ChiDist:
    k: int

    def __post_init__(self):
        _check_dof(self.k)

    def pdf(self, x):
        return chi_pdf(self.k, x)

    def cdf(self, x):
        return chi_cdf(self.k, x)

    def sf(self, x, strict=False):
        return chi_sf(self.k, x, strict)

    def moment(self, r):
        return chi_moment(self.k, r)

    def tail_cut(self, mass=1e-14):
        return chi_tail_cut(self.k, mass)


def quad(fn, a, b, cfg: QuadratureConfig = DEFAULT_QUAD, points=None) -> float:
    """Adaptive quadrature that raises instead of silently losing accuracy."""
    if b <= a:
        return 0.0
    pts = None
    if points is not None:
        pts = [p for p in points if a < p < b] or None
    val, err, *rest = integrate.quad(fn, a, b, epsabs=cfg.abs_tol, epsrel=0.0,
                                     limit=cfg.max_subdivisions, points=pts, full_output=1)
    if len(rest) >= 2 and err > 10 * cfg.abs_tol and err > 1e-12 * abs(val):
        raise QuadratureError(f"quadrature did not converge on [{a}, {b}], error estimate {err:.3e}")
    return float(val)


def mixed_chi_tail(i: int, j: int, lam: float, sign: str = "+", strict: bool = False,
                   cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """P{chi'_j + chi_i >= lam} (sign '+') or P{chi'_j - chi_i >= lam} (sign '-')
    for independent chi variables; ``strict`` switches to '>'."""
    i, j = _check_dof(i), _check_dof(j)
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    lam = float(lam)
    if i == 0:
        return float(chi_sf(j, lam, strict))
    if j == 0:
        if sign == "+":
            return float(chi_sf(i, lam, strict))
        # P{-chi_i >= lam} = P{chi_i <= -lam}; continuous for i >= 1
        return float(chi_cdf(i, -lam))
    cut = chi_tail_cut(i, cfg.tail_mass)
    if sign == "+":
        fn = lambda x: chi_pdf(i, x) * chi_sf(j, lam - x)
        val = quad(fn, 0.0, cut, cfg, points=[lam])
    else:
        fn = lambda x: chi_pdf(i, x) * chi_sf(j, lam + x)
        val = quad(fn, 0.0, cut, cfg, points=[-lam])
    return min(1.0, max(0.0, val))


# --- seeded sampling -------------------------------------------------------

@dataclass(frozen=True)
class SeededSampler:
    """A reproducible Gaussian stream keyed by (master_seed, stream_index).

    Backed by a counter-based Philox generator whose key is derived through
    ``numpy.random.SeedSequence``; distinct stream indices give independent
    streams and the output does not depend on platform or thread.
    """
    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        return stream_generator(self.master_seed, self.stream_index)


def stream_generator(seed: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) % (1 << 64), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def gauss_vector(sampler: SeededSampler, dim: int) -> np.ndarray:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return sampler.generator().standard_normal(dim)


def gauss_matrix(sampler: SeededSampler, n: int, m: int) -> np.ndarray:
    if n < 1 or m < 1:
        raise ValueError("matrix dimensions must be >= 1")
    return sampler.generator().standard_normal((n, m))


# --- spectral helpers ------------------------------------------------------

def singular_values(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if max(A.shape) > 512:
        raise ValueError("spectral routines are limited to 512x512")
    return np.linalg.svd(A, compute_uv=False)


def jacobi_singular_values(A, tol: float = 1e-15, max_sweeps: int = 60) -> np.ndarray:
    """One-sided Jacobi SVD (singular values only, descending).

    Kept as an independent cross-check of the LAPACK path.
    """
    U = np.array(A, dtype=float, copy=True)
    if U.shape[0] < U.shape[1]:
        U = U.T.copy()
    n = U.shape[1]
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                a = U[:, p] @ U[:, p]
                b = U[:, q] @ U[:, q]
                c = U[:, p] @ U[:, q]
                if abs(c) <= tol * math.sqrt(a * b) or c == 0.0:
                    continue
                off = max(off, abs(c) / math.sqrt(a * b))
                zeta = (b - a) / (2.0 * c)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / math.sqrt(1.0 + t * t)
                sn = cs * t
                up = U[:, p].copy()
                U[:, p] = cs * up - sn * U[:, q]
                U[:, q] = sn * up + cs * U[:, q]
        if off <= tol:
            break
    return np.sort(np.linalg.norm(U, axis=0))[::-1]


def operator_norm(A) -> float:
    s = singular_values(A)
    return float(s[0]) if s.size else 0.0


def smallest_sv(A) -> float:
    """max{sigma(A), sigma(A^T)}: the smallest of the min(n, m) singular values."""
    s = singular_values(A)
    return float(s[-1]) if s.size else 0.0


def kappa(A) -> float:
    s = singular_values(A)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("condition number of the zero matrix is undefined")
    A = np.atleast_2d(A)
    if s[-1] <= s[0] * max(A.shape) * np.finfo(float).eps:
        return math.inf
    return float(s[0] / s[-1])
