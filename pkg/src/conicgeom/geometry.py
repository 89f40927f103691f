"""Conic intrinsic volumes and the quantities built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import solve_triangular

from .cones import (Circular, Cone, Full, LinearImage, Orthant, Polar, PolyhedralH, PolyhedralV,
                    Product, Subspace, _signed_identity, normalize, polar, project)
from .numerics import (DEFAULT_QUAD, QuadratureConfig, chi_moment, chi_pdf, chi_sf, chi_tail_cut,
                       quad, stream_generator)


class UnsupportedProfile(ValueError):
    pass


@dataclass
class IntrinsicVolumeProfile:
    """Intrinsic volumes v_0..v_m of a cone in R^m, a probability vector."""
    v: np.ndarray
    m: int

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if v.size != self.m + 1:
            raise ValueError(f"profile for R^{self.m} needs {self.m + 1} entries, got {v.size}")
        if np.any(v < -1e-12):
            raise ValueError("intrinsic volumes must be nonnegative")
        v = np.maximum(v, 0.0)
        if abs(v.sum() - 1.0) > 1e-9:
            raise ValueError(f"intrinsic volumes sum to {v.sum():.12g}, not 1")
        self.v = v

    @property
    def sdim(self) -> float:
        return float(np.arange(self.m + 1) @ self.v)

    def reversed(self) -> "IntrinsicVolumeProfile":
        return IntrinsicVolumeProfile(self.v[::-1].copy(), self.m)

    def to_text(self) -> str:
        return f"# {self.m}\n" + "".join(f"{x:.9e}\n" for x in self.v)

    @classmethod
    def from_text(cls, text: str) -> "IntrinsicVolumeProfile":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise ValueError("profile text must start with a '# m' header")
        m = int(lines[0][1:].split()[0])
        vals = [float(ln) for ln in lines[1:] if not ln.startswith("#")]
        return cls(np.array(vals), m)


def indicator_profile(m: int, k: int) -> IntrinsicVolumeProfile:
    v = np.zeros(m + 1)
    v[k] = 1.0
    return IntrinsicVolumeProfile(v, m)


def orthant_profile(m: int) -> IntrinsicVolumeProfile:
    v = np.array([math.comb(m, k) for k in range(m + 1)], dtype=float) / 2.0 ** m
    return IntrinsicVolumeProfile(v, m)


def circular_profile(m: int, t: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> IntrinsicVolumeProfile:
    """Intrinsic volumes of C_m(t) = {x : |x[1:]| <= t x[0]}.

    For 1 <= j <= m-1,
        v_j = Gamma(m/2) t^{j-1} / (2 Gamma((j+1)/2) Gamma((m-j+1)/2) (1+t^2)^{(m-2)/2}),
    v_m is the normalized integral of tau^{m-2} / (1+tau^2)^{m/2} over [0, t],
    and v_0 closes the distribution.
    """
    if m < 2 or not t > 0:
        raise ValueError("circular profile needs m >= 2 and t > 0")
    v = np.zeros(m + 1)
    lt, l1 = math.log(t), math.log1p(t * t)
    for j in range(1, m):
        v[j] = math.exp(math.lgamma(m / 2) + (j - 1) * lt - math.log(2.0) - math.lgamma((j + 1) / 2)
                        - math.lgamma((m - j + 1) / 2) - 0.5 * (m - 2) * l1)
    logc = math.lgamma(m / 2) - 0.5 * math.log(math.pi) - math.lgamma((m - 1) / 2)
    if m == 2:
        integrand = lambda tau: 1.0 / (1.0 + tau * tau)
    else:
        integrand = lambda tau: math.exp((m - 2) * math.log(tau) - 0.5 * m * math.log1p(tau * tau)) if tau > 0 else 0.0
    v[m] = math.exp(logc) * quad(integrand, 0.0, t, QuadratureConfig(1e-15, cfg.max_subdivisions, cfg.tail_mass))
    v[0] = 1.0 - v[1:].sum()
    return IntrinsicVolumeProfile(v, m)


def product_profile(profiles) -> IntrinsicVolumeProfile:
    v = np.ones(1)
    m = 0
    for p in profiles:
        v = np.convolve(v, p.v)
        m += p.m
    return IntrinsicVolumeProfile(v / v.sum(), m)


def _rank(M):
    return 0 if M.shape[1] == 0 else int(np.linalg.matrix_rank(M, tol=1e-8))


def mc_face_profile(C: Cone, samples: int = 100_000, seed: int = 0, tol: float = 1e-8,
                    batch: int = 20_000) -> IntrinsicVolumeProfile:
    """Monte Carlo intrinsic volumes of a polyhedral cone: the frequency with
    which Proj_C(g) lies in the relative interior of a k-dimensional face."""
    C = normalize(C)
    m = C.dim
    if isinstance(C, Orthant):
        V, N = np.eye(m), None
    elif isinstance(C, PolyhedralV):
        V, N = C.generators, None
    elif isinstance(C, PolyhedralH):
        V, N = None, C.normals
    else:
        raise UnsupportedProfile(f"face sampling needs a polyhedral cone, got {C!r}")
    rng = stream_generator(seed)
    counts = np.zeros(m + 1)
    cache: dict[bytes, int] = {}
    done = 0
    while done < samples:
        b = min(batch, samples - done)
        G = rng.standard_normal((b, m))
        P = project(C, G)
        scale = np.maximum(1.0, np.linalg.norm(G, axis=1))[:, None]
        if V is not None:
            tight = np.abs((G - P) @ V) <= tol * scale
        else:
            tight = np.abs(P @ N) <= tol * scale
        keys = np.packbits(tight, axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        dims = np.empty(len(uniq), dtype=int)
        for u, key in enumerate(uniq):
            kb = key.tobytes()
            if kb not in cache:
                mask = np.unpackbits(key)[: tight.shape[1]].astype(bool)
                cache[kb] = _rank(V[:, mask]) if V is not None else m - _rank(N[:, mask])
            dims[u] = cache[kb]
        counts += np.bincount(dims[inv.reshape(-1)], minlength=m + 1)
        done += b
    return IntrinsicVolumeProfile(counts / samples, m)


def profile(C, samples: int = 200_000, seed: int = 0) -> IntrinsicVolumeProfile:
    """Intrinsic volumes of a cone: closed forms where known, convolution for
    products, reversal for polars, face sampling for general polyhedra."""
    if isinstance(C, IntrinsicVolumeProfile):
        return C
    C = normalize(C)
    m = C.dim
    if isinstance(C, Full):
        return indicator_profile(m, m)
    if isinstance(C, Subspace):
        return indicator_profile(m, C.rank)
    if isinstance(C, Orthant):
        return orthant_profile(m)
    if isinstance(C, Circular):
        return circular_profile(m, C.t)
    if isinstance(C, Product):
        return product_profile([profile(p, samples, seed) for p in C.parts])
    if isinstance(C, Polar):
        return profile(C.inner, samples, seed).reversed()
    if isinstance(C, (PolyhedralV, PolyhedralH)):
        M = C.generators if isinstance(C, PolyhedralV) else C.normals
        sgn = _signed_identity(M)
        if sgn is not None:
            return orthant_profile(m)
        return mc_face_profile(C, samples, seed)
    raise UnsupportedProfile(f"no intrinsic volumes available for {C!r}")


def sdim(C) -> float:
    return profile(C).sdim


def chi_means(m: int) -> np.ndarray:
    return np.array([chi_moment(k, 1) for k in range(m + 1)])


def gwidth_sq(C) -> float:
    p = profile(C)
    return float(chi_means(p.m) @ p.v) ** 2


def nu_r(C, r: float) -> float:
    """E |Proj_C(g)|^r from the intrinsic volumes."""
    p = profile(C)
    return float(sum(p.v[j] * chi_moment(j, r) for j in range(p.m + 1)))


# --- moment functions --------------------------------------------------------

@dataclass(frozen=True)
class MomentFunction:
    """A real function applied to support-function values.

    ``power(r)`` is x -> max(x, 0)^r, ``step(lam)`` is the indicator of
    x >= lam and ``exp_scaled(beta)`` is x -> exp(beta x).  Tabulated
    functions interpolate linearly and extrapolate flat.
    """
    kind: str
    param: float = 0.0
    table: tuple | None = None

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def power(cls, r: float):
        if r < 0:
            raise ValueError("power needs r >= 0")
        return cls("power", float(r))

    @classmethod
    def exp_scaled(cls, beta: float):
        return cls("exp_scaled", float(beta))

    @classmethod
    def step(cls, lam: float):
        return cls("step", float(lam))

    @classmethod
    def custom(cls, xs, ys):
        xs, ys = tuple(float(x) for x in xs), tuple(float(y) for y in ys)
        if len(xs) != len(ys) or len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("custom table needs increasing abscissae and matching values")
        return cls("custom", table=(xs, ys))

    @property
    def monotone(self) -> bool:
        if self.kind in ("identity", "power", "step"):
            return True
        if self.kind == "exp_scaled":
            return self.param >= 0
        ys = self.table[1]
        return all(b >= a for a, b in zip(ys, ys[1:]))

    @property
    def convex(self) -> bool:
        if self.kind in ("identity", "exp_scaled"):
            return True
        if self.kind == "power":
            return self.param >= 1 or self.param == 0
        if self.kind == "step":
            return False
        xs, ys = self.table
        slopes = [(ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) for i in range(len(xs) - 1)]
        # flat extrapolation adds slope 0 at both ends
        slopes = [0.0] + slopes + [0.0]
        return all(b >= a - 1e-15 for a, b in zip(slopes, slopes[1:]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x
        if self.kind == "power":
            if self.param == 0:
                return np.ones_like(x)
            return np.maximum(x, 0.0) ** self.param
        if self.kind == "exp_scaled":
            return np.exp(self.param * x)
        if self.kind == "step":
            return (x >= self.param).astype(float)
        xs, ys = self.table
        return np.interp(x, xs, ys)

    def ball_moment(self, j: int, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
        """E f(chi_j), the moment functional of the unit ball B^j."""
        if j == 0:
            return float(self(0.0))
        if self.kind == "identity":
            return chi_moment(j, 1)
        if self.kind == "power":
            return chi_moment(j, self.param)
        if self.kind == "step":
            return float(chi_sf(j, self.param))
        cut = chi_tail_cut(j, cfg.tail_mass)
        pts = list(self.table[0]) if self.table else None
        return quad(lambda x: float(self(x)) * chi_pdf(j, x), 0.0, cut,
                    QuadratureConfig(1e-12, 500, cfg.tail_mass), points=pts)


def moment_functional(f: MomentFunction, C) -> float:
    """E f(|Proj_C(g)|) = sum_j v_j(C) E f(chi_j)."""
    p = profile(C)
    return float(sum(p.v[j] * f.ball_moment(j) for j in range(p.m + 1) if p.v[j] > 0))


# --- Euclidean volumes of cone stubs ---------------------------------------

def ball_volume(k: int) -> float:
    return math.pi ** (k / 2) / math.gamma(1 + k / 2)


def _stub_matrix(m: int) -> np.ndarray:
    M = np.zeros((m + 1, m + 1))
    for i in range(m + 1):
        for j in range(i, m + 1):
            M[i, j] = math.comb(j, i) * ball_volume(j) / ball_volume(j - i)
    return M


def stub_euclidean_volumes(p: IntrinsicVolumeProfile) -> np.ndarray:
    """Euclidean intrinsic volumes V_0..V_m of the cone stub C with the unit ball."""
    return _stub_matrix(p.m) @ p.v


def profile_from_stub_volumes(V, m: int) -> IntrinsicVolumeProfile:
    v = solve_triangular(_stub_matrix(m), np.asarray(V, dtype=float), lower=False)
    return IntrinsicVolumeProfile(v, m)


# --- Steiner-type identities ------------------------------------------------

def _pair_expectation(f, i, k, cfg):
    """E f(chi_i, chi'_k) for independent chi variables."""
    if i == 0 and k == 0:
        return float(f(0.0, 0.0))
    if k == 0:
        return quad(lambda a: float(f(a, 0.0)) * chi_pdf(i, a), 0.0, chi_tail_cut(i), cfg)
    if i == 0:
        return quad(lambda b: float(f(0.0, b)) * chi_pdf(k, b), 0.0, chi_tail_cut(k), cfg)
    val, _ = integrate.dblquad(lambda b, a: float(f(a, b)) * chi_pdf(i, a) * chi_pdf(k, b),
                               0.0, chi_tail_cut(i), 0.0, chi_tail_cut(k),
                               epsabs=1e-10, epsrel=1e-10)
    return float(val)


def generalized_steiner_formula(f, C, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """sum_i v_i(C) E f(chi_i, chi'_{m-i})."""
    p = profile(C)
    cfg = QuadratureConfig(1e-11, 500, cfg.tail_mass)
    return float(sum(p.v[i] * _pair_expectation(f, i, p.m - i, cfg)
                     for i in range(p.m + 1) if p.v[i] > 0))


def mc_generalized_steiner(f, C: Cone, trials: int, seed: int, batch: int = 50_000):
    """Sample mean of f(|Proj_C g|, |Proj_{C polar} g|) next to the intrinsic
    volume formula.  Returns (mc_value, formula_value, std_err)."""
    rng = stream_generator(seed)
    vals = np.empty(trials)
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        G = rng.standard_normal((b, C.dim))
        P = project(C, G)
        vals[done:done + b] = f(np.linalg.norm(P, axis=1), np.linalg.norm(G - P, axis=1))
        done += b
    se = float(vals.std(ddof=1) / math.sqrt(trials))
    return float(vals.mean()), generalized_steiner_formula(f, C), se


def circular_quotient(m: int, t, s: float, r: float):
    """s^r nu_r(C_m(t)) / nu_r(C_m(s t)); T = diag(1, s, ..., s) maps C_m(t)
    onto C_m(s t) and has condition number s."""
    if m < 2 or not s > 0:
        raise ValueError("need m >= 2 and s > 0")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(ts)
    mom = np.array([chi_moment(j, r) for j in range(m + 1)])
    for i, tv in enumerate(ts):
        num = circular_profile(m, tv).v @ mom
        den = circular_profile(m, s * tv).v @ mom
        out[i] = s ** r * num / den
    return out if np.ndim(t) else float(out[0])


DEFAULT_T_GRID = np.round(np.arange(1, 101) * 0.01, 10)
