"""Tail and distribution bounds for restricted norms and singular values of
Gaussian matrices, the empirical curves they are compared with, and Monte
Carlo checkers for the underlying Gaussian comparison inequalities."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .cones import Circular, Cone, Full, LinearImage, UnsupportedProjection, normalize, project
from .feasibility import renegar
from .geometry import IntrinsicVolumeProfile, MomentFunction, gwidth_sq, profile
from .numerics import chi_pdf, chi_sf, chi_tail_cut, kappa, mixed_chi_tail, operator_norm, stream_generator
from .restricted import SolverConfig, draw_starts, solve_batch

KINDS = ("conc_norm", "conc_sv", "iv_norm", "iv_sv", "empirical_cdf_sv", "empirical_tail_norm")
CHUNK = 100
RHS_STREAM = 1 << 40


class HypothesisViolation(ValueError):
    """The moment function does not meet the inequality's assumptions."""


def fmt(x: float) -> str:
    return f"{x:.8e}"


@dataclass
class BoundCurve:
    grid: np.ndarray
    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values differ in length")

    def to_table(self) -> str:
        return "".join(f"{fmt(a)} {fmt(b)}\n" for a, b in zip(self.grid, self.values))

    @classmethod
    def from_table(cls, text: str, kind: str = "", meta: dict | None = None) -> "BoundCurve":
        rows = np.array([[float(v) for v in ln.split()] for ln in text.splitlines() if ln.strip()])
        return cls(rows[:, 0], rows[:, 1], kind, dict(meta or {}))


@dataclass
class InequalityCheck:
    lhs_mean: float
    rhs_mean: float
    lhs_se: float
    rhs_se: float
    satisfied_within: float


def _check(lhs: np.ndarray, rhs: np.ndarray, lhs_small: bool) -> InequalityCheck:
    lm, rm = float(lhs.mean()), float(rhs.mean())
    ls, rs = float(lhs.std(ddof=1) / math.sqrt(lhs.size)), float(rhs.std(ddof=1) / math.sqrt(rhs.size))
    margin = (rm - lm) if lhs_small else (lm - rm)
    pooled = math.hypot(ls, rs)
    if pooled > 0:
        within = margin / pooled
    else:
        within = 0.0 if margin == 0 else math.copysign(1e12, margin)
    return InequalityCheck(lm, rm, ls, rs, within)


def default_grid(kind: str, dstar_C: float, dstar_D: float, points: int = 200) -> np.ndarray:
    a, b = math.sqrt(dstar_C), math.sqrt(dstar_D)
    hi = max(b - a + 4.0, 1.0) if kind.endswith("sv") else a + b + 6.0
    return np.linspace(0.0, hi, points)


# --- closed-form bound curves ------------------------------------------------

def conc_bound(kind: str, lam_grid, dstar_C: float, dstar_D: float) -> BoundCurve:
    """Gaussian concentration around the comparison means sqrt(d*_D) +- sqrt(d*_C)."""
    if dstar_C < 0 or dstar_D < 0:
        raise ValueError("squared Gaussian widths must be nonnegative")
    lam = np.asarray(lam_grid, dtype=float)
    a, b = math.sqrt(dstar_C), math.sqrt(dstar_D)
    if kind == "norm":
        vals = np.exp(-np.maximum(0.0, lam - b - a) ** 2 / 2)
    elif kind == "sv":
        vals = np.exp(-np.maximum(0.0, b - a - lam) ** 2 / 2)
    else:
        raise ValueError("kind must be 'norm' or 'sv'")
    return BoundCurve(lam, vals, f"conc_{kind}", {"dstar_C": dstar_C, "dstar_D": dstar_D})


def _mixture_sf(pD: IntrinsicVolumeProfile, y: np.ndarray, strict: bool) -> np.ndarray:
    """P{X_D >= y} (or > y) where X_D = |Proj_D g|, from the chi mixture."""
    y = np.asarray(y, dtype=float)
    j = np.flatnonzero(pD.v[1:] > 0) + 1
    yp = np.maximum(y, 0.0)
    tails = special.gammaincc(0.5 * j[:, None], 0.5 * (yp * yp)[None, :])
    tails = np.where(y[None, :] > 0, tails, 1.0)
    out = pD.v[j] @ tails
    atom = (0.0 > y) if strict else (0.0 >= y)
    return out + pD.v[0] * atom


def _mixture_pdf(pC: IntrinsicVolumeProfile, x: float) -> float:
    return float(sum(pC.v[i] * chi_pdf(i, x) for i in range(1, pC.m + 1) if pC.v[i] > 0))


def _mixture_tail(pC, pD, lam, sign, strict, epsabs=1e-11):
    """P{X_D + X_C >= lam} (sign '+') or P{X_D - X_C > lam} style tails with
    independent X_C, X_D; vectorized over lam."""
    lam = np.asarray(lam, dtype=float)
    out = pC.v[0] * _mixture_sf(pD, lam, strict)
    idx = [i for i in range(1, pC.m + 1) if pC.v[i] > 0]
    if not idx:
        return out
    cut = max(chi_tail_cut(i) for i in idx)
    s = -1.0 if sign == "+" else 1.0

    def integrand(x):
        return _mixture_pdf(pC, x) * _mixture_sf(pD, lam + s * x, strict)

    pts = [p for p in (lam if sign == "+" else []) if 0 < p < cut]
    val, _err = integrate.quad_vec(integrand, 0.0, cut, epsabs=epsabs, epsrel=0.0,
                                   points=pts or None, limit=20_000)
    return out + val


def iv_bound(kind: str, lam_grid, pC: IntrinsicVolumeProfile, pD: IntrinsicVolumeProfile,
             method: str = "mixture") -> BoundCurve:
    """Intrinsic-volume bounds.

    norm: min{1, 2 sum_ij v_i(C) v_j(D) P{chi_j + chi'_i >= lam}}, a bound on P{|G|_{C->D} >= lam}.
    sv:   min{1, 2 sum_ij v_i(C) v_j(D) P{chi_j - chi'_i <= lam}}, a bound on P{sigma_{C->D}(G) <= lam}.

    ``method='terms'`` evaluates the double sum term by term; the default
    integrates the chi mixtures once for the whole grid.
    """
    lam = np.asarray(lam_grid, dtype=float)
    if kind not in ("norm", "sv"):
        raise ValueError("kind must be 'norm' or 'sv'")
    if method == "terms":
        vals = np.zeros_like(lam)
        for i in np.flatnonzero(pC.v > 0):
            for j in np.flatnonzero(pD.v > 0):
                w = pC.v[i] * pD.v[j]
                if kind == "norm":
                    vals += w * np.array([mixed_chi_tail(i, j, x, "+") for x in lam])
                else:
                    vals += w * (1.0 - np.array([mixed_chi_tail(i, j, x, "-", strict=True) for x in lam]))
    elif method == "mixture":
        if kind == "norm":
            vals = _mixture_tail(pC, pD, lam, "+", strict=False)
        else:
            vals = 1.0 - _mixture_tail(pC, pD, lam, "-", strict=True)
    else:
        raise ValueError("method must be 'mixture' or 'terms'")
    vals = np.clip(2.0 * vals, 0.0, 1.0)
    # remove quadrature jitter so the curves are exactly monotone
    vals = np.minimum.accumulate(vals) if kind == "norm" else np.maximum.accumulate(vals)
    return BoundCurve(lam, vals, f"iv_{kind}", {"m": pC.m, "n": pD.m})


# --- Monte Carlo machinery ----------------------------------------------------

def _chunks(trials: int, size: int):
    return [(c, min(size, trials - c * size)) for c in range(math.ceil(trials / size))]


def gaussian_solve(kind: str, C: Cone, D: Cone, n: int, m: int, trials: int, seed: int,
                   cfg: SolverConfig | None = None, workers: int = 1, stream: int = 0,
                   chunk: int = CHUNK):
    """Restricted norm or singular value of ``trials`` standard Gaussian n x m
    matrices.  Trials are processed in chunks of ``chunk`` with their own
    random streams, so the output does not depend on ``workers``.  Larger
    chunks amortize the per-iteration overhead of the batched solver; the
    values depend on the chunk size.

    Returns (values, converged_fraction, gammas) where ``gammas`` is an
    independent standard normal per trial.
    """
    cfg = cfg or SolverConfig()
    if C.dim != m or D.dim != n:
        raise ValueError("cone dimensions do not match (m, n)")
    if chunk < 1:
        raise ValueError("chunk must be >= 1")

    def run(chunk):
        c, b = chunk
        rng = stream_generator(seed, stream, c)
        G = rng.standard_normal((b, n, m))
        gam = rng.standard_normal(b)
        res = solve_batch(G, C, D, kind, cfg, rng)
        return res.values, res.converged_fraction, gam

    chunks = _chunks(trials, chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(ch) for ch in chunks]
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(3))


def empirical_curve(kind: str, C: Cone, D: Cone, n: int, m: int, lam_grid, trials: int, seed: int,
                    solver_cfg: SolverConfig | None = None, workers: int = 1, samples=None) -> BoundCurve:
    """Empirical cdf of sigma_{C->D}(G) (kind 'sv') or tail P{|G|_{C->D} >= lam}
    (kind 'norm') on the grid."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if samples is None:
        vals, conv, _ = gaussian_solve(kind, C, D, n, m, trials, seed, solver_cfg, workers)
    else:
        vals, conv = samples
    lam = np.asarray(lam_grid, dtype=float)
    if kind == "sv":
        curve = (vals[:, None] <= lam[None, :]).mean(axis=0)
        name = "empirical_cdf_sv"
    elif kind == "norm":
        curve = (vals[:, None] >= lam[None, :]).mean(axis=0)
        name = "empirical_tail_norm"
    else:
        raise ValueError("kind must be 'norm' or 'sv'")
    meta = {"trials": trials, "seed": seed, "n": n, "m": m, "unreliable": int((conv < 0.5).sum()),
            "mean": float(vals.mean())}
    return BoundCurve(lam, curve, name, meta)


def binomial_se(p: np.ndarray, trials: int) -> np.ndarray:
    return np.sqrt(np.clip(p, 0, 1) * (1 - np.clip(p, 0, 1)) / trials)


# --- comparison inequalities for Gaussian matrices -------------------------------

@dataclass
class ComparisonSamples:
    norm: np.ndarray | None
    sv: np.ndarray | None
    gamma: np.ndarray
    width_C: np.ndarray  # |Proj_C g|, g independent of everything else
    width_D: np.ndarray  # |Proj_D g'|


def comparison_samples(C: Cone, D: Cone, n: int, m: int, trials: int, seed: int,
                       cfg: SolverConfig | None = None, kinds=("norm", "sv"), workers: int = 1,
                       batch: int = 50_000, chunk: int = CHUNK) -> ComparisonSamples:
    out = {}
    gam = None
    for k in kinds:
        vals, _, g = gaussian_solve(k, C, D, n, m, trials, seed, cfg, workers, chunk=chunk)
        out[k] = vals
        gam = g
    rng = stream_generator(seed, RHS_STREAM)
    wc, wd = np.empty(trials), np.empty(trials)
    for s in range(0, trials, batch):
        b = min(batch, trials - s)
        wc[s:s + b] = np.linalg.norm(project(C, rng.standard_normal((b, m))), axis=1)
        wd[s:s + b] = np.linalg.norm(project(D, rng.standard_normal((b, n))), axis=1)
    if gam is None:
        gam = stream_generator(seed, RHS_STREAM + 1).standard_normal(trials)
    return ComparisonSamples(out.get("norm"), out.get("sv"), gam, wc, wd)


VARIANTS = ("norm", "norm_shifted", "sv_shifted")


def check_thm11(f: MomentFunction, C: Cone, D: Cone, n: int, m: int, trials: int, seed: int,
                variant: str = "norm", cfg: SolverConfig | None = None,
                samples: ComparisonSamples | None = None) -> InequalityCheck:
    """Monte Carlo check of a Gaussian comparison inequality for G ~ N(0, I_{n x m}).

    norm:          E f(|G|_{C->D})            <= E f(|Proj_D g'| + |Proj_C g|), f increasing convex
    norm_shifted:  E f(|G|_{C->D} + gamma)    <= E f(|Proj_D g'| + |Proj_C g|), f increasing
    sv_shifted:    E f(sigma_{C->D}(G) + gamma) >= E f(|Proj_D g'| - |Proj_C g|), f increasing

    ``satisfied_within`` is the favorable margin in pooled standard errors.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if not f.monotone:
        raise HypothesisViolation("the comparison inequalities need an increasing f")
    if variant == "norm" and not f.convex:
        raise HypothesisViolation("the unshifted norm inequality needs a convex f")
    need = "sv" if variant == "sv_shifted" else "norm"
    if samples is None or getattr(samples, need) is None:
        samples = comparison_samples(C, D, n, m, trials, seed, cfg, kinds=(need,))
    if variant == "norm":
        return _check(f(samples.norm), f(samples.width_D + samples.width_C), lhs_small=True)
    if variant == "norm_shifted":
        return _check(f(samples.norm + samples.gamma), f(samples.width_D + samples.width_C), lhs_small=True)
    return _check(f(samples.sv + samples.gamma), f(samples.width_D - samples.width_C), lhs_small=False)


@dataclass
class LinearImageCheck:
    kappa: InequalityCheck
    renegar: InequalityCheck
    kappa_factor: float
    renegar_factor: float


def check_linear_image(C: Cone, D: Cone, T, U, r: float, trials: int, seed: int,
                       cfg: SolverConfig | None = None) -> LinearImageCheck:
    """E |G~|^r_{TC->UD} against factor^r E |G|^r_{C->D}, with the factor
    either kappa(T) kappa(U) or the product of the Renegar numbers of T and U
    relative to C and D."""
    if r < 1:
        raise HypothesisViolation("the linear-image moment bound needs r >= 1")
    T, U = np.atleast_2d(np.asarray(T, float)), np.atleast_2d(np.asarray(U, float))
    TC, UD = normalize(LinearImage(T, C)), normalize(LinearImage(U, D))
    for K in (TC, UD):
        if isinstance(K, LinearImage):
            raise UnsupportedProjection(f"cannot project onto {K!r}")
    cfg = cfg or SolverConfig()
    m, n = C.dim, D.dim
    l, k = T.shape[0], U.shape[0]
    lhs, _, _ = gaussian_solve("norm", TC, UD, k, l, trials, seed, cfg, stream=1)
    rhs, _, _ = gaussian_solve("norm", C, D, n, m, trials, seed, cfg, stream=2)
    kf = kappa(T) * kappa(U)
    rf = renegar(T, C, Full(l), cfg) * renegar(U, D, Full(k), cfg)
    return LinearImageCheck(_check(lhs ** r, kf ** r * rhs ** r, lhs_small=True),
                            _check(lhs ** r, rf ** r * rhs ** r, lhs_small=True), kf, rf)


# --- Gaussian processes on finite index sets --------------------------------------

@dataclass
class GordonInstance:
    """Two centered Gaussian families indexed by (i, j), one claimed to be a
    contraction of the other.  Each sampler returns min_i max_j of its family
    for ``N`` independent draws.  With ``zero_anchor`` the families contain a
    zero point and are compared through f(max(., 0)) as for 0-contractions."""
    tag: str
    original: object
    contracted: object
    zero_anchor: bool
    needs_convex: bool
    description: str = ""


def _min_max(points: np.ndarray, rng, N: int, batch: int = 20_000) -> np.ndarray:
    """points has shape (I, J, dim); returns min_i max_j <points_ij, g>."""
    I, J, d = points.shape
    flat = points.reshape(I * J, d).T
    out = np.empty(N)
    for s in range(0, N, batch):
        b = min(batch, N - s)
        X = (rng.standard_normal((b, d)) @ flat).reshape(b, I, J)
        out[s:s + b] = X.max(axis=2).min(axis=1)
    return out


def _stub_points(C: Cone, k: int, rng, with_zero: bool) -> np.ndarray:
    P = draw_starts(C, rng, 1, k)[0]
    if with_zero:
        P = np.vstack([np.zeros(C.dim), P, 0.5 * P[: max(1, k // 2)]])
    return P


def gordon_instance(tag: str, C: Cone | None = None, D: Cone | None = None, base_points: int = 6,
                    fiber_points: int = 8, seed: int = 0, m: int = 50, t: float = 0.14,
                    s: float = 2.0) -> GordonInstance:
    """Catalog of contraction pairs.

    tensor_product   pairs (x, y) versus x (x) y, x from {0} and unit vectors of C,
                     y from a sample of the stub of D containing 0.
    affine_tensor    (x, y) versus (x (x) y, 1) with unit x: norm preserving.
    bundle           min over unit x_i of C of max over y_j: (x_i (x) y_j, 1) versus (x_i, y_j).
    single_fiber     the bundle with a single base point (plain Slepian case).
    linear_image     |T| K versus T K for K = C_m(t) with the unit ball and
                     T = diag(1, s, ..., s), via exact support functions.
    """
    C = C if C is not None else _default_cone(3)
    D = D if D is not None else _default_cone(3)
    rng = stream_generator(seed, 7)
    if tag == "tensor_product":
        X = _stub_points(C, base_points, rng, with_zero=True)
        Y = _stub_points(D, fiber_points, rng, with_zero=True)
        orig = np.array([np.concatenate([x, y]) for x in X for y in Y])[None]
        cont = np.array([np.kron(x, y) for x in X for y in Y])[None]
        return GordonInstance(tag, lambda g, N: _min_max(orig, g, N), lambda g, N: _min_max(cont, g, N),
                              True, True, "product of stubs versus tensor product")
    if tag in ("affine_tensor", "bundle", "single_fiber"):
        X = _stub_points(C, 1 if tag == "single_fiber" else base_points, rng, with_zero=False)
        Y = _stub_points(D, fiber_points, rng, with_zero=True)
        prod = np.array([[np.concatenate([x, y]) for y in Y] for x in X])
        aff = np.array([[np.concatenate([np.kron(x, y), [1.0]]) for y in Y] for x in X])
        if tag == "affine_tensor":
            prod, aff = prod.reshape(1, -1, prod.shape[-1]), aff.reshape(1, -1, aff.shape[-1])
            return GordonInstance(tag, lambda g, N: _min_max(prod, g, N), lambda g, N: _min_max(aff, g, N),
                                  False, False, "product versus affine tensor, single maximum")
        return GordonInstance(tag, lambda g, N: _min_max(aff, g, N), lambda g, N: _min_max(prod, g, N),
                              False, False, "affine tensor bundle versus product bundle")
    if tag == "linear_image":
        K = Circular(m, t)
        scale = np.concatenate([[1.0], np.full(m - 1, s)])

        def original(g, N):
            return s * np.linalg.norm(project(K, g.standard_normal((N, m))), axis=1)

        def contracted(g, N):
            return np.linalg.norm(project(K, g.standard_normal((N, m)) * scale), axis=1)

        return GordonInstance(tag, original, contracted, True, True, "scaled stub versus linear image")
    raise ValueError(f"unknown instance tag {tag!r}")


def _default_cone(k):
    from .cones import Orthant
    return Orthant(k)


def check_gordon_variant(instance, f: MomentFunction, trials: int, seed: int,
                         enforce_hypotheses: bool = True) -> InequalityCheck:
    """E f(contracted) <= E f(original); margin in pooled standard errors."""
    if isinstance(instance, str):
        instance = gordon_instance(instance)
    if enforce_hypotheses:
        if not f.monotone:
            raise HypothesisViolation("Gaussian comparison needs an increasing f")
        if instance.needs_convex and not f.convex:
            raise HypothesisViolation("0-contraction comparison needs a convex f")
    a = instance.original(stream_generator(seed, 1), trials)
    b = instance.contracted(stream_generator(seed, 2), trials)
    if instance.zero_anchor:
        a, b = np.maximum(a, 0.0), np.maximum(b, 0.0)
    return _check(f(b), f(a), lhs_small=True)


# --- figure tables ---------------------------------------------------------------

def _marker(mu: float) -> BoundCurve:
    return BoundCurve(np.array([mu, mu]), np.array([0.0, 1.0]), "marker", {"mean": mu})


def figure2_curves(C: Cone, D: Cone, n: int, m: int, trials: int, seed: int,
                   cfg: SolverConfig | None = None, workers: int = 1, points: int = 200,
                   grid=None) -> dict:
    """All curves of the restricted norm / singular value comparison figure,
    keyed by table kind.  ``grid`` overrides the per-kind default lambda grids."""
    pC, pD = profile(C), profile(D)
    dC, dD = gwidth_sq(pC), gwidth_sq(pD)
    out = {}
    for kind in ("sv", "norm"):
        lam = default_grid(kind, dC, dD, points) if grid is None else np.asarray(grid, float)
        vals, conv, _ = gaussian_solve(kind, C, D, n, m, trials, seed, cfg, workers)
        emp = empirical_curve(kind, C, D, n, m, lam, trials, seed, samples=(vals, conv))
        out[emp.kind] = emp
        out[f"iv_{kind}"] = iv_bound(kind, lam, pC, pD)
        out[f"conc_{kind}"] = conc_bound(kind, lam, dC, dD)
        out[f"mean_empirical_{kind}"] = _marker(float(vals.mean()))
        est = math.sqrt(dD) - math.sqrt(dC) if kind == "sv" else math.sqrt(dD) + math.sqrt(dC)
        out[f"mean_estimate_{kind}"] = _marker(est)
    return out
