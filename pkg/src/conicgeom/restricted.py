"""Cone-restricted norms and singular values.

For A in R^{n x m} and cones C in R^m, D in R^n:

    ||A||_{C->D}     = max over x in C, |x| = 1 of |Proj_D(A x)|
    sigma_{C->D}(A)  = min over x in C, |x| = 1 of |Proj_D(A x)|

The norm is found by alternating maximization of the bilinear form
<A x, y> over the two cone stubs; the singular value by projected gradient
descent of x -> |Proj_D(A x)| on C intersected with the sphere.  Both
run from many random starts at once, and every routine works on a stack of
matrices so Monte Carlo drivers can batch trials.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .cones import (Cone, Full, Orthant, PolyhedralH, PolyhedralV, Subspace, ZeroCone,
                    generators, is_zero, member, normalize, project)
from .numerics import stream_generator

_TINY = 1e-300


POLISH_BELOW = 1e-5


class SolverFailure(RuntimeError):
    pass


class OracleUnavailable(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    multistarts: int = 64
    max_iters: int = 2000
    step_tol: float = 1e-12
    value_tol: float = 1e-8
    oracle_grid: int = 160
    seed: int = 0
    shortcuts: bool = True

    def __post_init__(self):
        if self.multistarts < 1:
            raise ValueError("multistarts must be >= 1")
        if not (self.step_tol > 0 and self.value_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class RestrictedExtremum:
    value: float
    x_cert: np.ndarray
    y_cert: np.ndarray
    converged_fraction: float
    kind: str = "norm"
    verified: bool = True


@dataclass
class BatchResult:
    values: np.ndarray
    x: np.ndarray
    y: np.ndarray
    converged_fraction: np.ndarray


# --- helpers ---------------------------------------------------------------

def _unit_rows(P):
    nrm = np.linalg.norm(P, axis=-1)
    safe = np.where(nrm > _TINY, nrm, 1.0)
    return np.where((nrm > _TINY)[..., None], P / safe[..., None], 0.0), nrm


def _check(A, C, D):
    A = np.asarray(A, dtype=float)
    if A.shape[-2:] != (D.dim, C.dim):
        raise ValueError(f"matrix of shape {A.shape[-2:]} does not map R^{C.dim} to R^{D.dim}")
    if is_zero(C) or is_zero(D):
        raise ZeroCone("restricted operators need nonzero cones")
    return A, normalize(C), normalize(D)


def draw_starts(C: Cone, rng: np.random.Generator, T: int, S: int) -> np.ndarray:
    """Random points of C on the unit sphere, shape (T, S, m)."""
    m = C.dim
    out = np.zeros((T, S, m))
    need = np.ones((T, S), dtype=bool)
    for _ in range(200):
        Z = rng.standard_normal((T, S, m))
        U, nrm = _unit_rows(project(C, Z))
        ok = need & (nrm > 1e-12)
        out[ok] = U[ok]
        need &= ~ok
        if not need.any():
            return out
    raise SolverFailure("could not sample starting points in the cone")


def _basis(C):
    if isinstance(C, Full):
        return np.eye(C.dim)
    if isinstance(C, Subspace):
        return C.basis
    return None


def _ray(C):
    if isinstance(C, Orthant) and C.dim == 1:
        return np.ones(1)
    if isinstance(C, PolyhedralV) and C.generators.shape[1] == 1:
        return C.generators[:, 0]
    return None


def _pick(values, best, tol, maximize):
    """First start (in index order) within tol of the best value."""
    close = values >= (best - tol)[:, None] if maximize else values <= (best + tol)[:, None]
    return np.argmax(close, axis=1)


# --- linear-algebra shortcuts ------------------------------------------------

def _subspace_batch(A, UC, UD, kind):
    M = np.einsum("nk,tnm,ml->tkl", UD, A, UC)
    U, s, Vh = np.linalg.svd(M, full_matrices=True)
    T = A.shape[0]
    kD, kC = UD.shape[1], UC.shape[1]
    if kind == "norm":
        vals = s[:, 0]
        x = Vh[:, 0, :] @ UC.T
        y = U[:, :, 0] @ UD.T
    else:
        if kD >= kC:
            vals = s[:, kC - 1]
            x = Vh[:, kC - 1, :] @ UC.T
            y = U[:, :, kC - 1] @ UD.T
        else:
            vals = np.zeros(T)
            x = Vh[:, -1, :] @ UC.T
            y = np.zeros((T, A.shape[1]))
    return BatchResult(vals, x, y, np.ones(T))


def _ray_batch(A, r, D):
    x = np.broadcast_to(r, (A.shape[0], r.size)).copy()
    P = project(D, A @ r)
    y, vals = _unit_rows(P)
    return BatchResult(vals, x, y, np.ones(A.shape[0]))


def _shortcut(A, C, D, kind, cfg):
    if not cfg.shortcuts:
        return None
    UC, UD = _basis(C), _basis(D)
    if UC is not None and UD is not None:
        return _subspace_batch(A, UC, UD, kind)
    r = _ray(C)
    if r is not None:
        return _ray_batch(A, r, D)
    return None


# --- iterative solvers -------------------------------------------------------

def _alternating_max(Ab, X, C, D, cfg):
    B = X.shape[0]
    conv = np.zeros(B, dtype=bool)
    val = np.full(B, -1.0)
    active = np.arange(B)
    for _ in range(cfg.max_iters):
        if active.size == 0:
            break
        Aa, Xa = Ab[active], X[active]
        Y, nP = _unit_rows(project(D, np.einsum("bnm,bm->bn", Aa, Xa)))
        W, nW = _unit_rows(project(C, np.einsum("bnm,bn->bm", Aa, Y)))
        Xn = np.where((nW > 1e-14)[:, None], W, Xa)
        step = np.linalg.norm(Xn - Xa, axis=1)
        gain = nP - val[active]
        X[active] = Xn
        val[active] = nP
        done = (step <= cfg.step_tol) | (nP <= _TINY) | ((gain >= 0) & (gain <= 1e-15 * np.maximum(nP, 1.0)))
        conv[active[done]] = True
        active = active[~done]
    return X, conv


def _obj(Ab, X, D):
    P = project(D, np.einsum("bnm,bm->bn", Ab, X))
    return P, np.linalg.norm(P, axis=1)


def _grad(Ab, P, f, squared=False):
    # x -> |Proj_D(A x)|^2 has gradient 2 A^T Proj_D(Ax); the unsquared
    # distance to D polar has A^T Proj_D(Ax) / |.|
    G = np.einsum("bnm,bn->bm", Ab, P)
    if squared:
        return 2.0 * G
    return G / np.where(f > _TINY, f, 1.0)[:, None]


def _projected_descent(Ab, X, C, D, cfg, lip, squared=False):
    """Projected gradient with Armijo backtracking and Barzilai-Borwein steps
    on |Proj_D(A x)| (or its square), retracting by x -> Proj_C(x)/|.|.
    ``lip`` is the per-row Lipschitz constant of the gradient."""
    B = X.shape[0]
    conv = np.zeros(B, dtype=bool)
    P, f = _obj(Ab, X, D)
    if squared:
        f = f * f
    G = _grad(Ab, P, f, squared)
    eta = 1.0 / lip
    active = np.arange(B)[f > 0]
    conv[f <= 0] = True
    for _ in range(cfg.max_iters):
        if active.size == 0:
            break
        Aa, Xa, Ga, fa = Ab[active], X[active], G[active], f[active]
        ea = eta[active].copy()
        cand = np.empty_like(Xa)
        fc = np.empty_like(fa)
        Pc = np.empty((active.size, Ab.shape[1]))
        pending = np.arange(active.size)
        accepted = np.zeros(active.size, dtype=bool)
        for _bt in range(60):
            if pending.size == 0:
                break
            Z, nZ = _unit_rows(project(C, Xa[pending] - ea[pending, None] * Ga[pending]))
            Pp, fp = _obj(Aa[pending], Z, D)
            if squared:
                fp = fp * fp
            s2 = np.einsum("bm,bm->b", Z - Xa[pending], Z - Xa[pending])
            ok = (nZ > 1e-14) & (fp <= fa[pending] - 1e-4 * s2 / ea[pending])
            idx = pending[ok]
            cand[idx], fc[idx], Pc[idx] = Z[ok], fp[ok], Pp[ok]
            accepted[idx] = True
            pending = pending[~ok]
            ea[pending] *= 0.5
        # starts where no step is accepted are stationary to working precision
        stuck = ~accepted
        conv[active[stuck]] = True
        acc = np.flatnonzero(accepted)
        ia = active[acc]
        s = cand[acc] - Xa[acc]
        Gn = _grad(Aa[acc], Pc[acc], fc[acc], squared)
        yv = Gn - Ga[acc]
        ss = np.einsum("bm,bm->b", s, s)
        sy = np.einsum("bm,bm->b", s, yv)
        with np.errstate(divide="ignore", invalid="ignore"):
            bb = np.where(sy > 0, ss / np.where(sy > 0, sy, 1.0), 2.0 * ea[acc])
        L = lip[ia]
        eta[ia] = np.clip(bb, 1e-3 / L, 1e3 / L)
        dec = fa[acc] - fc[acc]
        X[ia], f[ia], G[ia] = cand[acc], fc[acc], Gn
        done = (np.sqrt(ss) <= cfg.step_tol) | (fc[acc] <= 0) | (dec <= 1e-15 * fa[acc])
        conv[ia[done]] = True
        active = ia[~done]
    return X, conv


def solve_batch(A, C: Cone, D: Cone, kind: str, cfg: SolverConfig | None = None,
                rng: np.random.Generator | None = None, starts=None) -> BatchResult:
    """Restricted norm (kind='norm') or singular value (kind='sv') of each
    matrix in a stack A of shape (T, n, m)."""
    cfg = cfg or SolverConfig()
    A = np.asarray(A, dtype=float)
    if A.ndim == 2:
        A = A[None]
    A, C, D = _check(A, C, D)
    if kind not in ("norm", "sv"):
        raise ValueError("kind must be 'norm' or 'sv'")
    fast = _shortcut(A, C, D, kind, cfg)
    if fast is not None:
        return fast
    T, n, m = A.shape
    S = cfg.multistarts
    if starts is None:
        rng = rng if rng is not None else stream_generator(cfg.seed)
        starts = draw_starts(C, rng, T, S)
    S = starts.shape[1]
    X = starts.reshape(T * S, m).copy()
    Ab = np.repeat(A, S, axis=0)
    if kind == "norm":
        X, conv = _alternating_max(Ab, X, C, D, cfg)
    else:
        nrm = np.repeat(np.linalg.norm(A, ord=2, axis=(1, 2)), S)
        nrm = np.where(nrm > 0, nrm, 1.0)
        # the square is well conditioned for positive minima; near zero the
        # unsquared distance converges faster, so small values are polished
        X, conv = _projected_descent(Ab, X, C, D, cfg, 2.0 * nrm * nrm, squared=True)
        _, f = _obj(Ab, X, D)
        near = np.flatnonzero((f > 0) & (f <= POLISH_BELOW * nrm))
        if near.size:
            Xp, cp = _projected_descent(Ab[near], X[near], C, D, cfg, nrm[near])
            X[near], conv[near] = Xp, cp
    P = project(D, np.einsum("bnm,bm->bn", Ab, X))
    Y, vals = _unit_rows(P)
    vals = vals.reshape(T, S)
    if kind == "norm":
        best = vals.max(axis=1)
    else:
        best = vals.min(axis=1)
    pick = _pick(vals, best, cfg.value_tol, kind == "norm")
    rows = np.arange(T) * S + pick
    return BatchResult(vals[np.arange(T), pick], X[rows], Y[rows],
                       conv.reshape(T, S).mean(axis=1))


def _single(A, C, D, kind, cfg, rng):
    cfg = cfg or SolverConfig()
    A = np.atleast_2d(np.asarray(A, dtype=float))
    res = solve_batch(A[None], C, D, kind, cfg, rng)
    x, y, v = res.x[0], res.y[0], float(res.values[0])
    ok = abs(np.linalg.norm(x) - 1.0) <= 1e-10 and member(C, x, 1e-10 * max(1.0, np.linalg.norm(x)))
    check = float(np.linalg.norm(project(D, A @ x)))
    ok = ok and abs(check - v) <= cfg.value_tol
    if kind == "norm" and np.linalg.norm(y) > 0:
        ok = ok and abs(float(y @ (A @ x)) - v) <= cfg.value_tol * max(1.0, v)
    return RestrictedExtremum(v, x, y, float(res.converged_fraction[0]), kind, bool(ok))


def restricted_norm(A, C: Cone, D: Cone, cfg: SolverConfig | None = None, rng=None) -> RestrictedExtremum:
    return _single(A, C, D, "norm", cfg, rng)


def restricted_sv(A, C: Cone, D: Cone, cfg: SolverConfig | None = None, rng=None) -> RestrictedExtremum:
    return _single(A, C, D, "sv", cfg, rng)


def apply_restricted(A, C: Cone, D: Cone, x, tol: float = 1e-9) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    x = np.asarray(x, dtype=float).reshape(-1)
    if A.shape != (D.dim, C.dim) or x.size != C.dim:
        raise ValueError("dimension mismatch")
    if not member(C, x, tol * max(1.0, np.linalg.norm(x))):
        raise ValueError("x is not in the domain cone")
    return project(D, A @ x)


# --- oracles -------------------------------------------------------------------

def sphere_grid(m: int, N: int) -> np.ndarray:
    """Points of S^{m-1} from an N-per-edge grid on each face of the cube."""
    if m == 1:
        return np.array([[1.0], [-1.0]])
    u = np.linspace(-1.0, 1.0, N)
    mesh = np.stack(np.meshgrid(*([u] * (m - 1)), indexing="ij"), axis=-1).reshape(-1, m - 1)
    faces = []
    for axis in range(m):
        for s in (1.0, -1.0):
            F = np.insert(mesh, axis, s, axis=1)
            faces.append(F)
    P = np.concatenate(faces)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def _tangent_frame(x):
    m = x.size
    Q, _ = np.linalg.qr(np.column_stack([x, np.eye(m)]))
    return Q[:, 1:m]


def _grid_oracle(A, C, D, kind, N):
    m = C.dim
    sgn = -1.0 if kind == "norm" else 1.0
    score = lambda X: sgn * np.linalg.norm(project(D, X @ A.T), axis=1)

    def feasible(X):
        U, nrm = _unit_rows(project(C, X))
        return U[nrm > 1e-12]

    X = feasible(sphere_grid(m, N))
    if X.shape[0] == 0:
        raise OracleUnavailable("grid missed the cone")
    vals = score(X)
    if m == 1:
        return float(sgn * vals.min())
    keep = 12
    h = 2.0 / N
    for _level in range(9):
        order = np.argsort(vals, kind="stable")[:keep]
        seeds, best = X[order], vals[order]
        u = np.linspace(-2.0 * h, 2.0 * h, 9)
        offs = np.stack(np.meshgrid(*([u] * (m - 1)), indexing="ij"), axis=-1).reshape(-1, m - 1)
        cand = [seeds]
        for x in seeds:
            cand.append(x[None, :] + offs @ _tangent_frame(x).T)
        Xn = feasible(np.concatenate(cand))
        vn = score(Xn)
        X, vals = Xn, vn
        h /= 4.0
    return float(sgn * vals.min())


def _subsets(k, r):
    for size in range(1, min(k, r) + 1):
        yield from itertools.combinations(range(k), size)


def _face_oracle(A, C, D, kind):
    VC, VD = generators(C), generators(D)
    m, n = C.dim, D.dim
    if kind == "sv" and polyhedral_feasible(A, C, D):
        return 0.0
    cfaces = [orth_cols(VC[:, list(s)]) for s in _subsets(VC.shape[1], m)]
    dfaces = [orth_cols(VD[:, list(s)]) for s in _subsets(VD.shape[1], n)]
    cfaces = [U for U in cfaces if U is not None]
    dfaces = [U for U in dfaces if U is not None]
    if len(cfaces) * len(dfaces) > 400_000:
        raise OracleUnavailable("too many face pairs")
    cands = [VC.T]
    for UC in cfaces:
        for UD in dfaces:
            _, _, Vh = np.linalg.svd(UD.T @ A @ UC)
            X = Vh @ UC.T
            cands.append(X)
            cands.append(-X)
    X = np.concatenate(cands)
    X = X[np.linalg.norm(X - project(C, X), axis=1) <= 1e-9]
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    vals = np.linalg.norm(project(D, X @ A.T), axis=1)
    return float(vals.max() if kind == "norm" else vals.min())


def orth_cols(M):
    """Orthonormal basis of the columns of M, or None if they are dependent."""
    Q, R = np.linalg.qr(M)
    if np.min(np.abs(np.diag(R))) <= 1e-10:
        return None
    return Q


def oracle_restricted(A, C: Cone, D: Cone, kind: str, grid: int | None = None) -> float:
    """Independent brute-force value of the restricted norm or singular value.

    Polyhedral pairs with few generators are solved exactly by enumerating
    pairs of faces (each candidate is a singular vector of the compression
    of A to the two face spans, plus an LP check for the value zero).  For
    ambient dimension at most 4 the alternative is exhaustive evaluation on
    a cube-sphere grid with N points per edge (angular spacing about 2/N),
    followed by nine rounds of 4x local grid refinement around the best
    candidates.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    A, C, D = _check(A, C, D)
    if kind not in ("norm", "sv"):
        raise ValueError("kind must be 'norm' or 'sv'")
    VC, VD = generators(C), generators(D)
    if VC is not None and VD is not None and VC.shape[1] <= 12 and VD.shape[1] <= 12:
        return _face_oracle(A, C, D, kind)
    if C.dim <= 4:
        N = grid or (160 if C.dim <= 3 else 40)
        return _grid_oracle(A, C, D, kind, N)
    raise OracleUnavailable("oracle needs ambient dimension <= 4 or small polyhedral cones")


def polyhedral_feasible(A, C: Cone, D: Cone) -> bool:
    """Exact LP test for a nonzero x in C with A x in the polar of D."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C, D = normalize(C), normalize(D)
    VC = generators(C)
    if VC is None:
        raise OracleUnavailable("domain cone needs a generator description")
    k = VC.shape[1]
    AV = A @ VC
    A_eq = [np.ones((1, k))]
    b_eq = [1.0]
    A_ub = b_ub = None
    nvar = k
    if isinstance(D, Full):
        A_eq.append(AV)
        b_eq.extend([0.0] * A.shape[0])
    elif isinstance(D, PolyhedralH):
        N = D.normals
        nvar = k + N.shape[1]
        A_eq = [np.hstack([np.ones((1, k)), np.zeros((1, N.shape[1]))]), np.hstack([AV, N])]
        b_eq = [1.0] + [0.0] * A.shape[0]
    else:
        VD = generators(D)
        if VD is None:
            raise OracleUnavailable("codomain cone needs a polyhedral description")
        A_ub = VD.T @ AV
        b_ub = np.zeros(VD.shape[1])
    res = linprog(np.zeros(nvar), A_ub=A_ub, b_ub=b_ub, A_eq=np.vstack(A_eq), b_eq=np.array(b_eq),
                  bounds=[(0, None)] * nvar, method="highs")
    return res.status == 0


# --- matrix files --------------------------------------------------------------

def parse_matrix(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("matrix file must start with a '# n m' header")
    try:
        n, m = (int(v) for v in lines[0][1:].split())
        rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise ValueError(f"malformed matrix file: {exc}") from None
    A = np.array(rows, dtype=float)
    if A.shape != (n, m):
        raise ValueError(f"header says {n}x{m} but found {A.shape}")
    return A


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return parse_matrix(fh.read())


def format_matrix(A) -> str:
    A = np.atleast_2d(A)
    out = [f"# {A.shape[0]} {A.shape[1]}"]
    out += [" ".join(f"{v:.17g}" for v in row) for row in A]
    return "\n".join(out) + "\n"
