"""Closed convex cones: representations, projections, polarity and angles.

All projections act on the last axis, so a stack of points of shape
``(..., m)`` is projected in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, orth
from scipy.optimize import lsq_linear, nnls

MAX_POLY_GENERATORS = 20


class UnsupportedProjection(ValueError):
    pass


class ZeroCone(ValueError):
    pass


class Cone:
    """Base class. Subclasses are immutable value objects."""

    dim: int

    def _project(self, X: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def __neg__(self):
        return LinearImage(-np.eye(self.dim), self).normalized()

    def normalized(self) -> "Cone":
        return self


@dataclass(frozen=True, eq=False)
class Full(Cone):
    dim: int

    def _project(self, X):
        return np.array(X, dtype=float, copy=True)

    def __repr__(self):
        return f"Full({self.dim})"


@dataclass(frozen=True, eq=False)
class Subspace(Cone):
    dim: int
    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float).reshape(self.dim, -1)
        if B.shape[1] and not np.allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-10):
            B = orth(B)
        object.__setattr__(self, "basis", B)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def _project(self, X):
        X = np.asarray(X, dtype=float)
        return (X @ self.basis) @ self.basis.T

    def __repr__(self):
        return f"Subspace({self.dim}, rank={self.rank})"


def zero_cone(m: int) -> Subspace:
    return Subspace(m, np.zeros((m, 0)))


def coordinate_subspace(m: int, k: int) -> Subspace:
    return Subspace(m, np.eye(m)[:, :k])


@dataclass(frozen=True, eq=False)
class Orthant(Cone):
    dim: int

    def _project(self, X):
        return np.maximum(np.asarray(X, dtype=float), 0.0)

    def __repr__(self):
        return f"Orthant({self.dim})"


@dataclass(frozen=True, eq=False)
class Circular(Cone):
    """C_m(t) = {x : ||x[1:]|| <= t * sign * x[0]}; sign = -1 gives -C_m(t)."""
    dim: int
    t: float
    sign: int = 1

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("circular cones need m >= 2")
        if not self.t > 0:
            raise ValueError("circular slope t must be positive")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def _project(self, X):
        X = np.asarray(X, dtype=float)
        u = self.sign * X[..., 0]
        r = np.linalg.norm(X[..., 1:], axis=-1)
        t = self.t
        inside = r <= t * u
        polar = t * r <= -u
        c = (u + t * r) / (1.0 + t * t)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(r > 0, c * t / np.where(r > 0, r, 1.0), 0.0)
        out = np.empty_like(X)
        out[..., 0] = self.sign * c
        out[..., 1:] = X[..., 1:] * scale[..., None]
        out = np.where(inside[..., None], X, out)
        out = np.where((polar & ~inside)[..., None], 0.0, out)
        return out

    def __repr__(self):
        s = "" if self.sign == 1 else "-"
        return f"{s}Circular({self.dim}, {self.t:g})"


def _signed_identity(M: np.ndarray):
    """Return the sign vector if M is a column permutation of diag(+-1) of full size."""
    m, k = M.shape
    if m != k:
        return None
    A = np.abs(M)
    if not np.allclose(A.sum(axis=0), 1.0, atol=0, rtol=0) or not np.all(np.isin(A, (0.0, 1.0))):
        return None
    if not np.allclose(A.sum(axis=1), 1.0):
        return None
    return (M.sum(axis=1)).astype(float)


def _normalize_columns(M):
    M = np.asarray(M, dtype=float)
    M = M.reshape(M.shape[0], -1)
    norms = np.linalg.norm(M, axis=0)
    keep = norms > 1e-14
    return M[:, keep] / norms[keep]


def _project_generated(V: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Projection onto cone(V) by nonnegative least squares, row by row."""
    if V.shape[1] == 0:
        return np.zeros_like(X)
    if V.shape[1] > MAX_POLY_GENERATORS:
        raise UnsupportedProjection(f"polyhedral projection limited to {MAX_POLY_GENERATORS} generators")
    sgn = _signed_identity(V)
    if sgn is not None:
        return np.where(X * sgn > 0, X, 0.0)
    flat = X.reshape(-1, X.shape[-1])
    out = np.empty_like(flat)
    for i, x in enumerate(flat):
        lam, _ = nnls(V, x)
        p = V @ lam
        if not _kkt_ok(V, x, p):
            # some scipy releases return non-optimal nnls points; BVLS is the fallback
            lam = lsq_linear(V, x, bounds=(0, np.inf), method="bvls", tol=1e-14).x
            p = V @ lam
        out[i] = p
    return out.reshape(X.shape)


def _kkt_ok(V, x, p, tol=1e-10):
    r = x - p
    scale = max(1.0, float(np.linalg.norm(x)))
    return float((V.T @ r).max(initial=0.0)) <= tol * scale and abs(float(r @ p)) <= tol * scale * scale


@dataclass(frozen=True, eq=False)
class PolyhedralV(Cone):
    """cone(generators); columns are normalized on construction."""
    dim: int
    generators: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "generators", _normalize_columns(np.asarray(self.generators).reshape(self.dim, -1)))

    def _project(self, X):
        return _project_generated(self.generators, np.asarray(X, dtype=float))

    def __repr__(self):
        return f"PolyhedralV({self.dim}, k={self.generators.shape[1]})"


@dataclass(frozen=True, eq=False)
class PolyhedralH(Cone):
    """{x : <n_i, x> >= 0 for every column n_i of ``normals``}."""
    dim: int
    normals: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "normals", _normalize_columns(np.asarray(self.normals).reshape(self.dim, -1)))

    def _project(self, X):
        X = np.asarray(X, dtype=float)
        sgn = _signed_identity(self.normals)
        if sgn is not None:
            return np.where(X * sgn > 0, X, 0.0)
        return X - _project_generated(-self.normals, X)

    def __repr__(self):
        return f"PolyhedralH({self.dim}, k={self.normals.shape[1]})"


@dataclass(frozen=True, eq=False)
class Polar(Cone):
    inner: Cone

    @property
    def dim(self):
        return self.inner.dim

    def _project(self, X):
        X = np.asarray(X, dtype=float)
        return X - self.inner._project(X)

    def __repr__(self):
        return f"Polar({self.inner!r})"


@dataclass(frozen=True, eq=False)
class Product(Cone):
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("product of no cones")

    @property
    def dim(self):
        return sum(p.dim for p in self.parts)

    def _project(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty_like(X)
        start = 0
        for p in self.parts:
            out[..., start:start + p.dim] = p._project(X[..., start:start + p.dim])
            start += p.dim
        return out

    def __repr__(self):
        return "Product(" + ", ".join(repr(p) for p in self.parts) + ")"


@dataclass(frozen=True, eq=False)
class LinearImage(Cone):
    """T(inner) for an l x m matrix T."""
    T: np.ndarray
    inner: Cone

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.T, dtype=float))
        if T.shape[1] != self.inner.dim:
            raise ValueError("LinearImage: T columns must match the inner cone dimension")
        object.__setattr__(self, "T", T)

    @property
    def dim(self):
        return self.T.shape[0]

    def normalized(self) -> Cone:
        return _normalize_image(self.T, self.inner)

    def _project(self, X):
        C = self.normalized()
        if isinstance(C, LinearImage):
            raise UnsupportedProjection("projection onto this linear image is not supported")
        return C._project(X)

    def __repr__(self):
        return f"LinearImage({self.T.shape[0]}x{self.T.shape[1]}, {self.inner!r})"


def _normalize_image(T: np.ndarray, C: Cone) -> Cone:
    l, m = T.shape
    if isinstance(C, LinearImage):
        return _normalize_image(T @ C.T, C.inner)
    if isinstance(C, Full):
        r = np.linalg.matrix_rank(T)
        return Full(l) if r == l else Subspace(l, orth(T))
    if isinstance(C, Subspace):
        if C.rank == 0:
            return zero_cone(l)
        B = T @ C.basis
        return Full(l) if np.linalg.matrix_rank(B) == l else Subspace(l, orth(B))
    if isinstance(C, Orthant):
        return _poly_v(l, T)
    if isinstance(C, PolyhedralV):
        return _poly_v(l, T @ C.generators)
    if isinstance(C, PolyhedralH):
        if l == m and abs(np.linalg.det(T)) > 1e-12:
            return PolyhedralH(l, np.linalg.solve(T.T, C.normals))
        return LinearImage(T, C)
    if isinstance(C, Circular) and l == m:
        d = np.diag(T)
        if np.allclose(T, np.diag(d), atol=0) and d[0] != 0 and np.all(d[1:] != 0):
            b = np.abs(d[1:])
            if np.allclose(b, b[0], rtol=1e-14, atol=0):
                return Circular(m, C.t * b[0] / abs(d[0]), int(C.sign * np.sign(d[0])))
    return LinearImage(T, C)


def _poly_v(l, V):
    V = _normalize_columns(V)
    if V.shape[1] == 0:
        return zero_cone(l)
    sgn = _signed_identity(V)
    if sgn is not None and np.all(sgn > 0):
        return Orthant(l)
    return PolyhedralV(l, V)


def normalize(C: Cone) -> Cone:
    if isinstance(C, LinearImage):
        return C.normalized()
    if isinstance(C, Polar):
        inner = normalize(C.inner)
        return polar(inner) if not isinstance(inner, LinearImage) else Polar(inner)
    if isinstance(C, Product):
        return Product(tuple(normalize(p) for p in C.parts))
    return C


def ambient(C: Cone) -> int:
    return C.dim


def is_zero(C: Cone) -> bool:
    C = normalize(C)
    if isinstance(C, Subspace):
        return C.rank == 0
    if isinstance(C, PolyhedralV):
        return C.generators.shape[1] == 0
    if isinstance(C, Product):
        return all(is_zero(p) for p in C.parts)
    return False


def project(C: Cone, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != C.dim:
        raise ValueError(f"point of dimension {x.shape[-1]} for a cone in R^{C.dim}")
    return C._project(x)


def polar(C: Cone) -> Cone:
    m = C.dim
    if isinstance(C, Full):
        return zero_cone(m)
    if isinstance(C, Subspace):
        if C.rank == 0:
            return Full(m)
        if C.rank == m:
            return zero_cone(m)
        return Subspace(m, null_space(C.basis.T))
    if isinstance(C, Orthant):
        return PolyhedralH(m, -np.eye(m))
    if isinstance(C, Circular):
        return Circular(m, 1.0 / C.t, -C.sign)
    if isinstance(C, PolyhedralV):
        return PolyhedralH(m, -C.generators)
    if isinstance(C, PolyhedralH):
        return _poly_v(m, -C.normals)
    if isinstance(C, Polar):
        return C.inner
    if isinstance(C, Product):
        return Product(tuple(polar(p) for p in C.parts))
    if isinstance(C, LinearImage):
        N = C.normalized()
        return Polar(C) if isinstance(N, LinearImage) else polar(N)
    return Polar(C)


def member(C: Cone, x, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.linalg.norm(x - project(C, x)) <= tol)


def generators(C: Cone):
    """Generator matrix of a polyhedral (or orthant-built) cone, or None."""
    C = normalize(C)
    if isinstance(C, Orthant):
        return np.eye(C.dim)
    if isinstance(C, PolyhedralV):
        return C.generators
    if isinstance(C, PolyhedralH):
        N = C.normals
        if N.shape[0] == N.shape[1] and abs(np.linalg.det(N)) > 1e-12:
            return _normalize_columns(np.linalg.inv(N.T))
        return None
    if isinstance(C, Product):
        gens = [generators(p) for p in C.parts]
        if any(g is None for g in gens):
            return None
        from scipy.linalg import block_diag
        return block_diag(*gens)
    return None


@dataclass
class AngleResult:
    cos_capped_angle: float
    x: np.ndarray
    y: np.ndarray
    converged_fraction: float = 1.0


def capped_angle(C: Cone, D: Cone, cfg=None) -> AngleResult:
    """Cosine of the capped angle between C and D, i.e. the restricted norm of
    the identity from C to D."""
    from .restricted import SolverConfig, restricted_norm

    if C.dim != D.dim:
        raise ValueError("cones live in different spaces")
    if is_zero(C) or is_zero(D):
        raise ZeroCone("the capped angle is undefined for the zero cone")
    cfg = cfg or SolverConfig(multistarts=64, max_iters=500)
    res = restricted_norm(np.eye(C.dim), C, D, cfg)
    return AngleResult(min(1.0, max(0.0, res.value)), res.x_cert, res.y_cert, res.converged_fraction)
