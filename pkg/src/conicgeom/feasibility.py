"""Biconic feasibility: distances to the primal and dual feasible sets,
Renegar's condition number, perturbation certificates and the probability
that a Gaussian matrix is primal feasible.

Primal problem: some nonzero x in C has A x in the polar of D.
Dual problem:   some nonzero y in D has -A^T y in the polar of C.
The distance from A to the primal feasible set is sigma_{C->D}(A), and to
the dual feasible set sigma_{D->C}(-A^T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cones import Cone, Full, normalize
from .geometry import IntrinsicVolumeProfile
from .numerics import operator_norm
from .restricted import SolverConfig, restricted_sv

PRIMAL, DUAL, ILL_POSED, NEITHER = "PrimalFeasible", "DualFeasible", "NearIllPosed", "Infeasible"
RENEGAR_CAP = 1e12


def _fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, str):
        return x
    if isinstance(x, np.ndarray):
        return ",".join(_fmt(float(v)) for v in x)
    x = float(x)
    if math.isinf(x):
        return "inf"
    return f"{x:.8e}"


@dataclass
class FeasibilityReport:
    dist_primal: float
    dist_dual: float
    status: str
    renegar: float
    norm_A: float
    tol: float
    primal_certificate: np.ndarray | None = None
    dual_certificate: np.ndarray | None = None

    KEYS = ("status", "dist_primal", "dist_dual", "norm_A", "renegar", "tol",
            "primal_certificate", "dual_certificate")

    def to_text(self) -> str:
        return "".join(f"{k}={_fmt(getattr(self, k))}\n" for k in self.KEYS)


def _renegar(norm_A, dp, dd):
    d = max(dp, dd)
    if d <= 0 or norm_A / d > RENEGAR_CAP:
        return math.inf
    return norm_A / d


def classify(A, C: Cone, D: Cone, cfg: SolverConfig | None = None, tol: float | None = None) -> FeasibilityReport:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    norm_A = operator_norm(A)
    if norm_A == 0:
        raise ValueError("classification of the zero matrix is degenerate")
    tol = 1e-6 * norm_A if tol is None else tol
    p = restricted_sv(A, C, D, cfg)
    d = restricted_sv(-A.T, D, C, cfg)
    pf, df = p.value <= tol, d.value <= tol
    if pf and df:
        status = ILL_POSED
    elif pf:
        status = PRIMAL
    elif df:
        status = DUAL
    else:
        status = NEITHER
    return FeasibilityReport(p.value, d.value, status, _renegar(norm_A, p.value, d.value), norm_A, tol,
                             p.x_cert if pf else None, d.x_cert if df else None)


def renegar(A, C: Cone, D: Cone, cfg: SolverConfig | None = None) -> float:
    return classify(A, C, D, cfg).renegar


def perturbation_to_primal(A, C: Cone, D: Cone, cfg: SolverConfig | None = None,
                           tol: float | None = None, form: str = "rank_one") -> np.ndarray:
    """A perturbation dA with |dA| = sigma_{C->D}(A) that makes A + dA primal
    feasible.

    With (x0, y0) the minimizer of |Proj_D(A x)| and y0 = Proj_D(A x0)/|.|,
    the default ``rank_one`` form is dA = -y0 y0^T A x0 x0^T, so that
    (A + dA) x0 = Proj_{D polar}(A x0).  The ``left_projector`` form
    dA = -y0 y0^T A moves x0 the same way but its norm |A^T y0| exceeds the
    distance whenever x0 sits on the boundary of C.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    tol = 1e-6 * operator_norm(A) if tol is None else tol
    res = restricted_sv(A, C, D, cfg)
    if res.value <= tol:
        raise ValueError("A is already primal feasible")
    x0, y0 = res.x_cert, res.y_cert
    if form == "rank_one":
        return -np.outer(y0, y0) @ A @ np.outer(x0, x0)
    if form == "left_projector":
        return -np.outer(y0, y0) @ A
    raise ValueError("form must be 'rank_one' or 'left_projector'")


def _is_indicator(p: IntrinsicVolumeProfile) -> bool:
    return bool(np.isclose(p.v.max(), 1.0, atol=1e-12))


def kinematic_vanishing_prob(pC: IntrinsicVolumeProfile, pD: IntrinsicVolumeProfile, m: int, n: int) -> float:
    """P{sigma_{C->D}(G) = 0} for a standard Gaussian n x m matrix G.

    G^{-1}(D polar) is the polar of the random cone G^T D, whose expected
    intrinsic volumes below the top index equal those of D.  The conic
    kinematic formula then gives

        2 * sum_{k odd} sum_{l=0}^{m-k} v_{k+l}(C) v_l(D).
    """
    if pC.m != m or pD.m != n:
        raise ValueError("profile dimensions do not match (m, n)")
    if _is_indicator(pC) and _is_indicator(pD):
        raise ValueError("both cones are subspaces; the vanishing event is then almost surely decided by dimensions")
    vC, vD = pC.v, pD.v
    total = 0.0
    for k in range(1, m + 1, 2):
        for l in range(0, min(m - k, n) + 1):
            total += vC[k + l] * vD[l]
    return float(min(1.0, max(0.0, 2.0 * total)))
