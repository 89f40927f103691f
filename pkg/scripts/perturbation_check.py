"""Compare the two perturbation certificates that move A onto the primal
feasible set: -y0 y0^T A and the rank-one -y0 y0^T A x0 x0^T."""

import argparse

import numpy as np

from conicgeom.cones import Circular
from conicgeom.feasibility import perturbation_to_primal
from conicgeom.numerics import operator_norm
from conicgeom.restricted import restricted_sv

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    rng = np.random.default_rng(a.seed)
    C, D = Circular(3, 1.0), Circular(4, 1.0)
    stats = {"left_projector": [0, 0.0], "rank_one": [0, 0.0]}
    done = 0
    while done < a.instances:
        A = rng.standard_normal((4, 3))
        d = restricted_sv(A, C, D).value
        if d <= 0.1:
            continue
        done += 1
        for form, s in stats.items():
            dA = perturbation_to_primal(A, C, D, form=form)
            s[0] += operator_norm(dA) <= d + 1e-6
            s[1] = max(s[1], restricted_sv(A + dA, C, D).value)
    for form, (ok, worst) in stats.items():
        print(f"{form:15s} norm bound on {ok}/{done}, worst sigma(A + dA) = {worst:.2e}")
