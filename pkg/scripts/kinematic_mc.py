"""Exact LP test of sigma_{C->D}(G) = 0 for Gaussian G against the
kinematic formula, for small orthant pairs."""

import argparse
import math

from conicgeom.cones import Orthant
from conicgeom.feasibility import kinematic_vanishing_prob
from conicgeom.geometry import orthant_profile
from conicgeom.numerics import stream_generator
from conicgeom.restricted import polyhedral_feasible

PAIRS = [(2, 1), (3, 2), (4, 4), (6, 4), (5, 7)]

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    for k, (m, n) in enumerate(PAIRS):
        rng = stream_generator(a.seed, k)
        hits = sum(polyhedral_feasible(rng.standard_normal((n, m)), Orthant(m), Orthant(n)) for _ in range(a.trials))
        p = kinematic_vanishing_prob(orthant_profile(m), orthant_profile(n), m, n)
        rate = hits / a.trials
        z = (rate - p) / max(math.sqrt(p * (1 - p) / a.trials), 1e-12)
        print(f"Orthant({m}) -> Orthant({n}): LP rate {rate:.4f}  formula {p:.4f}  z {z:+.2f}")
