"""Quotient s^r nu_r(C_m(t)) / nu_r(C_m(st)) over t for the three panels
(m = 50, 100, 200) and r in {0.5, 1, 2}; writes tables and prints minima."""

import argparse
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from conicgeom.bounds import BoundCurve
from conicgeom.geometry import DEFAULT_T_GRID, circular_quotient


@dataclass
class Figure1Config:
    dims: tuple = (50, 100, 200)
    rs: tuple = (0.5, 1.0, 2.0)
    s: float = 2.0
    t_grid: np.ndarray = field(default_factory=lambda: DEFAULT_T_GRID)
    out: Path = Path("out/figure1")


def run(cfg: Figure1Config):
    cfg.out.mkdir(parents=True, exist_ok=True)
    for m in cfg.dims:
        for r in cfg.rs:
            q = circular_quotient(m, cfg.t_grid, cfg.s, r)
            (cfg.out / f"quotient_m{m}_s{cfg.s:g}_r{r:g}.table").write_text(BoundCurve(cfg.t_grid, q, "quotient").to_table())
            i = int(np.argmin(q))
            print(f"m={m:4d} r={r:<4g} min={q[i]:.6f} at t={cfg.t_grid[i]:.2f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("out/figure1"))
    ap.add_argument("--s", type=float, default=2.0)
    a = ap.parse_args()
    run(Figure1Config(s=a.s, out=a.out))
