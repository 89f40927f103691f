"""Command line front end.

Cone grammar (one cone per argument, whitespace separated tokens,
parentheses group a sub-cone)::

    cone := "full" M            all of R^M
          | "zero" M            the origin in R^M
          | "orthant" M         nonnegative orthant
          | "circ" M T          {x : |x_2..x_M| <= T x_1}
          | "subspace" M K      span of the first K coordinate vectors
          | "polyv" FILE        cone generated by the columns of a matrix file
          | "polyh" FILE        {x : N^T x >= 0}, N the matrix in FILE
          | "polar" cone
          | "neg" cone          -C
          | "product" cone cone ...
          | "image" FILE cone   T C, T read from a matrix file
          | "(" cone ")"

Matrix files hold a '# rows cols' header followed by one row per line.

Exit codes: 0 success, 2 parse or dimension error, 3 solver failure,
4 unsupported cone combination.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from .bounds import BoundCurve, figure2_curves, fmt
from .cones import (Circular, Cone, Full, LinearImage, Orthant, Polar, PolyhedralH, PolyhedralV,
                    Product, UnsupportedProjection, ZeroCone, coordinate_subspace, normalize, zero_cone)
from .cones import _signed_identity
from .feasibility import classify
from .geometry import DEFAULT_T_GRID, UnsupportedProfile, circular_quotient, gwidth_sq, profile
from .restricted import OracleUnavailable, SolverConfig, SolverFailure, read_matrix

EXIT_PARSE, EXIT_SOLVER, EXIT_UNSUPPORTED = 2, 3, 4


class ConeSyntaxError(ValueError):
    pass


def _tokens(text: str) -> list[str]:
    return re.findall(r"\(|\)|[^\s()]+", text)


def parse_cone(text: str, base: Path | None = None) -> Cone:
    toks = _tokens(text)
    if not toks:
        raise ConeSyntaxError("empty cone specification")
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(toks):
            raise ConeSyntaxError(f"unexpected end of cone specification {text!r}")
        pos += 1
        return toks[pos - 1]

    def num(kind):
        tok = take()
        try:
            val = kind(tok)
        except ValueError:
            raise ConeSyntaxError(f"expected {kind.__name__}, got {tok!r}") from None
        if kind is int and val < 1 and tok != "0":
            raise ConeSyntaxError(f"dimension must be positive, got {tok!r}")
        return val

    def matrix():
        path = Path(take())
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            return read_matrix(path)
        except OSError as exc:
            raise ConeSyntaxError(f"cannot read matrix file {path}: {exc.strerror}") from None
        except ValueError as exc:
            raise ConeSyntaxError(str(exc)) from None

    def cone():
        nonlocal pos
        head = take()
        if head == "(":
            c = cone()
            if take() != ")":
                raise ConeSyntaxError("missing ')'")
            return c
        if head == "full":
            return Full(num(int))
        if head == "zero":
            return zero_cone(num(int))
        if head == "orthant":
            return Orthant(num(int))
        if head == "circ":
            m, t = num(int), num(float)
            if m < 2 or not t > 0:
                raise ConeSyntaxError("circ needs M >= 2 and T > 0")
            return Circular(m, t)
        if head == "subspace":
            m, k = num(int), num(int)
            if not 0 <= k <= m:
                raise ConeSyntaxError("subspace needs 0 <= K <= M")
            return coordinate_subspace(m, k)
        if head == "polyv":
            V = matrix()
            return PolyhedralV(V.shape[0], V)
        if head == "polyh":
            N = matrix()
            return PolyhedralH(N.shape[0], N)
        if head == "polar":
            return Polar(cone())
        if head == "neg":
            return -cone()
        if head == "image":
            T = matrix()
            inner = cone()
            try:
                return LinearImage(T, inner)
            except ValueError as exc:
                raise ConeSyntaxError(str(exc)) from None
        if head == "product":
            parts = [cone()]
            while pos < len(toks) and toks[pos] != ")":
                parts.append(cone())
            if len(parts) < 2:
                raise ConeSyntaxError("product needs at least two cones")
            return Product(tuple(parts))
        raise ConeSyntaxError(f"unknown cone keyword {head!r}")

    c = cone()
    if pos != len(toks):
        raise ConeSyntaxError(f"trailing tokens in {text!r}: {' '.join(toks[pos:])}")
    return c


def slug(spec: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "-", spec).strip("-")


def parse_grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise ConeSyntaxError(f"grid must be a:b:n, got {text!r}") from None
    if n < 1 or b < a:
        raise ConeSyntaxError("grid needs n >= 1 and a <= b")
    return np.linspace(a, b, n)


def _needs_sampling(C: Cone) -> bool:
    C = normalize(C)
    if isinstance(C, (PolyhedralV, PolyhedralH)):
        M = C.generators if isinstance(C, PolyhedralV) else C.normals
        return _signed_identity(M) is None
    if isinstance(C, Product):
        return any(_needs_sampling(p) for p in C.parts)
    if isinstance(C, Polar):
        return _needs_sampling(C.inner)
    return False


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- subcommands ------------------------------------------------------------

def cmd_profile(args) -> int:
    C = parse_cone(args.cone)
    if _needs_sampling(C) and args.seed is None:
        raise ConeSyntaxError("this cone's intrinsic volumes are sampled; pass --seed")
    p = profile(C, samples=args.samples, seed=args.seed or 0)
    lines = [f"# {p.m}"] + [fmt(v) for v in p.v]
    lines += [f"# delta={fmt(p.sdim)}", f"# dstar={fmt(gwidth_sq(p))}"]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_figure1(args) -> int:
    out = _out_dir(args.out)
    grid = parse_grid(args.grid) if args.grid else DEFAULT_T_GRID
    for m in args.m:
        if m < 2:
            raise ConeSyntaxError("figure1 needs m >= 2")
        for r in args.r:
            q = circular_quotient(m, grid, args.s, r)
            curve = BoundCurve(grid, q, "quotient")
            path = out / f"quotient_m{m}_s{args.s:g}_r{r:g}.table"
            path.write_text(curve.to_table())
            print(f"{path} min={fmt(q.min())}")
    return 0


def cmd_figure2(args) -> int:
    if args.seed is None:
        raise ConeSyntaxError("figure2 is stochastic; pass --seed")
    C, D = parse_cone(args.cone_C), parse_cone(args.cone_D)
    out = _out_dir(args.out)
    cfg = SolverConfig(multistarts=args.multistarts)
    grid = parse_grid(args.grid) if args.grid else None
    curves = figure2_curves(C, D, D.dim, C.dim, args.trials, args.seed, cfg, args.workers, grid=grid)
    tag = f"{slug(args.cone_C)}_{slug(args.cone_D)}_T{args.trials}_seed{args.seed}"
    for kind, curve in curves.items():
        path = out / f"{kind}_{tag}.table"
        path.write_text(curve.to_table())
        print(path)
    for kind in ("empirical_cdf_sv", "empirical_tail_norm"):
        if curves[kind].meta.get("unreliable"):
            print(f"warning: {curves[kind].meta['unreliable']} unreliable trials in {kind}", file=sys.stderr)
    return 0


def cmd_classify(args) -> int:
    try:
        A = read_matrix(args.matrix)
    except OSError as exc:
        raise ConeSyntaxError(f"cannot read matrix file {args.matrix}: {exc.strerror}") from None
    C, D = parse_cone(args.cone_C), parse_cone(args.cone_D)
    if A.shape != (D.dim, C.dim):
        raise ConeSyntaxError(f"matrix is {A.shape[0]}x{A.shape[1]} but the cones need {D.dim}x{C.dim}")
    cfg = SolverConfig(seed=args.seed or 0)
    sys.stdout.write(classify(A, C, D, cfg, args.tol).to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conicgeom", description="Conic geometry toolkit.",
                                 epilog="Cone grammar: " + " | ".join(
                                     ["full M", "zero M", "orthant M", "circ M T", "subspace M K",
                                      "polyv FILE", "polyh FILE", "polar (C)", "neg (C)",
                                      "product (C) (D) ...", "image FILE (C)"]))
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="intrinsic volumes with delta and dstar footer")
    p.add_argument("cone")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("figure1", help="circular-cone moment quotient tables")
    p.add_argument("--m", type=int, nargs="+", default=[50, 100, 200])
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("--r", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    p.add_argument("--grid", help="t grid a:b:n (default 0.01..1.00 step 0.01)")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("figure2", help="restricted norm / singular value distributions and bounds")
    p.add_argument("cone_C")
    p.add_argument("cone_D")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", help="lambda grid a:b:n (default: per kind from the Gaussian widths)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--multistarts", type=int, default=64)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_figure2)

    p = sub.add_parser("classify", help="biconic feasibility report")
    p.add_argument("matrix")
    p.add_argument("cone_C")
    p.add_argument("cone_D")
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_classify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConeSyntaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (UnsupportedProjection, UnsupportedProfile, OracleUnavailable, ZeroCone) as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
