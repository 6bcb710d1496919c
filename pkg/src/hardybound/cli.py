"""Command line entry point: ``run``, ``constant``, ``norm``, ``operator``, ``rubio``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from . import grid
from .harness import HypothesisError, run
from .operators import KernelSpec, frac_maximal, hilbert_transform, riesz_potential, singular_integral
from .rubio import IterationConfig, check_iteration_properties, estimate_maximal_opnorm, parse_h
from .spaces import LpSpace, VariableSpace
from .varlebesgue import parse_exponent
from .weights import CONSTANTS, constant_trend, parse_weight

log = logging.getLogger("hardybound")


def _grid_args(p: argparse.ArgumentParser, box=8.0, h=1 / 256):
    p.add_argument("--dimension", type=int, default=1)
    p.add_argument("--box", type=float, default=box, help="half-width of the box [-box, box]^n")
    p.add_argument("--h", type=float, default=h, help="grid spacing")


def _spec(a) -> grid.GridSpec:
    return grid.GridSpec.cube(a.dimension, -a.box, a.box, a.h)


def cmd_run(a) -> int:
    try:
        reports, code = run(a.config, a.output)
    except HypothesisError as e:
        print(f"rejected: {e}", file=sys.stderr)
        return 2
    for r in reports:
        print(f"{r.target}\t{r.verdict}\t" + " ".join(f"{m:.6g}" for m in r.max_ratio))
    return code


def cmd_constant(a) -> int:
    spec = _spec(a)
    w = parse_weight(a.weight, spec)
    params = {"p": a.p, "q": a.q, "s": a.s}
    rows = constant_trend(a.cls, w, levels=a.levels, random_per_level=a.random, seed=a.seed, **params)
    out = csv.writer(sys.stdout, lineterminator="\r\n")
    out.writerow(["level", "spacing", "value"])
    for k, (h, v) in enumerate(rows):
        out.writerow([k, repr(h), repr(v)])
    return 0


def cmd_norm(a) -> int:
    f = grid.load(a.input)
    if a.exponent:
        X = VariableSpace(parse_exponent(a.exponent, f.spec))
    else:
        w = parse_weight(a.weight, f.spec) if a.weight else None
        X = LpSpace(a.p, w)
    print(repr(X.norm(f)))
    return 0


def cmd_operator(a) -> int:
    f = grid.load(a.input)
    if a.kind == "hilbert":
        g = hilbert_transform(f)
    elif a.kind == "riesz":
        g = singular_integral(f, KernelSpec.riesz(a.j))
    elif a.kind == "potential":
        g = riesz_potential(f, a.alpha)
    else:
        g = frac_maximal(f, a.alpha)
    grid.save(g, a.out)
    return 0


def cmd_rubio(a) -> int:
    spec = _spec(a)
    r = parse_exponent(a.exponent, spec)
    h, prof = parse_h(a.h_expr, spec)
    B = estimate_maximal_opnorm(r, seed=a.seed).B if a.B is None else a.B
    cfg = IterationConfig(kMax=a.kmax, B=B)
    if not a.check:
        from .rubio import iterate
        grid.save(iterate(h, cfg), a.out or "Rh.grid")
        return 0
    rep = check_iteration_properties(h, cfg, r, profile=prof if a.stability else None, seed=a.seed)
    sys.stdout.write("# " + "; ".join(rep.notes) + f"; B={B!r}\r\n")
    sys.stdout.write(rep.to_csv())
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardybound")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="execute a YAML check config")
    p.add_argument("config")
    p.add_argument("--output", default=None, help="report directory (default: report)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("constant", help="weight constant per refinement level")
    p.add_argument("--class", dest="cls", choices=sorted(CONSTANTS), required=True)
    p.add_argument("--weight", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--random", type=int, default=200, help="random cubes per dyadic side")
    p.add_argument("--seed", type=int, default=0)
    _grid_args(p)
    p.set_defaults(fn=cmd_constant)

    p = sub.add_parser("norm", help="norm of a stored grid function")
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--weight")
    p.add_argument("--exponent")
    p.set_defaults(fn=cmd_norm)

    p = sub.add_parser("operator", help="apply an operator to a stored grid function")
    p.add_argument("--kind", choices=["hilbert", "riesz", "potential", "maximal"], required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_operator)

    p = sub.add_parser("rubio", help="Rubio de Francia iteration")
    p.add_argument("--exponent", required=True)
    p.add_argument("--h", dest="h_expr", required=True)
    p.add_argument("--kmax", type=int, default=12)
    p.add_argument("--B", type=float, default=None, help="operator-norm estimate (estimated when omitted)")
    p.add_argument("--check", action="store_true")
    p.add_argument("--stability", action="store_true", help="also compare composites on a refined grid")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dimension", type=int, default=1)
    p.add_argument("--box", type=float, default=4.0)
    p.add_argument("--spacing", dest="h", type=float, default=1 / 64)
    p.set_defaults(fn=cmd_rubio)
    return ap


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING)
    return a.fn(a)


if __name__ == "__main__":
    sys.exit(main())
