"""Rubio de Francia iteration on variable Lebesgue spaces."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Cube, GridFunction, GridSpec
from .operators import hl_maximal
from .varlebesgue import ExponentFunction, luxemburg_norm
from .weights import CubeFamily, Weight, a1_constant, default_family, rh_constant

SERIES_NOTE = "series uses (2B)^k in the k-th denominator; the power on B is needed for ||Rh|| <= 2||h||"


@dataclass(frozen=True)
class MaximalNormEstimate:
    r: ExponentFunction
    B: float
    max_ratio: float
    witnesses: str


@dataclass(frozen=True)
class IterationConfig:
    kMax: int = 12
    B: float = 2.0
    k_power: bool = True

    def __post_init__(self):
        if self.kMax < 1:
            raise ValueError("kMax must be at least 1")
        if self.B < 1.01:
            raise ValueError("B must be at least 1.01")


def _witness(rng: np.random.Generator, spec: GridSpec) -> GridFunction:
    """Indicator, bump or truncated power spike, drawn inside the inner half of the box."""
    lo, hi = spec.lo / 2, spec.hi / 2
    kind = rng.integers(0, 3)
    if kind == 0:
        side = 2.0 ** -int(rng.integers(-1, 5))
        corner = lo + np.floor(rng.uniform(0, 1, spec.dimension) * (hi - lo - side) / side * 4) * side / 4
        return GridFunction.indicator(spec, Cube(tuple(corner), side))
    c = rng.uniform(lo, hi)
    rad = spec.radius(c)
    if kind == 1:
        rho = float(rng.uniform(0.1, 2.0))
        return GridFunction(spec, np.exp(-1.0 / np.maximum(1 - (rad / rho) ** 2, 1e-300)) * (rad < rho))
    beta = float(rng.uniform(0.1, 0.4)) * spec.dimension
    return GridFunction(spec, np.where(rad < 1.0, np.maximum(rad, spec.spacing / 2) ** -beta, 0.0))


def estimate_maximal_opnorm(r: ExponentFunction, count: int = 100, seed: int = 0,
                            family: list[GridFunction] | None = None) -> MaximalNormEstimate:
    """``B = 1.5 max ||Mg|| / ||g||`` over a seeded witness family."""
    if not r.p_minus > 1:
        raise ValueError("the maximal operator is unbounded unless r_- > 1")
    if family is None:
        rng = np.random.default_rng(seed)
        family = [_witness(rng, r.spec) for _ in range(count)]
        desc = f"mixed(count={count}, seed={seed})"
    else:
        desc = f"explicit({len(family)})"
    best = max(luxemburg_norm(hl_maximal(g), r) / luxemburg_norm(g, r) for g in family)
    return MaximalNormEstimate(r, max(1.5 * best, 1.01), best, desc)


def _denominator(k: int, cfg: IterationConfig) -> float:
    return (2.0 * cfg.B) ** k if cfg.k_power else 2.0 ** k * cfg.B


def iterate(h: GridFunction, cfg: IterationConfig) -> GridFunction:
    """``sum_(k <= kMax) M^k h / (2B)^k``."""
    if np.any(h.samples < 0):
        raise ValueError("h must be nonnegative")
    out = h.samples.copy()
    term = h
    for k in range(1, cfg.kMax + 1):
        term = hl_maximal(term)
        out = out + term.samples / _denominator(k, cfg)
    return GridFunction(h.spec, out)


def tail_bound(h: GridFunction, cfg: IterationConfig, r: ExponentFunction) -> float:
    """Bound for the dropped terms, assuming ``||M^k h|| <= B^k ||h||``."""
    return luxemburg_norm(h, r) * 2.0 ** -cfg.kMax


@dataclass
class IterationReport:
    rows: list[tuple[str, float, float, bool]] = field(default_factory=list)
    notes: list[str] = field(default_factory=lambda: [SERIES_NOTE])

    @property
    def passed(self) -> bool:
        return all(ok for *_, ok in self.rows)

    def add(self, name: str, value: float, bound: float, ok: bool | None = None):
        self.rows.append((name, float(value), float(bound), bool(value <= bound) if ok is None else ok))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["property", "value", "bound", "verdict"])
        for name, v, b, ok in self.rows:
            w.writerow([name, repr(v), repr(b), "pass" if ok else "fail"])
        return buf.getvalue()


def _composites(h: GridFunction, cfg: IterationConfig, tau_prime: float, q: float):
    h1 = iterate(h.map(lambda a: a ** tau_prime), cfg).map(lambda a: a ** (1.0 / tau_prime))
    h2 = iterate(h, cfg).map(lambda a: a ** (1.0 / q))
    return h1, h2


def check_iteration_properties(h: GridFunction, cfg: IterationConfig, r: ExponentFunction,
                               F: CubeFamily | None = None, tau_prime: float = 2.0, q: float = 2.0,
                               slack: float = 0.1, profile=None, stability: float = 1.10,
                               random_per_level: int = 200, seed: int = 0) -> IterationReport:
    """The four properties of the iteration.

    (1) ``h <= Rh``; (2) ``||Rh|| <= 2(1 + 2^-kMax)||h||``; (3) ``[Rh]_A1 <= 2B(1 + slack)``;
    (4) the composites ``R(h^t')^(1/t')`` and ``(Rh)^(1/q)`` have finite ``A_1`` and
    ``RH`` constants.  With ``profile`` (``GridSpec -> samples``) the composite
    constants are also recomputed on the next finer grid and must move by at most
    ``stability``.
    """
    spec = h.spec
    F = F or default_family(spec, random_per_level, seed)
    rep = IterationReport()
    Rh = iterate(h, cfg)
    gap = float(np.min(Rh.samples - h.samples))
    rep.add("max(h-Rh)", -gap, 0.0, gap >= 0)
    nh, nR = luxemburg_norm(h, r), luxemburg_norm(Rh, r)
    rep.add("norm", nR, 2.0 * (1 + 2.0 ** -cfg.kMax) * nh * (1 + 1e-12))
    rep.add("A1(Rh)", a1_constant(Weight(Rh), F), 2.0 * cfg.B * (1 + slack))

    def constants(sp, hh, fam):
        h1, h2 = _composites(hh, cfg, tau_prime, q)
        w1, w2 = Weight(h1), Weight(h2)
        return {
            "A1(H1)": a1_constant(w1, fam), f"RH{tau_prime:g}(H1)": rh_constant(w1, tau_prime, fam),
            "A1(H2)": a1_constant(w2, fam), f"RH{q:g}(H2)": rh_constant(w2, q, fam),
        }

    base = constants(spec, h, F)
    finer = None
    if profile is not None:
        sp2 = spec.refine(2)
        finer = constants(sp2, GridFunction(sp2, profile(sp2)), default_family(sp2, random_per_level, seed))
    for name, v in base.items():
        ok = math.isfinite(v)
        bound = math.inf
        if finer is not None:
            bound = stability * v
            ok = ok and math.isfinite(finer[name]) and finer[name] <= bound
            v = finer[name]
        rep.add(name, v, bound, ok)
    return rep


def parse_h(expr: str, spec: GridSpec):
    """``indicator:a,b`` (1D) / ``indicator:x0,y0,side`` (2D), ``one``, ``spike:x0[,y0],height``.

    Returns ``(GridFunction, profile)``.
    """
    kind, _, arg = expr.partition(":")
    nums = [float(v) for v in arg.split(",")] if arg else []
    if kind == "one":
        prof = lambda sp: np.ones(sp.shape)
    elif kind == "indicator":
        if spec.dimension == 1:
            Q = Cube((nums[0],), nums[1] - nums[0])
        else:
            Q = Cube(tuple(nums[:2]), nums[2])
        prof = lambda sp: GridFunction.indicator(sp, Q).samples
    elif kind == "spike":
        pt, height = nums[:-1], nums[-1]

        def prof(sp):
            out = np.zeros(sp.shape)
            out[sp.index_of(pt)] = height
            return out
    else:
        raise ValueError(f"unknown h expression {expr!r}")
    return GridFunction(spec, prof(spec)), prof
