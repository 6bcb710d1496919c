"""Checkers for the quantitative lemmas and theorems, with refinement tracking and reports.

Every checker builds grid-free instances from a seed, evaluates the two sides
of an inequality on ``refinementLevels`` grids (``h``, ``h/2``, ...) and
reports ``lhs / rhs`` per instance and level.  "``<~`` holds" is read as: all
ratios finite and the per-level maximum ratio grows by at most 10% per
refinement.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
import yaml

from .atoms import AtomicSum, atomic_recipe, coefficient_norm, hardy_quasinorm, moment_order_required, realize
from .grid import Cube, GridFunction, GridSpec, MollifierSpec, integrate_over, star
from .operators import (KernelSpec, OperatorParams, apply_kernel, apply_T_to_atom, frac_maximal, hl_maximal,
                        maximal_of_cube, moments_vanish, radial_maximal, smoothed_kernel)
from .spaces import LpSpace, VariableSpace
from .varlebesgue import ExponentFunction, fractional_target, is_log_holder, lh_constants, parse_exponent
from .weights import (Weight, ap_constant, apq_constant, default_family, parse_weight, rh_constant,
                      rh_inf_constant, rw_estimate)

TARGETS = ("L4.1", "L4.2", "L4.3", "L4.4", "R4.5", "L4.6", "L4.7", "L4.8", "L4.9", "L4.10",
           "L5.1", "L5.2", "L7.1", "T1.1", "T1.2", "T1.3", "T1.4", "T1.5", "T1.6")
VARIABLE_TARGETS = {"L4.2", "L4.4", "L4.8", "L4.10", "T1.2", "T1.4", "T1.6"}
TREND_LIMIT = 1.10
HYPOTHESIS_GROWTH = 1.25
IDENTITY_TOL = 1e-12
MOMENT_NOTE = "moment orders use the dimension n inside the floor"


class HypothesisError(ValueError):
    """A check was configured outside the hypotheses of its statement."""


# -- spec and report ---------------------------------------------------------------------

@dataclass
class CheckSpec:
    target: str
    p: float | None = None
    q: float | None = None
    r: float | None = None
    alpha: float = 0.0
    N: int | None = None
    weight: str | None = None
    exponent: str | None = None
    instances: int = 200
    seed: int = 0
    refinementLevels: int = 2
    dimension: int = 1
    h: float | None = None
    box: float | None = None
    variant: str | None = None
    kernel: str | None = None
    atoms: int = 4
    count: int = 8
    qavg: float | None = None
    split: bool = False
    nested: bool | None = None

    # -- derived -----------------------------------------------------------------
    @property
    def kind(self) -> str:
        if self.target in VARIABLE_TARGETS or (self.target == "R4.5" and self.exponent):
            return "variable"
        return "weighted"

    @property
    def base_spec(self) -> GridSpec:
        n = self.dimension
        h = self.h or (1 / 256 if n == 1 else 1 / 64)
        box = self.box or (8.0 if n == 1 else 4.0)
        return GridSpec.cube(n, -box, box, h)

    def levels(self) -> list[GridSpec]:
        base = self.base_spec
        return [base if k == 0 else base.refine(2 ** k) for k in range(self.refinementLevels)]

    def weight_on(self, spec: GridSpec) -> Weight:
        return _weight(self.weight or "const:1", spec)

    def exponent_on(self, spec: GridSpec) -> ExponentFunction:
        return _exponent(self.exponent, spec)

    # -- hypotheses ----------------------------------------------------------------
    def validate(self) -> "CheckSpec":
        """Raise :class:`HypothesisError` naming the violated condition."""
        t, n, a = self.target, self.dimension, self.alpha
        if t not in TARGETS:
            raise HypothesisError(f"unknown target {t!r}")
        if self.refinementLevels < 2:
            raise HypothesisError("refinementLevels must be at least 2")
        if self.instances < 1:
            raise HypothesisError("instances must be positive")
        if self.dimension not in (1, 2):
            raise HypothesisError("dimension must be 1 or 2")

        def need(cond, msg):
            if not cond:
                raise HypothesisError(f"{t}: {msg}")

        def need_p():
            need(self.p is not None, "needs p")

        def need_exp():
            need(self.exponent is not None, "needs an exponent")
            return self.exponent_on(self.base_spec)

        def identity():
            need(self.p is not None and self.q is not None, "needs p and q")
            lhs, rhs = 1 / self.q, 1 / self.p - a / n
            need(abs(lhs - rhs) <= IDENTITY_TOL,
                 f"requires 1/q = 1/p - alpha/n; got 1/q={lhs!r}, 1/p - alpha/n={rhs!r}")

        r = self.r if self.r is not None else 2.0
        if t in ("L4.1", "L4.2", "L4.3", "L4.4"):
            need(1 < r < math.inf, "requires 1 < r < inf")
        if t == "L4.1":
            need_p()
            need(1 < self.p < math.inf, "requires 1 < p < inf")
        elif t == "L4.2":
            e = need_exp()
            need(1 < e.p_minus <= e.p_plus < math.inf, "requires 1 < p_- <= p_+ < inf")
        elif t == "L4.3":
            need(0 <= a < n, "requires 0 <= alpha < n")
            need_p()
            need(1 < self.p < (n / a if a else math.inf), "requires 1 < p < n/alpha")
            identity()
        elif t == "L4.4":
            need(0 < a < n, "requires 0 < alpha < n")
            e = need_exp()
            need(1 < e.p_minus and e.p_plus < n / a, "requires 1 < p_- <= p_+ < n/alpha")
        elif t == "R4.5":
            if self.exponent is None:
                need_p()
                need(self.p > 0, "requires p > 0")
            else:
                need_exp()
        elif t == "L4.6":
            need_p()
            need(0 < self.p <= 1, "requires 0 < p <= 1")
        elif t == "L4.7":
            need_p()
            need(self.qavg is not None and self.qavg > 1, "requires q > 1 (field qavg)")
            need(0 < self.p < self.qavg, "requires 0 < p < q")
        elif t == "L4.8":
            e = need_exp()
            if (self.variant or "variable") == "variable":
                need(0 < e.p_minus and e.p_plus < 1, "requires 0 < p_- <= p_+ < 1")
            else:
                need(self.qavg is not None and e.p_plus < self.qavg < math.inf, "requires p_+ < q < inf")
        elif t == "L4.9":
            need(0 < a < n, "requires 0 < alpha < n")
            need_p()
            need(0 < self.p < n / a, "requires 0 < p < n/alpha")
            identity()
        elif t == "L4.10":
            need(0 < a < n, "requires 0 < alpha < n")
            e = need_exp()
            need(0 < e.p_minus and e.p_plus < n / a, "requires 0 < p_- <= p_+ < n/alpha")
        elif t in ("L5.1", "L5.2"):
            k = self.kernel_spec()
            need(k.is_convolution, "needs a convolution kernel")
        elif t == "L7.1":
            need(not self.kernel_spec().is_convolution, "needs a nonconvolution kernel")
        elif t in ("T1.1", "T1.5"):
            need_p()
            need(self.p > 0, "requires 0 < p < inf")
        elif t == "T1.3":
            need(0 < a < n, "requires 0 < alpha < n")
            need_p()
            need(0 < self.p < n / a, "requires 0 < p < n/alpha")
            identity()
        elif t in ("T1.2", "T1.6"):
            e = need_exp()
            need(0 < e.p_minus <= e.p_plus < math.inf, "requires 0 < p_- <= p_+ < inf")
        elif t == "T1.4":
            need(0 < a < n, "requires 0 < alpha < n")
            e = need_exp()
            need(0 < e.p_minus and e.p_plus < n / a, "requires 0 < p_- <= p_+ < n/alpha")
        if t.startswith("T1") and self.N is not None:
            low = self.moment_order()
            need(self.N >= low, f"moment order N={self.N} is below the admissible minimum {low}")
        return self

    def kernel_spec(self) -> KernelSpec:
        name = self.kernel or _default_kernel(self)
        return make_kernel(name, self.dimension, self.alpha, self.L if self.target in ("L7.1", "T1.5", "T1.6")
                           else -1, self.box or (8.0 if self.dimension == 1 else 4.0))

    @property
    def L(self) -> int:
        """Vanishing-moment order for the nonconvolution checks."""
        if self.target == "L7.1":
            return self.N - 1 if self.N is not None else 0
        n = self.dimension
        if self.target == "T1.6":
            return moment_order_required("variable", n, self.exponent_on(self.base_spec).p_minus, which="L")
        return moment_order_required("weighted", n, self.p, _rw(self.weight or "const:1", self.base_spec),
                                     which="L")

    def moment_order(self) -> int:
        """Smallest atom moment order the target admits."""
        n, t = self.dimension, self.target
        base = self.base_spec
        if t == "T1.1":
            return moment_order_required("weighted", n, self.p, _rw(self.weight or "const:1", base))
        if t == "T1.2":
            return moment_order_required("variable", n, self.exponent_on(base).p_minus)
        if t in ("T1.5", "T1.6"):
            return self.L + 1
        if t == "T1.3":
            w = self.weight or "const:1"
            low = moment_order_required("weighted", n, self.p, _rw(w, base, self.p))
            rq = _rw(w, base, self.q)
            N = 0
            while (n - self.alpha + N + 1) / n * self.q <= rq:
                N += 1
            return max(low, N)
        if t == "T1.4":
            pm = self.exponent_on(base).p_minus
            N = moment_order_required("variable", n, pm)
            while pm * (n + N + 1) / n <= 1:
                N += 1
            return N
        return self.N if self.N is not None else 0


@dataclass
class CheckReport:
    target: str
    rows: list[tuple[int, int, float, float, float]] = field(default_factory=list)
    max_ratio: list[float] = field(default_factory=list)
    trend: list[float] = field(default_factory=list)
    verdict: str = "indeterminate"
    provenance: dict = field(default_factory=dict)
    hypotheses: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def ratios(self, level: int | None = None) -> np.ndarray:
        return np.array([r[4] for r in self.rows if level is None or r[1] == level])

    def to_csv(self, timestamp: str | None = None) -> str:
        buf = io.StringIO()
        if timestamp is not None:
            buf.write(f"# generated {timestamp}\r\n")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["instance", "level", "lhs", "rhs", "ratio"])
        for i, l, lhs, rhs, ratio in self.rows:
            w.writerow([i, l, repr(float(lhs)), repr(float(rhs)), repr(float(ratio))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"target": self.target, "verdict": self.verdict, "max_ratio": self.max_ratio,
                "trend": self.trend, "hypotheses": self.hypotheses, "provenance": self.provenance,
                "notes": self.notes, "diagnostics": self.diagnostics}


def verdict_from(max_ratio: list[float], all_finite: bool, limit: float = TREND_LIMIT) -> tuple[str, list[float]]:
    if not all_finite or not all(math.isfinite(m) for m in max_ratio):
        return "fail", []
    trend = [b / a if a > 0 else (1.0 if b == 0 else math.inf) for a, b in zip(max_ratio, max_ratio[1:])]
    bad = [t > limit for t in trend]
    if not any(bad):
        return "pass", trend
    if any(x and y for x, y in zip(bad, bad[1:])):
        return "fail", trend
    return "indeterminate", trend


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


# -- cached parameter objects --------------------------------------------------------------

@lru_cache(maxsize=256)
def _weight(expr: str, spec: GridSpec) -> Weight:
    return parse_weight(expr, spec)


@lru_cache(maxsize=256)
def _exponent(expr: str, spec: GridSpec) -> ExponentFunction:
    return parse_exponent(expr, spec)


@lru_cache(maxsize=64)
def _family(spec: GridSpec):
    return default_family(spec, 200, 0)


@lru_cache(maxsize=64)
def _rw(expr: str, spec: GridSpec, s: float = 1.0) -> float:
    """``r_(w^s)``: closed form for constant and power weights, estimated otherwise."""
    kind, _, arg = expr.partition(":")
    if kind == "const":
        return 1.0
    if kind == "power":
        a = float(arg.partition("@")[0]) * s
        if a > -spec.dimension:
            return 1.0 + max(a, 0.0) / spec.dimension
    w = parse_weight(expr, spec)
    est = rw_estimate(w if s == 1 else w.power(s))
    return float(est) if isinstance(est, (int, float)) else math.inf


def make_kernel(name: str, n: int = 1, alpha: float = 0.5, L: int = -1, radius: float = 8.0) -> KernelSpec:
    """``hilbert``, ``riesz1``, ``riesz2``, ``power``, ``conv-<k>`` or ``mod-<k>``."""
    if name.startswith("conv-"):
        return KernelSpec.from_convolution(make_kernel(name[5:], n, alpha), max(L, 0), radius)
    if name.startswith("mod-"):
        return KernelSpec.modulated(make_kernel(name[4:], n, alpha), L, radius)
    if name == "hilbert":
        return KernelSpec.hilbert()
    if name in ("riesz1", "riesz2"):
        return KernelSpec.riesz(int(name[-1]) - 1)
    if name == "power":
        return KernelSpec.power(alpha, n)
    raise HypothesisError(f"unknown kernel {name!r}")


def _default_kernel(spec: CheckSpec) -> str:
    single = "hilbert" if spec.dimension == 1 else "riesz1"
    if spec.target in ("T1.3", "T1.4") or (spec.target in ("L5.1", "L5.2") and spec.alpha > 0):
        return "power"
    if spec.target in ("L7.1", "T1.5", "T1.6"):
        return "mod-" + single
    return single


# -- instance generation -------------------------------------------------------------------

Profile = Callable[[GridSpec], np.ndarray]


def _aligned_cube(rng: np.random.Generator, n: int, lo: float, hi: float, side: float) -> Cube:
    """Cube of the given side with corner on the ``side/2`` lattice inside ``[lo, hi]^n``."""
    slots = int(round((hi - lo - side) / (side / 2))) + 1
    return Cube(tuple(lo + side / 2 * rng.integers(0, max(slots, 1), n)), side)


def _piece(rng: np.random.Generator, Q: Cube, nonneg: bool) -> Profile:
    """Indicator, bump or step function carried by ``Q``."""
    kind = int(rng.integers(0, 3))
    amp = float(rng.uniform(0.5, 2.0)) * (1 if nonneg or rng.random() < 0.5 else -1)
    if kind == 0:
        return lambda sp: amp * GridFunction.indicator(sp, Q).samples
    if kind == 1:
        rho = Q.side / 2

        def bump(sp):
            r = sp.radius(Q.center) / rho
            return amp * math.e * np.exp(-1.0 / np.maximum(1 - r * r, 1e-300)) * (r < 1)

        return bump
    m = 2 ** int(rng.integers(1, 3))
    table = rng.uniform(0.0 if nonneg else -1.0, 1.0, (m,) * Q.dimension)

    def steps(sp):
        out = np.zeros(sp.shape)
        sl = Q.slices(sp)
        loc = [np.minimum(((ax[s] - c) / Q.side * m).astype(int), m - 1) for ax, s, c in zip(sp.axes(), sl, Q.corner)]
        out[sl] = table[np.ix_(*loc)]
        return out

    return steps


def _random_functions(rng, n: int, half: float, count: int, nonneg: bool = False):
    k = int(rng.integers(1, count + 1))
    out = []
    for _ in range(k):
        side = 2.0 ** -int(rng.integers(-1, 4))
        Q = _aligned_cube(rng, n, -half / 2, half / 2, side)
        out.append((Q, _piece(rng, Q, nonneg)))
    return out


def _random_cubes(rng, n: int, lo: float, hi: float, count: int, nested: bool = False) -> list[Cube]:
    k = int(rng.integers(1, count + 1)) if not nested else count
    if nested:
        side = 2.0
        Q = _aligned_cube(rng, n, lo, hi, side)
        cubes = [Q]
        for _ in range(k - 1):
            side /= 2
            child = tuple(c + side * int(rng.integers(0, 2)) for c in cubes[-1].corner)
            cubes.append(Cube(child, side))
        return cubes
    return [_aligned_cube(rng, n, lo, hi, 2.0 ** -int(rng.integers(-1, 4))) for _ in range(k)]


def _vector_norm(fs: list[np.ndarray], r: float) -> np.ndarray:
    return sum(np.abs(f) ** r for f in fs) ** (1.0 / r)


# -- sides of each inequality (also usable directly) ------------------------------------------

def fs_sides(gs: list[GridFunction], r: float, X_left, X_right, alpha: float = 0.0) -> tuple[float, float]:
    """``||(sum (M_alpha g_k)^r)^(1/r)||_left`` and ``||(sum |g_k|^r)^(1/r)||_right``."""
    spec = gs[0].spec
    Mg = [frac_maximal(g, alpha).samples for g in gs]
    lhs = X_left.norm(GridFunction(spec, _vector_norm(Mg, r)))
    rhs = X_right.norm(GridFunction(spec, _vector_norm([g.samples for g in gs], r)))
    return lhs, rhs


def gk_sides(gs: list[GridFunction], cubes: list[Cube], X, qavg: float | None = None) -> tuple[float, float]:
    """``||sum g_k||`` against ``||sum avg_Qk(g_k^q)^(1/q) chi_Qk||`` (``q = 1`` when ``qavg`` is None)."""
    spec = gs[0].spec
    lhs = X.norm(GridFunction(spec, sum(g.samples for g in gs)))
    acc = np.zeros(spec.shape)
    for g, Q in zip(gs, cubes):
        q = qavg or 1.0
        avg = integrate_over(g.map(lambda a: np.abs(a) ** q), Q) / Q.volume
        acc[Q.slices(spec)] += avg ** (1.0 / q)
    return lhs, X.norm(GridFunction(spec, acc))


def frac_cube_sides(cubes: list[Cube], lams, spec: GridSpec, alpha: float, X_left, X_right) -> tuple[float, float]:
    """``||sum lam |Q|^(alpha/n) chi_Q||_left`` and ``||sum lam chi_Q||_right``."""
    n = spec.dimension
    a = np.zeros(spec.shape)
    b = np.zeros(spec.shape)
    for Q, lam in zip(cubes, lams):
        sl = Q.slices(spec)
        a[sl] += lam * Q.volume ** (alpha / n)
        b[sl] += lam
    return X_left.norm(GridFunction(spec, a)), X_right.norm(GridFunction(spec, b))


def dilation_sides(cubes: list[Cube], lams, spec: GridSpec, X) -> tuple[float, float]:
    a = np.zeros(spec.shape)
    b = np.zeros(spec.shape)
    for Q, lam in zip(cubes, lams):
        a[star(Q).slices(spec)] += lam
        b[Q.slices(spec)] += lam
    return X.norm(GridFunction(spec, a)), X.norm(GridFunction(spec, b))


def theorem_sides(f: AtomicSum, K: KernelSpec, X_source, X_target, phi: MollifierSpec | None = None,
                  t_grid=None) -> tuple[float, float]:
    """``||M_phi(T f)||_target`` and ``||sum lam chi_Q||_source``."""
    Tf = apply_kernel(f.function(), K)
    return hardy_quasinorm(Tf, X_target, phi, t_grid), coefficient_norm(f, X_source)


def theorem_split(f: AtomicSum, K: KernelSpec, X_target, phi=None, t_grid=None) -> dict:
    """Local (on each ``Q_i*``) and global parts of ``sum lam M_phi(T a_i)``."""
    spec = f.spec
    loc = np.zeros(spec.shape)
    glob = np.zeros(spec.shape)
    for lam, a in f.terms:
        m = radial_maximal(apply_kernel(a.samples, K), phi, t_grid).samples
        mask = star(a.Q).mask(spec)
        loc += lam * m * mask
        glob += lam * m * ~mask
    return {"local": X_target.norm(GridFunction(spec, loc)), "global": X_target.norm(GridFunction(spec, glob))}


# -- the engine ------------------------------------------------------------------------------

def _execute(spec: CheckSpec, build: Callable, hypotheses: Callable[[GridSpec], dict] | None = None,
             notes: list[str] | None = None, extra_verdict: Callable[[CheckReport], str | None] | None = None
             ) -> CheckReport:
    levels = spec.levels()
    rep = CheckReport(spec.target, notes=list(notes or []))
    rep.provenance = {"seed": spec.seed, "instances": spec.instances,
                      "grids": [{"dimension": s.dimension, "box": s.box, "spacing": s.spacing} for s in levels],
                      "spec": {k: v for k, v in asdict(spec).items() if v is not None}}
    refuse = []
    if hypotheses is not None:
        per_level = [hypotheses(sp) for sp in levels]
        for name in per_level[0]:
            vals = [pl[name] for pl in per_level]
            rep.hypotheses[name] = vals
            if isinstance(vals[0], bool):
                if not all(vals):
                    refuse.append(name)
                continue
            if not all(math.isfinite(v) for v in vals) or any(
                    b > HYPOTHESIS_GROWTH * a for a, b in zip(vals, vals[1:])):
                refuse.append(name)
    skipped = []
    for i in range(spec.instances):
        rng = np.random.default_rng([spec.seed, i])
        inst = build(rng, i)
        if inst is None:
            skipped.append(i)
            continue
        for l, sp in enumerate(levels):
            lhs, rhs = inst(sp, l)
            rep.rows.append((i, l, float(lhs), float(rhs), _ratio(lhs, rhs)))
    if skipped:
        rep.provenance["skipped_instances"] = skipped
    finite = all(math.isfinite(r[4]) for r in rep.rows)
    rep.max_ratio = [float(max((r[4] for r in rep.rows if r[1] == l), default=0.0)) for l in range(len(levels))]
    rep.verdict, rep.trend = verdict_from(rep.max_ratio, finite)
    if extra_verdict is not None:
        override = extra_verdict(rep)
        if override == "fail" or (override == "indeterminate" and rep.verdict == "pass"):
            rep.verdict = override
    if refuse:
        rep.notes.append("hypothesis constant diverges under refinement: " + ", ".join(refuse))
        rep.verdict = "indeterminate"
    return rep


def _spaces(spec: CheckSpec, sp: GridSpec, which: str):
    """Source/target spaces on a level for the weighted and variable forms."""
    if spec.kind == "variable":
        p = spec.exponent_on(sp)
        if which == "q":
            return VariableSpace(fractional_target(p, spec.alpha, sp.dimension))
        return VariableSpace(p)
    w = spec.weight_on(sp)
    if which == "p":
        return LpSpace(spec.p, w)
    if which == "wp":
        return LpSpace(spec.p, w.power(spec.p))
    if which == "wq":
        return LpSpace(spec.q, w.power(spec.q))
    raise ValueError(which)


def _lh_hypothesis(spec: CheckSpec):
    def hyp(sp):
        p = spec.exponent_on(sp)
        return {"C0": lh_constants(p)[0], "LH": bool(is_log_holder(p))}
    return hyp


# -- checkers ----------------------------------------------------------------------------------

def check_fs(kind: str, spec: CheckSpec) -> CheckReport:
    """Vector-valued maximal inequality, weighted (``A_p``) or variable (LH)."""
    spec.validate()
    r = spec.r or 2.0
    half = spec.base_spec.hi[0]

    def build(rng, i):
        pieces = _random_functions(rng, spec.dimension, half, spec.count)

        def on(sp, l):
            gs = [GridFunction(sp, prof(sp)) for _, prof in pieces]
            X = _spaces(spec, sp, "p")
            return fs_sides(gs, r, X, X)
        return on

    if kind == "weighted":
        hyp = lambda sp: {f"A{spec.p:g}": ap_constant(spec.weight_on(sp), spec.p, _family(sp))}
    else:
        hyp = _lh_hypothesis(spec)
    return _execute(spec, build, hyp)


def check_fracfs(kind: str, spec: CheckSpec) -> CheckReport:
    """Vector-valued fractional maximal inequality from ``L^p(w^p)`` / ``L^p(.)`` to the ``q`` side."""
    spec.validate()
    r = spec.r or 2.0
    half = spec.base_spec.hi[0]

    def build(rng, i):
        pieces = _random_functions(rng, spec.dimension, half, spec.count)

        def on(sp, l):
            gs = [GridFunction(sp, prof(sp)) for _, prof in pieces]
            if kind == "variable":
                return fs_sides(gs, r, _spaces(spec, sp, "q"), _spaces(spec, sp, "p"), spec.alpha)
            return fs_sides(gs, r, _spaces(spec, sp, "wq"), _spaces(spec, sp, "wp"), spec.alpha)
        return on

    if kind == "weighted":
        hyp = lambda sp: {f"A{spec.p:g},{spec.q:g}": apq_constant(spec.weight_on(sp), spec.p, spec.q, _family(sp))}
    else:
        hyp = _lh_hypothesis(spec)
    return _execute(spec, build, hyp)


def check_dilation(spec: CheckSpec) -> CheckReport:
    """``||sum lam chi_Q*|| <~ ||sum lam chi_Q||`` for weighted or variable norms."""
    spec.validate()
    half = spec.base_spec.hi[0]
    n = spec.dimension

    def build(rng, i):
        cubes = _random_cubes(rng, n, -half / 2, half / 2, spec.count)
        lams = np.exp(rng.uniform(math.log(0.1), math.log(10.0), len(cubes)))

        def on(sp, l):
            return dilation_sides(cubes, lams, sp, _spaces(spec, sp, "p"))
        return on

    if spec.kind == "weighted":
        r = spec.r or 2.0
        s = (r if r * spec.p > 1 else 2.0 / spec.p) * spec.p
        hyp = lambda sp: {f"A{s:g}": ap_constant(spec.weight_on(sp), s, _family(sp))}
    else:
        hyp = _lh_hypothesis(spec)
    return _execute(spec, build, hyp)


def check_gk(variant: str, spec: CheckSpec) -> CheckReport:
    """Grafakos-Kalton type inequalities over overlapping (or nested) cube families.

    ``variant`` is ``p<=1`` (averages, weighted), ``q-average`` (``L^q``
    averages, weighted), ``variable`` or ``variable-q``.
    """
    spec.validate()
    half = spec.base_spec.hi[0]
    n = spec.dimension
    qavg = spec.qavg if variant in ("q-average", "variable-q") else None

    def build(rng, i):
        nested = bool(i % 2) if spec.nested is None else spec.nested
        cubes = _random_cubes(rng, n, -half / 4, half / 4, spec.count, nested)
        profs = [_piece(rng, Q, True) for Q in cubes]

        def on(sp, l):
            gs = [GridFunction(sp, pr(sp)) for pr in profs]
            return gk_sides(gs, cubes, _spaces(spec, sp, "p"), qavg)
        return on

    if variant == "p<=1":
        if spec.p == 1:
            hyp = lambda sp: {"RHinf": rh_inf_constant(spec.weight_on(sp), _family(sp))}
        else:
            s = 1.0 / (1.0 - spec.p)
            hyp = lambda sp: {f"RH{s:g}": rh_constant(spec.weight_on(sp), s, _family(sp))}
    elif variant == "q-average":
        s = spec.qavg / (spec.qavg - spec.p)
        hyp = lambda sp: {f"RH{s:g}": rh_constant(spec.weight_on(sp), s, _family(sp))}
    else:
        hyp = _lh_hypothesis(spec)
    return _execute(spec, build, hyp)


def check_frac_cubes(kind: str, spec: CheckSpec) -> CheckReport:
    """``||sum lam |Q|^(alpha/n) chi_Q||_q-side <~ ||sum lam chi_Q||_p-side``."""
    spec.validate()
    half = spec.base_spec.hi[0]
    n = spec.dimension

    def build(rng, i):
        cubes = _random_cubes(rng, n, -half / 2, half / 2, spec.count)
        lams = np.exp(rng.uniform(math.log(0.1), math.log(10.0), len(cubes)))

        def on(sp, l):
            if kind == "variable":
                return frac_cube_sides(cubes, lams, sp, spec.alpha, _spaces(spec, sp, "q"), _spaces(spec, sp, "p"))
            return frac_cube_sides(cubes, lams, sp, spec.alpha, _spaces(spec, sp, "wq"), _spaces(spec, sp, "wp"))
        return on

    if kind == "weighted":
        s = spec.q / spec.p
        hyp = lambda sp: {f"RH{s:g}(w^p)": rh_constant(spec.weight_on(sp).power(spec.p), s, _family(sp))}
    else:
        hyp = _lh_hypothesis(spec)
    return _execute(spec, build, hyp)


def _smoothing_bound(K: KernelSpec, phi: MollifierSpec, t: float, points: int) -> float:
    xs = np.geomspace(t / 16, 16 * t, points)
    if K.dimension == 1:
        pts = xs[:, None]
    else:
        th = np.linspace(0, 2 * math.pi, 9)[:-1]
        pts = np.array([[x * math.cos(a), x * math.sin(a)] for x in xs for a in th])
        xs = np.linalg.norm(pts, axis=1)
    return float(np.max(np.abs(smoothed_kernel(K, phi, t)(pts)) * xs ** K.decay))


def check_kernel_tail(spec: CheckSpec) -> CheckReport:
    """Smoothed-kernel bound (``L5.1``) or far-field atom ratios (``L5.2``, ``L7.1``)."""
    spec.validate()
    K = spec.kernel_spec()
    n = spec.dimension
    phi = MollifierSpec(n)
    if spec.target == "L5.1":
        ts = [2.0 ** -k for k in range(min(spec.instances, 3))]

        def build(rng, i):
            if i >= len(ts):
                return None
            return lambda sp, l: (_smoothing_bound(K, phi, ts[i], 24 * 2 ** l), 1.0)

        def spread(rep):
            vals = [r[2] for r in rep.rows if r[1] == len(spec.levels()) - 1]
            rep.provenance["B1_spread"] = max(vals) / min(vals)
            return "fail" if max(vals) > 2 * min(vals) else None

        return _execute(spec, build, None, [f"t in {ts}"], spread)

    L = spec.L if spec.target == "L7.1" else None
    N = (L + 1) if L is not None else (spec.N if spec.N is not None else 0)
    half = spec.base_spec.hi[0]
    sub = {"checked": 0, "failed_moments": []}
    agree = []

    def build(rng, i):
        recipe = atomic_recipe(int(rng.integers(0, 2 ** 31)), 1, N, n, box=half)
        if L is not None and L >= 0:
            a = realize(recipe, spec.base_spec).terms[0][1]
            ok, _ = moments_vanish(apply_kernel(a.samples, K), a.Q, L)
            sub["checked"] += 1
            if not ok:
                sub["failed_moments"].append(i)
                return None

        def on(sp, l):
            a = realize(recipe, sp).terms[0][1]
            res = apply_T_to_atom(a, K, phi)
            ok = np.isfinite(res.ratio)
            if not ok.any():
                return 0.0, 1.0
            j = np.unravel_index(np.nanargmax(np.where(ok, res.ratio, -np.inf)), res.ratio.shape)
            num = float(radial_maximal(res.Ta, phi).samples[j])
            if K.kind == "power" and l == 0 and N == 0:
                agree.append(_far_field_agreement(a, K, sp))
            return num, num / res.sup_ratio if res.sup_ratio > 0 else 1.0
        return on

    def extra(rep):
        rep.provenance["moment_checks"] = sub
        if agree:
            rep.provenance["far_field_agreement"] = [min(agree), max(agree)]
            if max(agree) > 4 or min(agree) < 0.25:
                return "fail"
        return None

    notes = ["ratio excludes Q* (convolution) or Q** (nonconvolution)"]
    return _execute(spec, build, None, notes, extra)


def _far_field_agreement(a, K: KernelSpec, sp: GridSpec) -> float:
    """Worst ratio of ``M_(alpha_tau)(chi_Q)^tau`` to ``l^(n+N+1)/|x-c|^(n-alpha+N+1)`` off ``Q*``."""
    params = OperatorParams(K.alpha, a.N, sp.dimension)
    m = maximal_of_cube(sp, a.Q, params.alpha_tau).samples ** params.tau
    d = sp.radius(a.Q.center)
    far = ~star(a.Q).mask(sp) & (d > 2 * a.Q.side)
    model = a.Q.side ** (sp.dimension + a.N + 1) / d[far] ** (sp.dimension - K.alpha + a.N + 1)
    r = m[far] / model
    return float(r.max()) if r.max() >= 1 / r.min() else float(r.min())


def check_theorem(tid: str, spec: CheckSpec) -> CheckReport:
    """``||M_phi(T f)||_target / ||sum lam chi_Q||_source`` over random finite atomic sums."""
    if spec.target != tid:
        spec = CheckSpec(**{**asdict(spec), "target": tid})
    spec.validate()
    K = spec.kernel_spec()
    n = spec.dimension
    N = spec.N if spec.N is not None else spec.moment_order()
    half = spec.base_spec.hi[0]
    phi = MollifierSpec(n)
    L = spec.L if tid in ("T1.5", "T1.6") else None
    skipped_atoms = []

    def spaces(sp):
        if spec.kind == "variable":
            src = _spaces(spec, sp, "p")
            tgt = _spaces(spec, sp, "q") if tid == "T1.4" else src
        elif tid == "T1.3":
            src, tgt = _spaces(spec, sp, "wp"), _spaces(spec, sp, "wq")
        else:
            src = tgt = _spaces(spec, sp, "p")
        return src, tgt

    def build(rng, i):
        recipe = atomic_recipe(int(rng.integers(0, 2 ** 31)), spec.atoms, N, n, box=half)
        if L is not None and L >= 0:
            base = realize(recipe, spec.base_spec)
            keep = []
            for rcp, (_, a) in zip(recipe, base.terms):
                if moments_vanish(apply_kernel(a.samples, K), a.Q, L)[0]:
                    keep.append(rcp)
                else:
                    skipped_atoms.append(i)
            if not keep:
                return None
            recipe = tuple(keep)

        def on(sp, l):
            f = realize(recipe, sp)
            src, tgt = spaces(sp)
            if spec.split and i == 0:
                d = theorem_split(f, K, tgt, phi)
                d.update(level=l)
                diags.append(d)
            return theorem_sides(f, K, src, tgt, phi)
        return on

    diags: list[dict] = []
    if spec.kind == "variable":
        hyp = _lh_hypothesis(spec)
    elif tid == "T1.3":
        s = spec.q / spec.p
        hyp = lambda sp: {f"RH{s:g}(w^p)": rh_constant(spec.weight_on(sp).power(spec.p), s, _family(sp))}
    else:
        s = _rw(spec.weight or "const:1", spec.base_spec) + 1.0
        hyp = lambda sp: {f"A{s:g}": ap_constant(spec.weight_on(sp), s, _family(sp))}
    notes = [MOMENT_NOTE, f"atoms use N={N}", f"kernel {K.name}"]
    rep = _execute(spec, build, hyp, notes)
    rep.diagnostics = diags
    if skipped_atoms:
        rep.provenance["atoms_failing_moments"] = skipped_atoms
    return rep


def check(spec: CheckSpec) -> CheckReport:
    t = spec.target
    if t in ("L4.1", "L4.2"):
        return check_fs(spec.kind, spec)
    if t in ("L4.3", "L4.4"):
        return check_fracfs(spec.kind, spec)
    if t == "R4.5":
        return check_dilation(spec)
    if t in ("L4.6", "L4.7", "L4.8"):
        variant = spec.variant or {"L4.6": "p<=1", "L4.7": "q-average", "L4.8": "variable"}[t]
        return check_gk(variant, spec)
    if t in ("L4.9", "L4.10"):
        return check_frac_cubes(spec.kind, spec)
    if t in ("L5.1", "L5.2", "L7.1"):
        return check_kernel_tail(spec)
    if t.startswith("T1"):
        return check_theorem(t, spec)
    raise HypothesisError(f"unknown target {t!r}")


# -- configuration and reports ------------------------------------------------------------------

SPEC_FIELDS = {f.name for f in fields(CheckSpec)}


def parse_config(text: str) -> tuple[list[CheckSpec], dict]:
    """YAML with a ``checks`` list; every entry uses the CheckSpec field names."""
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise HypothesisError("config must be a mapping")
    specs = []
    for k, entry in enumerate(data.get("checks") or []):
        unknown = set(entry) - SPEC_FIELDS
        if unknown:
            raise HypothesisError(f"check {k}: unknown fields {sorted(unknown)}")
        specs.append(CheckSpec(**entry).validate())
    options = {k: v for k, v in data.items() if k != "checks"}
    return specs, options


def svg_trend(report: CheckReport, width: int = 480, height: int = 320) -> str:
    """Max ratio against refinement level as a single polyline."""
    m = report.max_ratio or [0.0]
    pad = 50
    top = max(max(v for v in m if math.isfinite(v)) if any(math.isfinite(v) for v in m) else 1.0, 1e-300) * 1.1
    xs = [pad + (width - 2 * pad) * (i / max(len(m) - 1, 1)) for i in range(len(m))]
    ys = [height - pad - (height - 2 * pad) * (min(v, top) / top if math.isfinite(v) else 1.0) for v in m]
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    ticks = "".join(f'<text x="{x:.2f}" y="{height - pad + 16}" font-size="11" text-anchor="middle">{i}</text>'
                    for i, x in enumerate(xs))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
            f'<title>{report.target} ({report.verdict})</title>'
            f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>'
            f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>'
            f'<text x="{width / 2}" y="{height - 10}" font-size="12" text-anchor="middle">level</text>'
            f'<text x="14" y="{height / 2}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 14 {height / 2})">max ratio</text>'
            f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{top:.3g}</text>'
            f'{ticks}<polyline fill="none" stroke="steelblue" stroke-width="2" points="{pts}"/></svg>\n')


def write_report(report: CheckReport, out_dir, stem: str | None = None, timestamp: str | None = None) -> Path:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    stem = stem or report.target
    (d / f"{stem}.csv").write_bytes(report.to_csv(timestamp).encode())
    (d / f"{stem}.svg").write_text(svg_trend(report))
    (d / f"{stem}.json").write_text(json.dumps(report.summary(), indent=1, sort_keys=True, default=str) + "\n")
    return d / f"{stem}.csv"


def run(config, out_dir=None) -> tuple[list[CheckReport], int]:
    """Run every check in a config (path or YAML text); exit code 0 iff all pass."""
    path = Path(config) if not isinstance(config, str) or "\n" not in config else None
    text = path.read_text() if path is not None and path.exists() else str(config)
    specs, options = parse_config(text)
    out = Path(out_dir or options.get("output", "report"))
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    reports, seen = [], {}
    for spec in specs:
        rep = check(spec)
        seen[spec.target] = seen.get(spec.target, 0) + 1
        stem = spec.target if seen[spec.target] == 1 else f"{spec.target}-{seen[spec.target]}"
        write_report(rep, out, stem, stamp)
        reports.append(rep)
    return reports, 0 if all(r.passed for r in reports) else 1
