"""Variable exponents, the modular and the Luxemburg quasi-norm."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import optimize

from .grid import Cube, GridError, GridFunction, GridSpec, integrate


class BracketError(RuntimeError):
    pass


class ExponentFunction:
    """A measurable exponent ``p(.)`` with values in ``(0, inf)``.

    ``profile`` (``GridSpec -> samples``) allows resampling on refined grids.
    """

    def __init__(self, p: GridFunction, profile: Callable | None = None, name: str = "p(.)"):
        if np.any(p.samples <= 0):
            raise GridError("exponents must be positive")
        self.p = p
        self.profile = profile
        self.name = name
        self._lh = None

    @classmethod
    def from_profile(cls, spec: GridSpec, profile: Callable, name: str = "p(.)") -> "ExponentFunction":
        return cls(GridFunction(spec, profile(spec)), profile, name)

    @classmethod
    def constant(cls, spec: GridSpec, p0: float) -> "ExponentFunction":
        return cls.from_profile(spec, lambda sp: np.full(sp.shape, float(p0)), f"const:{p0:g}")

    @property
    def spec(self) -> GridSpec:
        return self.p.spec

    @property
    def samples(self) -> np.ndarray:
        return self.p.samples

    @property
    def p_minus(self) -> float:
        return float(self.samples.min())

    @property
    def p_plus(self) -> float:
        return float(self.samples.max())

    @property
    def lh(self) -> tuple[float, float, float]:
        if self._lh is None:
            self._lh = lh_constants(self)
        return self._lh

    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    def map(self, fn: Callable[[np.ndarray], np.ndarray], name: str | None = None) -> "ExponentFunction":
        prof = None if self.profile is None else (lambda sp, _p=self.profile: fn(_p(sp)))
        return ExponentFunction(GridFunction(self.spec, fn(self.samples)), prof, name or self.name)

    def resample(self, spec: GridSpec) -> "ExponentFunction":
        if spec == self.spec:
            return self
        if self.profile is None:
            raise GridError("exponent has no profile to resample")
        return ExponentFunction.from_profile(spec, self.profile, self.name)

    def __repr__(self):
        return f"ExponentFunction({self.name}, p-={self.p_minus:g}, p+={self.p_plus:g})"


def conjugate(p: ExponentFunction) -> ExponentFunction:
    """Pointwise ``p'(x) = p(x) / (p(x) - 1)``."""
    if not p.p_minus > 1:
        raise ValueError("conjugate exponent needs p_- > 1")
    return p.map(lambda v: v / (v - 1.0), f"({p.name})'")


def ratio(p: ExponentFunction, c: float) -> ExponentFunction:
    return p.map(lambda v: v / c, f"{p.name}/{c:g}")


def scale(p: ExponentFunction, c: float) -> ExponentFunction:
    return p.map(lambda v: c * v, f"{c:g}*{p.name}")


def fractional_target(p: ExponentFunction, alpha: float, n: int) -> ExponentFunction:
    """``q(.)`` with ``1/p(.) - 1/q(.) = alpha/n``; needs ``p_+ < n/alpha``."""
    if alpha > 0 and not p.p_plus < n / alpha:
        raise ValueError("need p_+ < n/alpha")
    return p.map(lambda v: 1.0 / (1.0 / v - alpha / n), f"q[{p.name}]")


def modular(f: GridFunction, lam: float, p: ExponentFunction) -> float:
    """Midpoint quadrature of ``(|f| / lam)^p(x)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if f.spec != p.spec:
        raise GridError("function and exponent live on different grids")
    with np.errstate(over="ignore"):
        return float(f.spec.cell_volume * np.sum((np.abs(f.samples) / lam) ** p.samples))


def luxemburg_norm(f: GridFunction, p: ExponentFunction) -> float:
    """``inf{lam > 0 : modular(f, lam) <= 1}``.

    The modular is continuous and strictly decreasing in ``lam`` whenever
    ``f`` is not identically zero, so the infimum is the unique root of
    ``modular = 1``; it is bracketed by doubling and solved in ``log lam``.
    This also covers exponents below one, where the result is a quasi-norm.
    """
    if f.spec != p.spec:
        raise GridError("function and exponent live on different grids")
    a = np.abs(f.samples)
    top = float(a.max())
    if top == 0.0:
        return 0.0
    if p.is_constant():
        p0 = p.p_minus
        return float((f.spec.cell_volume * np.sum(a ** p0)) ** (1.0 / p0))
    mask = a > 0
    av, pv = np.log(a[mask]), p.samples[mask]
    hv = math.log(f.spec.cell_volume)

    def g(s):
        # log of the modular at lam = exp(s), evaluated stably
        e = pv * (av - s)
        m = e.max()
        return m + math.log(np.sum(np.exp(e - m))) + hv

    lo = hi = math.log(top)
    step = 1.0
    for _ in range(400):
        if g(lo) > 0:
            break
        lo -= step
        step *= 2
    else:
        raise BracketError("could not bracket the Luxemburg norm from below")
    step = 1.0
    for _ in range(400):
        if g(hi) < 0:
            break
        hi += step
        step *= 2
    else:
        raise BracketError("could not bracket the Luxemburg norm from above")
    s = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(s)


def holder_pairing(f: GridFunction, g: GridFunction, p: ExponentFunction, K: float = 2.0) -> tuple[float, float]:
    """``(int |fg|, K ||f||_p(.) ||g||_p'(.))``."""
    lhs = integrate(abs(f * g))
    rhs = K * luxemburg_norm(f, p) * luxemburg_norm(g, conjugate(p))
    return lhs, rhs


def lh_constants(p: ExponentFunction, pair_budget: int = 20_000_000, n_candidates: int = 512,
                 seed: int = 0) -> tuple[float, float, float]:
    """``(C0, C_inf, p_inf)`` for the log-Hoelder conditions, estimated on the grid.

    ``C0`` is the max of ``|p(x) - p(y)| (-log|x - y|)`` over pairs with
    ``|x - y| < 1/2``; pair offsets are subsampled if the full set exceeds
    ``pair_budget``.  ``C_inf`` is minimised over candidate ``p_inf`` values.
    """
    spec = p.spec
    h = spec.spacing
    vals = p.samples
    m = int(math.ceil(0.5 / h)) - 1
    rng = np.random.default_rng(seed)
    if spec.dimension == 1:
        offsets = [(d,) for d in range(1, m + 1)]
    else:
        offsets = [(i, j) for i in range(0, m + 1) for j in range(-m, m + 1)
                   if (i > 0 or j > 0) and (i * i + j * j) * h * h < 0.25]
    per = spec.size
    if len(offsets) * per > pair_budget:
        keep = max(1, pair_budget // per)
        # the shortest offsets carry the sharpest modulus information
        offsets = sorted(offsets, key=lambda o: sum(c * c for c in o))
        head = offsets[: keep // 2]
        tail = offsets[keep // 2:]
        pick = rng.choice(len(tail), size=min(len(tail), keep - len(head)), replace=False)
        offsets = head + [tail[i] for i in sorted(pick)]
    c0 = 0.0
    for off in offsets:
        dist = h * math.sqrt(sum(c * c for c in off))
        if dist >= 0.5:
            continue
        a = vals[tuple(slice(max(0, -c), vals.shape[k] - max(0, c)) for k, c in enumerate(off))]
        b = vals[tuple(slice(max(0, c), vals.shape[k] - max(0, -c)) for k, c in enumerate(off))]
        if a.size:
            c0 = max(c0, float(np.max(np.abs(a - b))) * -math.log(dist))
    logw = np.log(math.e + spec.radius()).ravel()
    flat = vals.ravel()
    cands = np.linspace(p.p_minus, p.p_plus, n_candidates)
    best_c, best_p = math.inf, float(cands[0])
    for c in cands:
        ci = float(np.max(np.abs(flat - c) * logw))
        if ci < best_c:
            best_c, best_p = ci, float(c)
    return c0, best_c, best_p


def lh_trend(p: ExponentFunction, levels: int = 4) -> list[float]:
    """``C0`` on ``levels`` successively refined grids ending at ``p.spec``."""
    out = []
    for i in range(levels):
        sp = p.spec.coarsen(2 ** (levels - 1 - i))
        out.append(lh_constants(p.resample(sp))[0])
    return out


def is_log_holder(p: ExponentFunction, levels: int = 4) -> bool:
    """False when ``C0`` keeps growing under refinement.

    A jump of size ``J`` makes ``C0`` grow by about ``J log 2`` per level, so
    its successive differences stop shrinking; log-Hoelder exponents have
    differences that decay geometrically.
    """
    from .weights import growth_exponent

    c = lh_trend(p, levels)
    if c[-1] <= 1e-12 or abs(c[-1] - c[-2]) <= 1e-3 * c[-1]:
        return True
    return growth_exponent(c, tail=1) < -0.5


# -- exponent expressions ---------------------------------------------------------------

def parse_exponent(expr: str, spec: GridSpec) -> ExponentFunction:
    """Closed-form exponents.

    ``const:p0``; ``log:c1,c2`` for ``c1 + c2 / log(e + |x|)``;
    ``pw:default;corner...,side=value;...`` for piecewise constants on cubes;
    ``ramp:width;default;corner...,side=value;...`` is the same with linear
    transitions of the given width outside each cube, so it is Lipschitz
    and hence log-Hoelder.
    """
    kind, _, arg = expr.partition(":")
    if kind == "const":
        return ExponentFunction.constant(spec, float(arg))
    if kind == "log":
        c1, c2 = (float(v) for v in arg.split(","))
        return ExponentFunction.from_profile(spec, lambda sp: c1 + c2 / np.log(math.e + sp.radius()), expr)
    if kind in ("pw", "ramp"):
        parts = arg.split(";")
        width = float(parts.pop(0)) if kind == "ramp" else 0.0
        if kind == "ramp" and not width > 0:
            raise ValueError("ramp width must be positive")
        default = float(parts[0])
        pieces = []
        for piece in parts[1:]:
            geo, _, val = piece.partition("=")
            nums = [float(v) for v in geo.split(",")]
            if len(nums) != spec.dimension + 1:
                raise ValueError(f"piece {piece!r} needs {spec.dimension} corner coordinates and a side")
            pieces.append((Cube(tuple(nums[:-1]), nums[-1]), float(val)))

        def prof(sp):
            out = np.full(sp.shape, default)
            for Q, v in pieces:
                if width:
                    c = np.array(Q.corner)
                    gap = [np.maximum(np.maximum(c[k] - x, x - c[k] - Q.side), 0.0) for k, x in enumerate(sp.mesh())]
                    t = np.clip(1.0 - np.sqrt(sum(g * g for g in gap)) / width, 0.0, 1.0)
                    out = out * (1 - t) + v * t
                else:
                    out[Q.slices(sp)] = v
            return out

        return ExponentFunction.from_profile(spec, prof, expr)
    raise ValueError(f"unknown exponent expression {expr!r}")
