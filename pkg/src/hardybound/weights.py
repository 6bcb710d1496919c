"""Weight classes on finite cube families.

Every "for every cube Q" in a weight condition is replaced by a maximum
over a :class:`CubeFamily`.  Membership claims become refinement trends:
the same weight is resampled on successively finer grids and the constant
is tracked level by level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import ndimage

from .grid import Cube, GridError, GridFunction, GridSpec

CLAMP = 1e-300


class Weight:
    """A strictly positive grid function with a cache of computed constants.

    ``profile`` (a callable ``GridSpec -> samples``) lets the weight be
    resampled on other grids; without it, coarser levels are block averages.
    """

    def __init__(self, w: GridFunction, profile: Callable | None = None,
                 r_w: float | None = None, name: str = "weight"):
        if np.any(w.samples <= 0):
            raise GridError("weights must be strictly positive on the grid")
        self.w = w
        self.profile = profile
        self.r_w = r_w
        self.name = name
        self.cache: dict = {}

    @property
    def spec(self) -> GridSpec:
        return self.w.spec

    @property
    def samples(self) -> np.ndarray:
        return self.w.samples

    @classmethod
    def from_profile(cls, spec: GridSpec, profile: Callable, **kw) -> "Weight":
        return cls(GridFunction(spec, profile(spec)), profile=profile, **kw)

    def power(self, s: float) -> "Weight":
        prof = None if self.profile is None else (lambda sp, _p=self.profile: np.maximum(_p(sp), CLAMP) ** s)
        return Weight(GridFunction(self.spec, np.maximum(self.samples, CLAMP) ** s),
                      profile=prof, name=f"({self.name})^{s:g}")

    def scaled(self, c: float) -> "Weight":
        prof = None if self.profile is None else (lambda sp, _p=self.profile: c * _p(sp))
        return Weight(self.w * c, profile=prof, r_w=self.r_w, name=f"{c:g}*{self.name}")

    def resample(self, spec: GridSpec) -> "Weight":
        if spec == self.spec:
            return self
        if self.profile is not None:
            return Weight.from_profile(spec, self.profile, r_w=self.r_w, name=self.name)
        ratio = spec.spacing / self.spec.spacing
        k = int(round(ratio))
        if spec.box != self.spec.box or k < 1 or abs(ratio - k) > 1e-9:
            raise GridError("weights without a profile can only be coarsened by integer factors")
        arr = self.samples
        for ax in range(arr.ndim):
            shp = list(arr.shape)
            shp[ax:ax + 1] = [shp[ax] // k, k]
            arr = arr.reshape(shp).mean(axis=ax + 1)
        return Weight(GridFunction(spec, arr), r_w=self.r_w, name=self.name)

    def __repr__(self):
        return f"Weight({self.name}, h={self.spec.spacing})"


def power_weight(spec: GridSpec, a: float, center=0.0) -> Weight:
    """``|x - center|^a``; ``r_w`` is known in closed form for ``a > -n``."""
    c = np.broadcast_to(np.asarray(center, float), (spec.dimension,))

    def prof(sp):
        return np.maximum(sp.radius(c), CLAMP) ** a

    r_w = 1.0 + max(a, 0.0) / spec.dimension if a > -spec.dimension else None
    return Weight.from_profile(spec, prof, r_w=r_w, name=f"|x|^{a:g}")


def constant_weight(spec: GridSpec, c: float = 1.0) -> Weight:
    return Weight.from_profile(spec, lambda sp: np.full(sp.shape, float(c)), r_w=1.0, name=f"{c:g}")


def maximal_root_weight(spec: GridSpec, cube: Cube, s: float = 0.5) -> Weight:
    """``M(chi_Q)^s`` with ``0 < s < 1``: an A_1 weight."""
    from .operators import hl_maximal

    def prof(sp):
        return hl_maximal(GridFunction.indicator(sp, cube)).samples ** s

    return Weight.from_profile(spec, prof, r_w=1.0, name=f"M(chi)^{s:g}")


def parse_weight(expr: str, spec: GridSpec) -> Weight:
    """``const:c``, ``power:a`` or ``power:a@x0[,y0]``."""
    kind, _, arg = expr.partition(":")
    if kind == "const":
        return constant_weight(spec, float(arg or 1.0))
    if kind == "power":
        a, _, at = arg.partition("@")
        center = [float(v) for v in at.split(",")] if at else 0.0
        return power_weight(spec, float(a), center)
    raise ValueError(f"unknown weight expression {expr!r}")


# -- cube families -----------------------------------------------------------------

@dataclass(frozen=True)
class CubeFamily:
    """Grid-aligned cubes in index form: ``starts[i]`` (cell index of the
    corner per axis) and ``sizes[i]`` (cells per side)."""

    spec: GridSpec
    starts: np.ndarray
    sizes: np.ndarray
    descriptor: str = "explicit"
    key: tuple = field(default=(), compare=False)

    def __post_init__(self):
        starts = np.asarray(self.starts, dtype=np.int64).reshape(-1, self.spec.dimension)
        sizes = np.asarray(self.sizes, dtype=np.int64).reshape(-1)
        if len(starts) != len(sizes):
            raise GridError("starts and sizes disagree in length")
        shape = np.array(self.spec.shape)
        if np.any(sizes < 1) or np.any(starts < 0) or np.any(starts + sizes[:, None] > shape):
            raise GridError("every cube of a family must lie inside the box")
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "sizes", sizes)
        if not self.key:
            object.__setattr__(self, "key", (self.descriptor, hash(starts.tobytes()), hash(sizes.tobytes())))

    def __len__(self):
        return len(self.sizes)

    def cubes(self) -> list[Cube]:
        h = self.spec.spacing
        lo = self.spec.lo
        return [Cube(tuple(lo + s * h), k * h) for s, k in zip(self.starts, self.sizes)]

    def union(self, other: "CubeFamily") -> "CubeFamily":
        return CubeFamily(self.spec, np.vstack([self.starts, other.starts]),
                          np.concatenate([self.sizes, other.sizes]),
                          f"{self.descriptor}+{other.descriptor}")

    @classmethod
    def from_cubes(cls, spec: GridSpec, cubes) -> "CubeFamily":
        starts, sizes = [], []
        for Q in cubes:
            if not Q.is_aligned(spec):
                raise GridError(f"{Q} is not grid aligned")
            starts.append([a for a, _ in Q.index_range(spec)])
            sizes.append(int(round(Q.side / spec.spacing)))
        return cls(spec, np.array(starts).reshape(-1, spec.dimension), np.array(sizes), "explicit")


def dyadic_sides(spec: GridSpec) -> list[int]:
    """Cell counts of the dyadic sides ``2^-j`` that fit the box and are multiples of h."""
    h = spec.spacing
    longest = min(hi - lo for lo, hi in spec.box)
    j = -int(math.floor(math.log2(longest) + 1e-12))
    out = []
    while 2.0 ** -j >= h * (1 - 1e-12):
        k = 2.0 ** -j / h
        if abs(k - round(k)) < 1e-9:
            out.append(int(round(k)))
        j += 1
    return out


def default_family(spec: GridSpec, random_per_level: int = 1000, seed: int = 0,
                   min_side: float | None = None) -> CubeFamily:
    """All dyadic cubes inside the box plus ``random_per_level`` random
    grid-aligned cubes of each dyadic side."""
    rng = np.random.default_rng(seed)
    shape = np.array(spec.shape)
    lo = spec.lo
    starts, sizes = [], []
    for k in dyadic_sides(spec):
        if min_side is not None and k * spec.spacing < min_side * (1 - 1e-12):
            continue
        side = k * spec.spacing
        # dyadic positions: corners on multiples of the side
        axes = []
        for d in range(spec.dimension):
            first = math.ceil(lo[d] / side - 1e-9)
            last = math.floor(spec.hi[d] / side + 1e-9) - 1
            idx = [int(round((m * side - lo[d]) / spec.spacing)) for m in range(first, last + 1)]
            axes.append(np.array(idx, dtype=np.int64))
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.dimension)
        starts.append(grid)
        sizes.append(np.full(len(grid), k))
        if random_per_level:
            rs = rng.integers(0, shape - k + 1, size=(random_per_level, spec.dimension))
            starts.append(rs)
            sizes.append(np.full(random_per_level, k))
    return CubeFamily(spec, np.vstack(starts), np.concatenate(sizes),
                      f"dyadic+random{random_per_level}(seed={seed})")


# -- reductions over a family ----------------------------------------------------------

def _box_sums(arr: np.ndarray, fam: CubeFamily) -> np.ndarray:
    s, k = fam.starts, fam.sizes
    if arr.ndim == 1:
        S = np.concatenate([[0.0], np.cumsum(arr)])
        return S[s[:, 0] + k] - S[s[:, 0]]
    S = np.zeros((arr.shape[0] + 1, arr.shape[1] + 1))
    S[1:, 1:] = arr.cumsum(0).cumsum(1)
    i, j = s[:, 0], s[:, 1]
    return S[i + k, j + k] - S[i, j + k] - S[i + k, j] + S[i, j]


def _box_means(arr: np.ndarray, fam: CubeFamily) -> np.ndarray:
    return _box_sums(arr, fam) / fam.sizes.astype(float) ** fam.spec.dimension


def _box_extreme(arr: np.ndarray, fam: CubeFamily, how: str) -> np.ndarray:
    filt = ndimage.minimum_filter if how == "min" else ndimage.maximum_filter
    out = np.empty(len(fam))
    for k in np.unique(fam.sizes):
        sel = fam.sizes == k
        ext = filt(arr, size=int(k), mode="nearest")
        idx = tuple((fam.starts[sel] + int(k) // 2).T)
        out[sel] = ext[idx]
    return out


def _pos(w: Weight) -> np.ndarray:
    return np.maximum(w.samples, CLAMP)


def _cached(w: Weight, key, fn):
    if key not in w.cache:
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            val = float(fn())
        w.cache[key] = math.inf if not math.isfinite(val) else val
    return w.cache[key]


def _family(w: Weight, F: CubeFamily | None) -> CubeFamily:
    if F is None:
        return default_family(w.spec)
    if F.spec != w.spec:
        raise GridError("cube family and weight live on different grids")
    return F


def ap_constant(w: Weight, p: float, F: CubeFamily | None = None) -> float:
    """max over Q of ``avg(w) * avg(w^(1-p'))^(p-1)``; ``inf`` on overflow."""
    if not p > 1:
        raise ValueError("A_p needs p > 1; use a1_constant for p = 1")
    F = _family(w, F)
    pp = p / (p - 1)

    def compute():
        a = _box_means(_pos(w), F)
        b = _box_means(_pos(w) ** (1 - pp), F)
        return np.max(a * b ** (p - 1))

    return _cached(w, ("ap", p, F.key), compute)


def a1_constant(w: Weight, F: CubeFamily | None = None) -> float:
    """max over Q and x in Q of ``avg_Q(w) / w(x)``."""
    F = _family(w, F)
    return _cached(w, ("a1", F.key),
                   lambda: np.max(_box_means(_pos(w), F) / _box_extreme(_pos(w), F, "min")))


def rh_constant(w: Weight, s: float, F: CubeFamily | None = None) -> float:
    """max over Q of ``avg(w^s)^(1/s) / avg(w)``."""
    if not s > 1:
        raise ValueError("RH_s needs s > 1")
    F = _family(w, F)
    return _cached(w, ("rh", s, F.key),
                   lambda: np.max(_box_means(_pos(w) ** s, F) ** (1 / s) / _box_means(_pos(w), F)))


def rh_inf_constant(w: Weight, F: CubeFamily | None = None) -> float:
    F = _family(w, F)
    return _cached(w, ("rhinf", F.key),
                   lambda: np.max(_box_extreme(_pos(w), F, "max") / _box_means(_pos(w), F)))


def apq_constant(w: Weight, p: float, q: float, F: CubeFamily | None = None) -> float:
    """max over Q of ``avg(w^q)^(1/q) * avg(w^-p')^(1/p')``."""
    if not (p > 1 and q > 1):
        raise ValueError("A_{p,q} needs p, q > 1")
    F = _family(w, F)
    pp = p / (p - 1)
    return _cached(w, ("apq", p, q, F.key),
                   lambda: np.max(_box_means(_pos(w) ** q, F) ** (1 / q)
                                  * _box_means(_pos(w) ** (-pp), F) ** (1 / pp)))


def weighted_Lp_norm(f: GridFunction, p: float, w: Weight | None = None) -> float:
    """``(int |f|^p w dx)^(1/p)``; ``w=None`` means Lebesgue measure."""
    if not p > 0:
        raise ValueError("p must be positive")
    a = np.abs(f.samples) ** p
    if w is not None:
        if w.spec != f.spec:
            raise GridError("function and weight live on different grids")
        a = a * w.samples
    return float((f.spec.cell_volume * np.sum(a)) ** (1.0 / p))


# -- refinement protocol --------------------------------------------------------------

CONSTANTS = {
    "ap": lambda w, F, p=2.0, **_: ap_constant(w, p, F),
    "a1": lambda w, F, **_: a1_constant(w, F),
    "rh": lambda w, F, s=2.0, **_: rh_constant(w, s, F),
    "rhinf": lambda w, F, **_: rh_inf_constant(w, F),
    "apq": lambda w, F, p=2.0, q=2.0, **_: apq_constant(w, p, q, F),
}


def level_specs(spec: GridSpec, levels: int) -> list[GridSpec]:
    """``levels`` grids ending at ``spec``, each twice as fine as the last."""
    return [spec.coarsen(2 ** (levels - 1 - i)) for i in range(levels)]


def unit_level_spec(box, dimension: int, level: int) -> GridSpec:
    return GridSpec(dimension, tuple(box) if len(box) == dimension else (tuple(box),) * dimension,
                    2.0 ** -level)


def constant_trend(kind: str, w: Weight, levels: int = 6, random_per_level: int = 1000,
                   seed: int = 0, specs: list[GridSpec] | None = None, **params) -> list[tuple[float, float]]:
    """(spacing, constant) pairs with the weight resampled on each level."""
    specs = specs or level_specs(w.spec, levels)
    out = []
    for sp in specs:
        wl = w.resample(sp)
        F = default_family(sp, random_per_level, seed)
        out.append((sp.spacing, CONSTANTS[kind](wl, F, **params)))
    return out


def diverges(values, factor: float = 2.0, consecutive: int = 2) -> bool:
    """The trailing ``consecutive`` level-to-level ratios are all ``>= factor``."""
    v = np.asarray(values, float)
    if np.any(~np.isfinite(v)):
        return True
    if len(v) < consecutive + 1:
        raise ValueError(f"need at least {consecutive + 1} levels")
    ratios = v[1:] / v[:-1]
    return bool(np.all(ratios[-consecutive:] >= factor * (1 - 1e-9)))


def growth_exponent(values, tail: int = 2) -> float:
    """Signed growth exponent from successive differences.

    For ``C(h) ~ c h^-g`` (divergent) or ``C(h) ~ C - c h^g`` (convergent),
    ``log2(D_{l+1} / D_l)`` tends to ``+g`` or ``-g``.  Averaged over the
    last ``tail`` pairs.
    """
    v = np.asarray(values, float)
    if np.any(~np.isfinite(v)):
        return math.inf
    d = np.abs(np.diff(v))
    if len(d) < tail + 1:
        raise ValueError("too few levels for a growth exponent")
    d = np.maximum(d, 1e-15 * np.max(np.abs(v)))
    return float(np.mean(np.log2(d[1:] / d[:-1])[-tail:]))


BOUNDED_DECAY = -0.1


class Interval(NamedTuple):
    lo: float
    hi: float


def _bounded(kind, w, r, specs, random_per_level, seed):
    vals = [c for _, c in constant_trend(kind, w, specs=specs, random_per_level=random_per_level,
                                         seed=seed, p=r)]
    if vals[-1] - vals[0] < 1e-9 * vals[-1]:
        return True
    # endpoint classes grow like a power of log(1/h); their differences shrink
    # too slowly to count as convergent
    return growth_exponent(vals) < BOUNDED_DECAY


def rw_estimate(w: Weight, tol: float = 0.05, levels: int = 8, r_max: float = 64.0,
                random_per_level: int = 200, seed: int = 0) -> float | Interval:
    """Bisection for ``inf{r : w in A_r}`` using the refinement growth exponent.

    Returns an :class:`Interval` when no bounded ``r <= r_max`` is found.
    """
    specs = level_specs(w.spec, levels)
    if _bounded("a1", w, None, specs, random_per_level, seed):
        return 1.0
    lo, hi = 1.0, 2.0
    while not _bounded("ap", w, hi, specs, random_per_level, seed):
        lo, hi = hi, 2 * hi
        if hi > r_max:
            return Interval(lo, math.inf)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _bounded("ap", w, mid, specs, random_per_level, seed):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)

