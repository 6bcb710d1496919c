"""Maximal operators, Riesz potentials, singular integrals and smoothed kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate as _quad
from scipy import signal
from scipy.ndimage import maximum_filter1d
from scipy.special import gamma

from .grid import (Cube, GridError, GridFunction, GridSpec, MollifierSpec, default_t_grid, dilate,
                   double_star, mollify, star)

EXHAUSTIVE_SIDES = 64


class KernelError(ValueError):
    pass


# -- maximal operators ----------------------------------------------------------------

def maximal_sides(spec: GridSpec, exhaustive: int = EXHAUSTIVE_SIDES) -> list[int]:
    """Cube sides, in cells: every side up to ``exhaustive`` plus all powers of two."""
    m = min(spec.shape)
    sides = set(range(1, min(exhaustive, m) + 1))
    k = 1
    while k <= m:
        sides.add(k)
        k *= 2
    return sorted(sides)


def _window_means(a: np.ndarray, k: int) -> np.ndarray:
    """Means over all ``k``-cell windows (cubes), indexed by their first cell."""
    for ax in range(a.ndim):
        c = np.cumsum(a, axis=ax)
        c = np.concatenate([np.zeros_like(np.take(c, [0], axis=ax)), c], axis=ax)
        n = a.shape[ax]
        a = (np.take(c, np.arange(k, n + 1), axis=ax) - np.take(c, np.arange(0, n - k + 1), axis=ax)) / k
    return a


def _spread(a: np.ndarray, k: int, shape) -> np.ndarray:
    """At each cell, the max of ``a`` over the windows of side ``k`` that contain it."""
    pad = [(k - 1, k - 1)] * a.ndim
    p = np.pad(a, pad, constant_values=-np.inf)
    for ax in range(a.ndim):
        p = maximum_filter1d(p, k, axis=ax, mode="constant", cval=-np.inf)
    return p[tuple(slice(k // 2, k // 2 + m) for m in shape)]


def frac_maximal(f: GridFunction, alpha: float, sides: list[int] | None = None) -> GridFunction:
    """``sup_Q |Q|^(alpha/n) avg_Q |f|`` over grid-aligned cubes containing each point."""
    spec = f.spec
    if not 0 <= alpha < spec.dimension:
        raise ValueError("alpha must lie in [0, n)")
    a = np.abs(f.samples)
    out = np.zeros(spec.shape)
    for k in sides or maximal_sides(spec):
        means = _window_means(a, k)
        if alpha:
            means = means * (k * spec.spacing) ** alpha
        np.maximum(out, _spread(means, k, spec.shape), out=out)
    return GridFunction(spec, out)


def hl_maximal(f: GridFunction, sides: list[int] | None = None) -> GridFunction:
    return frac_maximal(f, 0.0, sides)


def maximal_of_cube(spec: GridSpec, Q: Cube, alpha: float = 0.0) -> GridFunction:
    return frac_maximal(GridFunction.indicator(spec, Q), alpha)


# -- kernels ------------------------------------------------------------------------------

def _fd(fn: Callable, x: np.ndarray, axis: int, order: int, step: np.ndarray) -> np.ndarray:
    """Central finite difference of ``fn`` (taking a point array ``(..., n)``)."""
    if order == 0:
        return fn(x)
    e = np.zeros(x.shape[-1])
    e[axis] = 1.0
    acc = 0.0
    for i in range(order + 1):
        shift = (order / 2 - i) * step[..., None] * e
        acc = acc + (-1) ** i * math.comb(order, i) * fn(x + shift)
    return acc / step ** order


@dataclass(frozen=True)
class KernelSpec:
    """A kernel together with its declared size and smoothness data.

    Convolution kinds (``hilbert``, ``riesz``, ``power``) are functions of
    ``z = x - y`` given as a point array ``(..., n)``.  ``nonconv`` kernels
    take ``(x, y)``.  Declared bounds are spot-checked on construction.
    """

    kind: str
    dimension: int
    alpha: float = 0.0
    N: int = 2
    j: int = 0
    fn: Callable | None = field(default=None, compare=False)
    C: float = 1.0
    delta: float = 1.0
    L: int = -1
    pv_policy: str = "odd"
    name: str = ""
    verify_radius: float = 8.0
    bounds: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.kind not in ("hilbert", "riesz", "power", "nonconv"):
            raise KernelError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "hilbert" and self.dimension != 1:
            raise KernelError("the Hilbert kernel lives in one dimension")
        if self.kind == "riesz" and (self.dimension != 2 or self.j not in (0, 1)):
            raise KernelError("Riesz kernels are two-dimensional with j in {0, 1}")
        if self.kind == "power" and not 0 < self.alpha < self.dimension:
            raise KernelError("power kernel needs 0 < alpha < n")
        if self.kind == "nonconv":
            if self.fn is None:
                raise KernelError("nonconvolution kernels need a callable K(x, y)")
            if not 0 < self.delta <= 1:
                raise KernelError("delta must lie in (0, 1]")
        if self.kind != "nonconv" and not self.bounds:
            object.__setattr__(self, "bounds", self._declared_bounds())
        self._verify()

    # constructors
    @classmethod
    def hilbert(cls, N: int = 2) -> "KernelSpec":
        return cls("hilbert", 1, N=N, name="hilbert")

    @classmethod
    def riesz(cls, j: int = 0, N: int = 2) -> "KernelSpec":
        return cls("riesz", 2, N=N, j=j, name=f"riesz_{j + 1}")

    @classmethod
    def power(cls, alpha: float, n: int = 1, N: int = 2) -> "KernelSpec":
        return cls("power", n, alpha=alpha, N=N, pv_policy="none", name=f"power({alpha:g})")

    @classmethod
    def nonconv(cls, fn: Callable, n: int, C: float, delta: float = 1.0, L: int = -1,
                name: str = "nonconv", verify_radius: float = 8.0) -> "KernelSpec":
        return cls("nonconv", n, fn=fn, C=C, delta=delta, L=L, name=name, verify_radius=verify_radius)

    @classmethod
    def from_convolution(cls, k: "KernelSpec", L: int = 0, verify_radius: float = 8.0) -> "KernelSpec":
        """``K(x, y) = k(x - y)``; convolution kernels satisfy every moment condition."""
        C = 2.0 * max(k.bounds[:2]) * 2.0 ** (k.dimension + 1)
        return cls.nonconv(lambda x, y: k(x - y), k.dimension, C, 1.0, L, f"conv[{k.name}]", verify_radius)

    @classmethod
    def modulated(cls, k: "KernelSpec", L: int = -1, verify_radius: float = 8.0) -> "KernelSpec":
        """``K(x, y) = k(x - y) (1 + sin(x_1) / 2)``, a genuinely non-convolution kernel."""
        diam = 2.0 * verify_radius * math.sqrt(k.dimension)
        C = 2.0 * max(k.bounds[:2]) * 2.0 ** (k.dimension + 1) * (1.5 + diam)
        return cls.nonconv(lambda x, y: k(x - y) * (1.0 + 0.5 * np.sin(x[..., 0])), k.dimension, C, 1.0, L,
                           f"mod[{k.name}]", verify_radius)

    # evaluation
    @property
    def is_convolution(self) -> bool:
        return self.kind != "nonconv"

    @property
    def decay(self) -> float:
        """``n - alpha``: the homogeneity of ``|K|``."""
        return self.dimension - self.alpha

    def __call__(self, z, y=None) -> np.ndarray:
        if self.kind == "nonconv":
            return self.fn(np.asarray(z, float), np.asarray(y, float))
        z = np.asarray(z, float)
        r = np.sqrt(np.sum(z * z, axis=-1))
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "hilbert":
                out = 1.0 / (math.pi * z[..., 0])
            elif self.kind == "riesz":
                out = z[..., self.j] / (2.0 * math.pi * r ** 3)
            else:
                out = r ** (self.alpha - self.dimension)
        return np.where(r > 0, out, 0.0)

    def _declared_bounds(self) -> tuple:
        """``A_k`` with ``|d^k K(x)| <= A_k |x|^(alpha - n - k)``, for ``k <= N + 1``."""
        if self.kind == "hilbert":
            return tuple(math.factorial(k) / math.pi for k in range(self.N + 2))
        if self.kind == "power" and self.dimension == 1:
            return tuple(abs(math.prod(self.alpha - 1 - i for i in range(k))) for k in range(self.N + 2))
        # two-dimensional kinds: sample the unit circle (homogeneity does the rest)
        th = np.linspace(0, 2 * math.pi, 721)[:-1]
        x = np.stack([np.cos(th), np.sin(th)], axis=-1)
        step = np.full(th.shape, 1e-3)
        out = []
        for k in range(self.N + 2):
            out.append(max(float(np.max(np.abs(_fd(self, x, ax, k, step)))) for ax in range(2)))
        return tuple(out)

    def _verify(self, samples: int = 64, seed: int = 12345):
        rng = np.random.default_rng(seed)
        n = self.dimension
        if self.is_convolution:
            r = np.exp(rng.uniform(math.log(0.05), math.log(20.0), samples))
            u = rng.normal(size=(samples, n))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            x = r[:, None] * u
            for k, A in enumerate(self.bounds):
                for ax in range(n):
                    d = np.abs(_fd(self, x, ax, k, 0.01 * r)) * r ** (n - self.alpha + k)
                    if np.any(d > 2.0 * A + 1e-12):
                        raise KernelError(f"{self.name}: order-{k} derivative bound fails")
            return
        R = self.verify_radius
        x = rng.uniform(-R, R, (samples, n))
        y = rng.uniform(-R, R, (samples, n))
        d = np.linalg.norm(x - y, axis=1)
        keep = d > 0.05
        x, y, d = x[keep], y[keep], d[keep]
        K0 = self.fn(x, y)
        if np.any(np.abs(K0) * d ** n > 2.0 * self.C):
            raise KernelError(f"{self.name}: size bound fails")
        v = rng.normal(size=x.shape)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        hh = v * (d / 4)[:, None] * rng.uniform(0.05, 1.0, len(d))[:, None]
        hn = np.linalg.norm(hh, axis=1)
        lhs = np.abs(self.fn(x, y + hh) - K0) + np.abs(self.fn(x + hh, y) - K0)
        if np.any(lhs > 2.0 * self.C * hn ** self.delta / d ** (n + self.delta)):
            raise KernelError(f"{self.name}: smoothness bound fails")
        for k in range(1, self.L + 2):
            for ax in range(n):
                dk = np.abs(_fd(lambda yy: self.fn(x, yy), y, ax, k, 0.01 * d))
                if np.any(dk * d ** (n + k) > 2.0 * self.C * math.factorial(k) * 2 ** k):
                    raise KernelError(f"{self.name}: order-{k} regularity in y fails")


def fourier_constant(K: KernelSpec) -> float | None:
    """``c`` with ``|K^(xi)| <= c |xi|^-alpha``, for the closed-form kernels only."""
    if K.kind in ("hilbert", "riesz"):
        return 1.0
    if K.kind == "power":
        n, a = K.dimension, K.alpha
        return math.pi ** (n / 2) * 2 ** a * gamma(a / 2) / gamma((n - a) / 2) * (2 * math.pi) ** (-a)
    return None


@dataclass(frozen=True)
class OperatorParams:
    alpha: float = 0.0
    N: int = 0
    n: int = 1
    pv_cutoff: float = 2.0  # in units of h

    def __post_init__(self):
        if not 0 <= self.alpha < self.n:
            raise ValueError("alpha must lie in [0, n)")
        if self.N < 0:
            raise ValueError("moment order must be nonnegative")

    @property
    def tau(self) -> float:
        return (self.n + self.N + 1) / self.n

    @property
    def alpha_tau(self) -> float:
        return self.alpha / self.tau


# -- convolution on the grid ----------------------------------------------------------------

def _offsets(spec: GridSpec) -> np.ndarray:
    """Offset vectors ``(..., n)`` covering every pair of grid points."""
    h = spec.spacing
    ax = [np.arange(-(m - 1), m) * h for m in spec.shape]
    return np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)


def _apply_offset_kernel(f: GridFunction, kern: np.ndarray) -> np.ndarray:
    """``out[i] = sum_j f[j] kern[i - j]`` with ``kern`` indexed by offset + (m - 1)."""
    a = f.samples
    nz = np.nonzero(a)
    if not nz[0].size:
        return np.zeros(f.spec.shape)
    lo = [int(ix.min()) for ix in nz]
    hi = [int(ix.max()) + 1 for ix in nz]
    sub = a[tuple(slice(l, u) for l, u in zip(lo, hi))]
    method = "direct" if sub.ndim == 1 or sub.size * kern.size <= 2e8 else "fft"
    full = signal.convolve(sub, kern, mode="full", method=method)
    m = f.spec.shape
    return full[tuple(slice(mk - 1 - l, mk - 1 - l + mk) for mk, l in zip(m, lo))]


def _cell_integral_2d(alpha: float) -> float:
    """``int_[-1/2,1/2]^2 |y|^(alpha-2) dy`` in polar form."""
    val = _quad.quad(lambda th: (2 * math.cos(th)) ** -alpha, 0, math.pi / 4, epsabs=1e-15, epsrel=1e-13)[0]
    return 8.0 * val / alpha


def riesz_potential(f: GridFunction, alpha: float) -> GridFunction:
    """``I_alpha f(x) = int f(y) |x - y|^(alpha - n) dy``.

    Off-diagonal cells use the midpoint rule; the singular diagonal cell is
    integrated exactly.
    """
    spec = f.spec
    n, h = spec.dimension, spec.spacing
    if not 0 < alpha < n:
        raise ValueError("need 0 < alpha < n")
    z = _offsets(spec)
    r = np.sqrt(np.sum(z * z, axis=-1))
    with np.errstate(divide="ignore"):
        kern = r ** (alpha - n) * spec.cell_volume
    centre = tuple(m - 1 for m in spec.shape)
    kern[centre] = 2.0 * (h / 2) ** alpha / alpha if n == 1 else _cell_integral_2d(alpha) * h ** alpha
    return GridFunction(spec, _apply_offset_kernel(f, kern))


def singular_integral(f: GridFunction, K: KernelSpec, cutoff: float = 2.0) -> GridFunction:
    """Principal value ``int K(x - y) f(y) dy`` with the ball ``|x - y| < cutoff h`` removed."""
    if not K.is_convolution or K.kind == "power":
        raise KernelError("singular_integral needs a singular convolution kernel")
    if K.pv_policy != "odd":
        raise KernelError("kernel without an odd-symmetry principal-value policy")
    spec = f.spec
    if K.dimension != spec.dimension:
        raise GridError("kernel and grid dimensions differ")
    z = _offsets(spec)
    r = np.sqrt(np.sum(z * z, axis=-1))
    kern = np.where(r >= cutoff * spec.spacing * (1 - 1e-12), K(z), 0.0) * spec.cell_volume
    return GridFunction(spec, _apply_offset_kernel(f, kern))


def hilbert_transform(f: GridFunction, cutoff: float = 2.0) -> GridFunction:
    return singular_integral(f, KernelSpec.hilbert(), cutoff)


def nonconv_apply(f: GridFunction, K: KernelSpec, cutoff: float = 2.0, chunk: int = 1 << 22) -> GridFunction:
    """``int K(x, y) f(y) dy`` by direct quadrature over the support of ``f``."""
    spec = f.spec
    pts = np.stack([c.ravel() for c in spec.mesh()], axis=-1)
    fv = f.samples.ravel()
    supp = np.nonzero(fv)[0]
    out = np.zeros(spec.size)
    if not supp.size:
        return GridFunction(spec, out.reshape(spec.shape))
    ys, wy = pts[supp], fv[supp] * spec.cell_volume
    step = max(1, chunk // supp.size)
    eps = cutoff * spec.spacing * (1 - 1e-12)
    for s in range(0, spec.size, step):
        x = pts[s:s + step]
        d = np.linalg.norm(x[:, None, :] - ys[None, :, :], axis=-1)
        k = K(np.broadcast_to(x[:, None, :], d.shape + (spec.dimension,)),
              np.broadcast_to(ys[None, :, :], d.shape + (spec.dimension,)))
        out[s:s + step] = np.where(d >= eps, k, 0.0) @ wy
    return GridFunction(spec, out.reshape(spec.shape))


def apply_kernel(f: GridFunction, K: KernelSpec) -> GridFunction:
    if K.kind == "power":
        return riesz_potential(f, K.alpha)
    if K.kind == "nonconv":
        return nonconv_apply(f, K)
    return singular_integral(f, K)


# -- smoothed kernels ------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _gauss(a: float, b: float, pieces: int = 8):
    e = np.linspace(a, b, pieces + 1)
    mid, half = (e[1:] + e[:-1]) / 2, (e[1:] - e[:-1]) / 2
    return (mid[:, None] + half[:, None] * _GL_X).ravel(), (half[:, None] * _GL_W).ravel()


class SmoothedKernel:
    """``K^t = phi_t * K`` evaluated pointwise by radial quadrature around the origin.

    Writing ``z = rho e`` gives ``K^t(x) = int_0^inf int_S phi_t(x - rho e) K(rho e) rho^(n-1)``.
    Only ``|x| - t < rho < |x| + t`` contributes.  The same formula is used
    near the origin and in the far field.
    """

    def __init__(self, K: KernelSpec, phi: MollifierSpec, t: float):
        if not K.is_convolution:
            raise KernelError("smoothing applies to convolution kernels")
        if phi.dimension != K.dimension:
            raise GridError("mollifier and kernel dimensions differ")
        self.K, self.phi, self.t = K, phi, float(t)

    def _radial(self, rho: np.ndarray) -> np.ndarray:
        """Weight in ``rho`` pulled out of ``K(rho e) rho^(n-1)``."""
        K = self.K
        if K.kind == "power":
            return rho ** (K.alpha - 1)
        return 1.0 / (math.pi * rho) if K.kind == "hilbert" else 1.0 / (2 * math.pi * rho)

    def _rho_nodes(self, r: float):
        lo, hi = max(0.0, r - self.t), r + self.t
        if self.K.kind == "power":
            # rho = u^(1/alpha) turns rho^(alpha-1) d rho into d u / alpha
            a = self.K.alpha
            u, w = _gauss(lo ** a, hi ** a)
            return u ** (1 / a), w / a, True
        u, w = _gauss(lo, hi)
        return u, w, False

    def value(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, float))
        t, phi, K = self.t, self.phi, self.K
        r = float(np.linalg.norm(x))
        rho, w, absorbed = self._rho_nodes(r)
        rad = 1.0 if absorbed else self._radial(rho)
        if K.dimension == 1:
            odd = -1.0 if K.kind == "hilbert" else 1.0
            g = phi.scaled(x[0] - rho, t) + odd * phi.scaled(x[0] + rho, t)
            return float(np.sum(w * rad * g))
        # angular part: the arc where the bump is supported, or the full circle
        theta0 = math.atan2(x[1], x[0])
        if r > t:
            half = math.asin(t / r)
            th, wt = _gauss(theta0 - half, theta0 + half, pieces=4)
        else:
            th = np.linspace(0, 2 * math.pi, 257)[:-1]
            wt = np.full(th.shape, 2 * math.pi / 256)
        e = np.stack([np.cos(th), np.sin(th)], axis=-1)
        diff = x[None, None, :] - rho[:, None, None] * e[None, :, :]
        g = phi.scaled(np.linalg.norm(diff, axis=-1), t)
        if K.kind == "riesz":
            g = g * e[None, :, K.j]
        ang = g @ wt
        return float(np.sum(w * rad * ang))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self.K.dimension == 1:
            x = x[..., None] if x.ndim == 0 or x.shape[-1] != 1 else x
        flat = x.reshape(-1, self.K.dimension)
        return np.array([self.value(p) for p in flat]).reshape(x.shape[:-1])

    def on_grid(self, spec: GridSpec) -> GridFunction:
        if self.t < 2 * spec.spacing * (1 - 1e-12):
            raise GridError("t below 2h")
        pts = np.stack([c.ravel() for c in spec.mesh()], axis=-1)
        return GridFunction(spec, self(pts).reshape(spec.shape))


def smoothed_kernel(K: KernelSpec, phi: MollifierSpec, t: float, spec: GridSpec | None = None) -> SmoothedKernel:
    if spec is not None and t < 2 * spec.spacing * (1 - 1e-12):
        raise GridError(f"scale t={t} is below 2h")
    return SmoothedKernel(K, phi, t)


# -- radial maximal operator --------------------------------------------------------------

def _scales(spec: GridSpec, phi: MollifierSpec, t_grid) -> tuple[float, ...]:
    ts = t_grid or phi.t_grid or default_t_grid(spec.spacing)
    return tuple(t for t in ts if t >= 2 * spec.spacing * (1 - 1e-12))


def radial_maximal(g: GridFunction, phi: MollifierSpec | None = None, t_grid=None) -> GridFunction:
    """``max_t |phi_t * g|`` over the scale set."""
    phi = phi or MollifierSpec(g.spec.dimension)
    out = np.zeros(g.spec.shape)
    free = MollifierSpec(phi.dimension)
    for t in _scales(g.spec, phi, t_grid):
        np.maximum(out, np.abs(mollify(g, free, t).samples), out=out)
    return GridFunction(g.spec, out)


def phi_domination_constant(spec: GridSpec, phi: MollifierSpec | None = None, t_grid=None) -> float:
    """``C`` with ``M_phi g <= C M g`` on the grid.

    A sampled ``phi_t`` is bounded by its centre value and supported in the
    cube of side ``2t`` around the point, hence ``C = max_t k_t(0) (2t)^n``.
    """
    phi = phi or MollifierSpec(spec.dimension)
    best = 0.0
    for t in _scales(spec, phi, t_grid):
        k = phi.sampled_kernel(spec, t)
        best = max(best, float(k.max()) * (2 * t) ** spec.dimension)
    return best


# -- atoms under T ----------------------------------------------------------------------------

class TailResult(NamedTuple):
    Ta: GridFunction
    ratio: np.ndarray     # nan on the excluded dilate of Q
    region: np.ndarray    # True where the ratio is defined
    sup_ratio: float


def moments_vanish(g: GridFunction, Q: Cube, order: int, tol: float = 2e-2) -> tuple[bool, list[float]]:
    """Relative moments ``|int u^b g| / int |u^b g|`` with ``u = (x - c_Q)/l(Q)``, ``|b| <= order``."""
    spec = g.spec
    u = [(c - cq) / Q.side for c, cq in zip(spec.mesh(), Q.center)]
    rel = []
    for b in _multi_indices(spec.dimension, order):
        mono = np.prod([ui ** bi for ui, bi in zip(u, b)], axis=0)
        v = g.samples * mono
        den = float(np.sum(np.abs(v)))
        rel.append(abs(float(np.sum(v))) / den if den else 0.0)
    return all(r <= tol for r in rel), rel


def _multi_indices(n: int, order: int):
    if order < 0:
        return []
    if n == 1:
        return [(k,) for k in range(order + 1)]
    return [(i, k - i) for k in range(order + 1) for i in range(k + 1)]


def apply_T_to_atom(a, K: KernelSpec, phi: MollifierSpec | None = None, t_grid=None) -> TailResult:
    """``Ta`` and ``M_phi(Ta) / M_(alpha_tau)(chi_Q)^tau`` off ``Q*`` (``Q**`` for nonconvolution).

    ``a`` is anything with ``samples`` (a GridFunction), ``Q`` and ``N``.
    """
    f = a.samples
    spec = f.spec
    Ta = apply_kernel(f, K)
    MTa = radial_maximal(Ta, phi, t_grid).samples
    if K.is_convolution:
        params = OperatorParams(K.alpha, a.N, spec.dimension)
        den = frac_maximal(GridFunction.indicator(spec, a.Q), params.alpha_tau).samples ** params.tau
        excl = star(a.Q)
    else:
        tau = (spec.dimension + K.L + 1) / spec.dimension
        den = hl_maximal(GridFunction.indicator(spec, a.Q)).samples ** tau
        excl = double_star(a.Q)
    region = ~_mask_of(spec, excl)
    ratio = np.full(spec.shape, np.nan)
    ok = region & (den > 0)
    ratio[ok] = MTa[ok] / den[ok]
    sup = float(np.max(ratio[ok])) if ok.any() else 0.0
    return TailResult(Ta, ratio, region, sup)


def _mask_of(spec: GridSpec, Q: Cube) -> np.ndarray:
    """Cells whose midpoints lie in ``Q`` (``Q`` may stick out of the box)."""
    return Q.mask(spec)


def tail_bound_check(Ta: GridFunction, Q: Cube, N: int, alpha: float, points) -> np.ndarray:
    """``|Ta(x)| |x - c_Q|^(n - alpha + N + 1) / l(Q)^(n + N + 1)`` at the given points.

    A single constant bounds these values when the far-field decay holds.
    """
    n = Ta.spec.dimension
    out = []
    for x in points:
        x = np.atleast_1d(np.asarray(x, float))
        d = float(np.linalg.norm(x - Q.center))
        out.append(abs(float(Ta.samples[Ta.spec.index_of(x)])) * d ** (n - alpha + N + 1) / Q.side ** (n + N + 1))
    return np.array(out)


__all__ = [
    "KernelError", "KernelSpec", "OperatorParams", "SmoothedKernel", "TailResult",
    "apply_T_to_atom", "apply_kernel", "dilate", "fourier_constant", "frac_maximal", "hilbert_transform",
    "hl_maximal", "maximal_of_cube", "maximal_sides", "moments_vanish", "nonconv_apply",
    "phi_domination_constant", "radial_maximal", "riesz_potential", "singular_integral", "smoothed_kernel",
    "tail_bound_check",
]
