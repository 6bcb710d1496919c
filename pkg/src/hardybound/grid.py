"""Uniform sample grids, grid functions, cubes, quadrature and mollification.

Samples live at cell midpoints: a box ``[lo, hi]`` with spacing ``h`` has
``(hi - lo) / h`` cells per axis and the sample for cell ``i`` sits at
``lo + (i + 1/2) h``.  Every integral is the midpoint rule on those cells.
Functions are treated as zero outside the box.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _quad
from scipy import signal

DEFAULT_SAMPLE_BUDGET = 1 << 22
_ALIGN_EPS = 1e-9


class GridError(ValueError):
    """Raised for inconsistent grids, cubes or out-of-range parameters."""


@dataclass(frozen=True)
class GridSpec:
    dimension: int
    box: tuple[tuple[float, float], ...]
    spacing: float
    budget: int = DEFAULT_SAMPLE_BUDGET

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise GridError(f"dimension must be 1 or 2, got {self.dimension}")
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        object.__setattr__(self, "box", box)
        if len(box) != self.dimension:
            raise GridError("box needs one (lo, hi) pair per axis")
        h = float(self.spacing)
        if not h > 0:
            raise GridError("spacing must be positive")
        object.__setattr__(self, "spacing", h)
        for lo, hi in box:
            if not hi > lo:
                raise GridError(f"empty box side ({lo}, {hi})")
            cells = (hi - lo) / h
            if abs(cells - round(cells)) > _ALIGN_EPS * max(1.0, cells):
                raise GridError(f"spacing {h} does not divide side ({lo}, {hi})")
        if self.size > self.budget:
            raise GridError(f"{self.size} samples exceed the budget {self.budget}")

    @classmethod
    def cube(cls, dimension: int, lo: float, hi: float, spacing: float) -> "GridSpec":
        return cls(dimension, ((lo, hi),) * dimension, spacing)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(round((hi - lo) / self.spacing)) for lo, hi in self.box)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dimension

    @property
    def lo(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.box])

    @property
    def hi(self) -> np.ndarray:
        return np.array([hi for _, hi in self.box])

    def axes(self) -> list[np.ndarray]:
        h = self.spacing
        return [lo + (np.arange(m) + 0.5) * h for (lo, _), m in zip(self.box, self.shape)]

    def mesh(self) -> list[np.ndarray]:
        """Coordinate arrays of the sample points (``indexing='ij'``)."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def radius(self, center: Sequence[float] | None = None) -> np.ndarray:
        c = np.zeros(self.dimension) if center is None else np.asarray(center, float)
        return np.sqrt(sum((x - ci) ** 2 for x, ci in zip(self.mesh(), c)))

    def refine(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.dimension, self.box, self.spacing / factor, self.budget)

    def coarsen(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.dimension, self.box, self.spacing * factor, self.budget)

    def index_of(self, x: Sequence[float]) -> tuple[int, ...]:
        """Index of the cell containing the point ``x``."""
        x = np.atleast_1d(np.asarray(x, float))
        idx = np.floor((x - self.lo) / self.spacing + _ALIGN_EPS).astype(int)
        return tuple(int(min(max(i, 0), m - 1)) for i, m in zip(idx, self.shape))


class GridFunction:
    """Real samples on a :class:`GridSpec`; immutable after construction."""

    __slots__ = ("spec", "samples")

    def __init__(self, spec: GridSpec, samples):
        arr = np.array(samples, dtype=float)
        if arr.shape != spec.shape:
            raise GridError(f"samples shape {arr.shape} does not match grid {spec.shape}")
        if not np.all(np.isfinite(arr)):
            raise GridError("samples must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "samples", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @classmethod
    def from_callable(cls, spec: GridSpec, fn: Callable[..., np.ndarray]) -> "GridFunction":
        vals = np.broadcast_to(np.asarray(fn(*spec.mesh()), dtype=float), spec.shape)
        return cls(spec, vals)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridFunction":
        return cls(spec, np.zeros(spec.shape))

    @classmethod
    def constant(cls, spec: GridSpec, c: float) -> "GridFunction":
        return cls(spec, np.full(spec.shape, float(c)))

    @classmethod
    def indicator(cls, spec: GridSpec, cube: "Cube") -> "GridFunction":
        arr = np.zeros(spec.shape)
        arr[cube.slices(spec)] = 1.0
        return cls(spec, arr)

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            if other.spec != self.spec:
                raise GridError("grid functions live on different grids")
            return other.samples
        return other

    def __add__(self, other):
        return GridFunction(self.spec, self.samples + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.spec, self.samples - self._coerce(other))

    def __rsub__(self, other):
        return GridFunction(self.spec, self._coerce(other) - self.samples)

    def __mul__(self, other):
        return GridFunction(self.spec, self.samples * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.spec, self.samples / self._coerce(other))

    def __neg__(self):
        return GridFunction(self.spec, -self.samples)

    def __abs__(self):
        return GridFunction(self.spec, np.abs(self.samples))

    def __pow__(self, p):
        return GridFunction(self.spec, np.abs(self.samples) ** p)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return GridFunction(self.spec, fn(self.samples))

    def sup(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def __repr__(self):
        return f"GridFunction(shape={self.spec.shape}, h={self.spec.spacing})"


@dataclass(frozen=True)
class Cube:
    """Axis-aligned cube ``corner + [0, side)^n``.

    ``clipped`` marks cubes (usually dilations) that stick out of the box
    they were built for; functions vanish outside the box, so only the part
    inside contributes to integrals.
    """

    corner: tuple[float, ...]
    side: float
    clipped: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(float(c) for c in np.atleast_1d(self.corner)))
        if not self.side > 0:
            raise GridError("cube side must be positive")
        object.__setattr__(self, "side", float(self.side))

    @classmethod
    def from_center(cls, center: Sequence[float], side: float) -> "Cube":
        center = np.atleast_1d(np.asarray(center, float))
        return cls(tuple(center - side / 2), side)

    @property
    def dimension(self) -> int:
        return len(self.corner)

    @property
    def center(self) -> np.ndarray:
        return np.array(self.corner) + self.side / 2

    @property
    def volume(self) -> float:
        return self.side ** self.dimension

    def contains(self, x: Sequence[float]) -> bool:
        x = np.atleast_1d(np.asarray(x, float))
        c = np.array(self.corner)
        return bool(np.all(x >= c) and np.all(x < c + self.side))

    def is_aligned(self, spec: GridSpec) -> bool:
        h = spec.spacing
        offs = (np.array(self.corner) - spec.lo) / h
        k = self.side / h
        return bool(np.all(np.abs(offs - np.round(offs)) < _ALIGN_EPS * np.maximum(1, np.abs(offs)))
                    and abs(k - round(k)) < _ALIGN_EPS * max(1.0, k))

    def inside(self, spec: GridSpec) -> bool:
        c = np.array(self.corner)
        tol = _ALIGN_EPS * spec.spacing
        return bool(np.all(c >= spec.lo - tol) and np.all(c + self.side <= spec.hi + tol))

    def index_range(self, spec: GridSpec) -> list[tuple[int, int]]:
        """Per-axis half-open index ranges of cells whose midpoints lie in the cube."""
        h = spec.spacing
        out = []
        for c, lo, m in zip(self.corner, spec.lo, spec.shape):
            a = math.ceil((c - lo) / h - 0.5 - _ALIGN_EPS)
            b = math.ceil((c + self.side - lo) / h - 0.5 - _ALIGN_EPS)
            out.append((min(max(a, 0), m), min(max(b, 0), m)))
        return out

    def slices(self, spec: GridSpec) -> tuple[slice, ...]:
        return tuple(slice(a, b) for a, b in self.index_range(spec))

    def mask(self, spec: GridSpec) -> np.ndarray:
        m = np.zeros(spec.shape, dtype=bool)
        m[self.slices(spec)] = True
        return m

    def cell_count(self, spec: GridSpec) -> int:
        return int(np.prod([b - a for a, b in self.index_range(spec)]))


def _check_dim(f: GridFunction, Q: Cube):
    if Q.dimension != f.spec.dimension:
        raise GridError("cube and grid dimensions differ")


def integrate(f: GridFunction) -> float:
    """Midpoint rule: ``h^n`` times the sum of the samples."""
    return float(f.spec.cell_volume * np.sum(f.samples))


def integrate_over(f: GridFunction, Q: Cube) -> float:
    _check_dim(f, Q)
    return float(f.spec.cell_volume * np.sum(f.samples[Q.slices(f.spec)]))


def cube_average(f: GridFunction, Q: Cube) -> float:
    _check_dim(f, Q)
    if Q.cell_count(f.spec) == 0:
        raise GridError("cube contains no grid cells")
    return integrate_over(f, Q) / Q.volume


def sample_at(f: GridFunction, x: Sequence[float]) -> float:
    """Value on the cell containing ``x``."""
    return float(f.samples[f.spec.index_of(x)])


def dilate(Q: Cube, tau: float, spec: GridSpec | None = None) -> Cube:
    """Cube with the same center and side ``tau * side``.

    With ``spec`` given, a result leaving the box is returned with
    ``clipped=True``.
    """
    if not tau > 0:
        raise GridError("dilation factor must be positive")
    out = Cube.from_center(Q.center, tau * Q.side)
    if spec is not None and not out.inside(spec):
        out = Cube(out.corner, out.side, clipped=True)
    return out


def star(Q: Cube, spec: GridSpec | None = None) -> Cube:
    return dilate(Q, 2.0 * math.sqrt(Q.dimension), spec)


def double_star(Q: Cube, spec: GridSpec | None = None) -> Cube:
    return star(star(Q), spec)


# -- mollifier ---------------------------------------------------------------

def _bump(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@lru_cache(maxsize=None)
def _bump_mass(n: int) -> float:
    if n == 1:
        return 2.0 * _quad.quad(lambda r: math.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0, epsabs=1e-14, epsrel=1e-12)[0]
    return 2.0 * math.pi * _quad.quad(lambda r: r * math.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0,
                                       epsabs=1e-14, epsrel=1e-12)[0]


def default_t_grid(h: float, j_min: int = -1) -> tuple[float, ...]:
    """Dyadic scales ``2^-j`` for ``j`` from ``j_min`` to ``log2(1/(2h))``."""
    j_max = int(math.floor(math.log2(1.0 / (2.0 * h)) + 1e-9))
    return tuple(2.0 ** -j for j in range(j_min, j_max + 1))


@dataclass(frozen=True)
class MollifierSpec:
    """The normalized bump ``c exp(-1/(1-|x|^2))`` on the unit ball, plus a scale set."""

    dimension: int = 1
    t_grid: tuple[float, ...] | None = None

    @classmethod
    def for_grid(cls, spec: GridSpec, j_min: int = -1) -> "MollifierSpec":
        return cls(spec.dimension, default_t_grid(spec.spacing, j_min))

    @property
    def normalization(self) -> float:
        return 1.0 / _bump_mass(self.dimension)

    @property
    def max_value(self) -> float:
        return self.normalization * math.exp(-1.0)

    def __call__(self, r) -> np.ndarray:
        """Profile value at radius ``r = |x|``."""
        return self.normalization * _bump(np.abs(r))

    def scaled(self, r, t: float) -> np.ndarray:
        """``phi_t(x) = t^-n phi(x / t)`` at radius ``r``."""
        return t ** -self.dimension * self(np.asarray(r, float) / t)

    def sampled_kernel(self, spec: GridSpec, t: float) -> np.ndarray:
        """``phi_t`` on the grid offsets, rescaled so its quadrature sum is exactly 1."""
        if t < 2 * spec.spacing * (1 - 1e-12):
            raise GridError(f"scale t={t} is below 2h={2 * spec.spacing}: kernel under-resolved")
        h = spec.spacing
        m = int(math.ceil(t / h - 1e-12)) - 1
        d = np.arange(-m, m + 1) * h
        r = np.sqrt(sum(x ** 2 for x in np.meshgrid(*([d] * spec.dimension), indexing="ij")))
        k = self.scaled(r, t)
        return k / (np.sum(k) * spec.cell_volume)


def convolve_same(samples: np.ndarray, kernel: np.ndarray, scale: float) -> np.ndarray:
    """Zero-padded discrete convolution, centred, times ``scale``.

    1D problems and tiny 2D kernels use direct summation; the rest go
    through the FFT route, with sign restored for nonnegative data.
    """
    if samples.ndim == 1 or kernel.size <= 81:
        out = signal.convolve(samples, kernel, mode="same", method="direct")
    else:
        out = signal.convolve(samples, kernel, mode="same", method="fft")
        if np.all(samples >= 0) and np.all(kernel >= 0):
            out = np.maximum(out, 0.0)
    return out * scale


def mollify(f: GridFunction, phi: MollifierSpec, t: float) -> GridFunction:
    if phi.dimension != f.spec.dimension:
        raise GridError("mollifier and grid dimensions differ")
    if phi.t_grid is not None and not any(abs(t - s) <= 1e-12 * s for s in phi.t_grid):
        raise GridError(f"scale t={t} is not in the mollifier's scale set")
    k = phi.sampled_kernel(f.spec, t)
    return GridFunction(f.spec, convolve_same(f.samples, k, f.spec.cell_volume))


# -- serialization -------------------------------------------------------------

_MAGIC = b"HBGF"


def dumps(f: GridFunction) -> bytes:
    """Flat binary layout: magic, n, box pairs, h, then row-major float64 samples."""
    spec = f.spec
    head = _MAGIC + struct.pack("<I", spec.dimension)
    head += struct.pack(f"<{2 * spec.dimension}d", *[v for pair in spec.box for v in pair])
    head += struct.pack("<d", spec.spacing)
    return head + np.ascontiguousarray(f.samples, dtype="<f8").tobytes()


def loads(data: bytes) -> GridFunction:
    if data[:4] != _MAGIC:
        raise GridError("not a grid function payload")
    (n,) = struct.unpack_from("<I", data, 4)
    vals = struct.unpack_from(f"<{2 * n}d", data, 8)
    (h,) = struct.unpack_from("<d", data, 8 + 16 * n)
    spec = GridSpec(n, tuple(zip(vals[::2], vals[1::2])), h)
    payload = np.frombuffer(data, dtype="<f8", offset=16 + 16 * n)
    return GridFunction(spec, payload.reshape(spec.shape))


def save(f: GridFunction, path) -> None:
    Path(path).write_bytes(dumps(f))


def load(path) -> GridFunction:
    return loads(Path(path).read_bytes())


def to_csv(f: GridFunction) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    names = ["x", "y"][: f.spec.dimension]
    w.writerow(names + ["value"])
    coords = [c.ravel() for c in f.spec.mesh()]
    for row in zip(*coords, f.samples.ravel()):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def from_csv(text: str, spec: GridSpec) -> GridFunction:
    rows = list(csv.reader(io.StringIO(text)))
    vals = np.array([float(r[-1]) for r in rows[1:]])
    return GridFunction(spec, vals.reshape(spec.shape))
