"""(N, inf)-atoms, finite atomic sums and the norms attached to them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import Cube, GridError, GridFunction, GridSpec, MollifierSpec, load, save
from .operators import _multi_indices, radial_maximal

MOMENT_TOL = 1e-10
ZERO_TOL = 1e-12


class AtomError(ValueError):
    pass


def _local_coords(spec: GridSpec, Q: Cube) -> list[np.ndarray]:
    """``(x - c_Q) / l(Q)`` on the cells of ``Q``."""
    sl = Q.slices(spec)
    return [((ax[s] - c) / Q.side) for ax, s, c in zip(spec.axes(), sl, Q.center)]


def _basis(spec: GridSpec, Q: Cube, N: int) -> np.ndarray:
    u = np.meshgrid(*_local_coords(spec, Q), indexing="ij")
    cols = [np.prod([ui ** bi for ui, bi in zip(u, b)], axis=0).ravel() for b in _multi_indices(spec.dimension, N)]
    return np.stack(cols, axis=1) if cols else np.zeros((u[0].size, 0))


@dataclass(frozen=True)
class Atom:
    Q: Cube
    N: int
    samples: GridFunction
    degenerate: bool = False

    @property
    def spec(self) -> GridSpec:
        return self.samples.spec

    def moments(self) -> np.ndarray:
        """Scaled moments ``int ((x - c_Q)/l(Q))^b a dx`` for ``|b| <= N``."""
        B = _basis(self.spec, self.Q, self.N)
        vals = self.samples.samples[self.Q.slices(self.spec)].ravel()
        return self.spec.cell_volume * (B.T @ vals)

    def verify(self) -> bool:
        """Raise :class:`AtomError` unless sup, support and moment conditions hold.

        Moments are measured about ``c_Q`` in units of ``l(Q)``; that is the
        same condition as for ``x^b`` and it does not lose digits far from 0.
        """
        a = self.samples.samples
        if np.max(np.abs(a)) > 1 + 1e-12:
            raise AtomError("sup norm exceeds 1")
        outside = ~self.Q.mask(self.spec)
        if np.any(a[outside] != 0):
            raise AtomError("atom is not supported in its cube")
        m = self.moments()
        if m.size and np.max(np.abs(m)) > MOMENT_TOL * self.Q.volume:
            raise AtomError(f"moment condition fails: {np.max(np.abs(m)):.3e}")
        return True


def make_atom(raw: GridFunction, Q: Cube, N: int) -> Atom:
    """Remove the ``L^2(Q)`` projection onto polynomials of degree ``<= N`` and normalise the sup.

    Returns an atom with ``degenerate=True`` and zero samples when the
    projection wipes out ``raw``.
    """
    spec = raw.spec
    if N < -1:
        raise AtomError("moment order must be >= -1")
    inside = Q.mask(spec)
    if np.any(raw.samples[~inside] != 0):
        raise AtomError("raw profile is not supported in Q")
    sl = Q.slices(spec)
    v = raw.samples[sl].astype(float).ravel()
    top = float(np.max(np.abs(v))) if v.size else 0.0
    B = _basis(spec, Q, N)
    if B.shape[1]:
        if B.shape[0] < B.shape[1]:
            raise AtomError("cube has fewer cells than polynomial moments")
        G = B.T @ B
        for _ in range(2):  # second pass mops up rounding
            v = v - B @ np.linalg.solve(G, B.T @ v)
    s = float(np.max(np.abs(v))) if v.size else 0.0
    out = np.zeros(spec.shape)
    if top == 0 or s < ZERO_TOL * top:
        return Atom(Q, N, GridFunction(spec, out), degenerate=True)
    out[sl] = (v / s).reshape(out[sl].shape)
    return Atom(Q, N, GridFunction(spec, out))


def moment_order_required(kind: str, n: int, p: float, r_w: float = 1.0, which: str = "N") -> int:
    """Smallest admissible moment order.

    ``which="N"`` gives the least integer above ``floor(n(r/p - 1))_+`` where
    ``r = r_w`` for weighted targets and ``r = 1`` with ``p = p_-`` for
    variable ones; ``which="L"`` gives ``max(floor(n(r/p - 1)), -1)``.
    """
    if kind not in ("weighted", "variable"):
        raise ValueError("kind must be 'weighted' or 'variable'")
    if not p > 0:
        raise ValueError("p must be positive")
    r = r_w if kind == "weighted" else 1.0
    s = math.floor(n * (r / p - 1) + 1e-12)
    if which == "N":
        return max(s, 0) + 1
    if which == "L":
        return max(s, -1)
    raise ValueError("which must be 'N' or 'L'")


# -- atomic sums -------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomRecipe:
    """Grid-free description of one atom: cube, profile and coefficient."""

    lam: float
    corner: tuple[float, ...]
    side: float
    N: int
    profile: str
    seed: int

    @property
    def cube(self) -> Cube:
        return Cube(self.corner, self.side)

    def raw(self, spec: GridSpec, seed: int | None = None) -> GridFunction:
        seed = self.seed if seed is None else seed
        Q = self.cube
        rng = np.random.default_rng(seed)
        u = np.meshgrid(*[(ax[s] - c) / Q.side + 0.5 for ax, s, c in zip(spec.axes(), Q.slices(spec), Q.corner)],
                        indexing="ij")
        if self.profile == "polybump":
            deg = self.N + 2
            vals = np.zeros(u[0].shape)
            for b in _multi_indices(spec.dimension, deg):
                vals += rng.normal() * np.prod([(2 * ui - 1) ** bi for ui, bi in zip(u, b)], axis=0)
            bump = np.prod([np.exp(-1.0 / np.maximum(1 - (2 * ui - 1) ** 2, 1e-300)) for ui in u], axis=0)
            vals = vals * bump
        elif self.profile == "steps":
            m = 2 ** int(rng.integers(1, 3))
            table = rng.uniform(-1, 1, (m,) * spec.dimension)
            idx = tuple(np.minimum((ui * m).astype(int), m - 1) for ui in u)
            vals = table[idx]
        else:
            raise AtomError(f"unknown profile {self.profile!r}")
        out = np.zeros(spec.shape)
        out[Q.slices(spec)] = vals
        return GridFunction(spec, out)

    def realize(self, spec: GridSpec, tries: int = 16) -> Atom:
        for k in range(tries):
            a = make_atom(self.raw(spec, self.seed + 7919 * k), self.cube, self.N)
            if not a.degenerate:
                return a
        raise AtomError("profile keeps projecting to zero")


@dataclass(frozen=True)
class AtomicSum:
    terms: tuple[tuple[float, Atom], ...]
    recipe: tuple[AtomRecipe, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise AtomError("an atomic sum needs at least one term")
        spec = self.terms[0][1].spec
        for lam, a in self.terms:
            if not lam > 0:
                raise AtomError("coefficients must be positive")
            if a.spec != spec:
                raise AtomError("all atoms must live on the same grid")

    @property
    def spec(self) -> GridSpec:
        return self.terms[0][1].spec

    def __len__(self):
        return len(self.terms)

    def function(self) -> GridFunction:
        out = np.zeros(self.spec.shape)
        for lam, a in self.terms:
            out += lam * a.samples.samples
        return GridFunction(self.spec, out)

    def indicator_sum(self, dilation: float = 1.0) -> GridFunction:
        """``sum lam_i chi_(tau Q_i)``, cut off at the box."""
        out = np.zeros(self.spec.shape)
        for lam, a in self.terms:
            Q = a.Q if dilation == 1.0 else Cube.from_center(a.Q.center, dilation * a.Q.side)
            out[Q.slices(self.spec)] += lam
        return GridFunction(self.spec, out)

    def scaled(self, c: float) -> "AtomicSum":
        rec = None if self.recipe is None else tuple(
            AtomRecipe(r.lam * c, r.corner, r.side, r.N, r.profile, r.seed) for r in self.recipe)
        return AtomicSum(tuple((c * lam, a) for lam, a in self.terms), rec)

    def resample(self, spec: GridSpec) -> "AtomicSum":
        if self.recipe is None:
            raise AtomError("sum has no recipe to rebuild on another grid")
        return realize(self.recipe, spec)


def realize(recipe, spec: GridSpec) -> AtomicSum:
    recipe = tuple(recipe)
    return AtomicSum(tuple((r.lam, r.realize(spec)) for r in recipe), recipe)


def atomic_recipe(seed: int, M: int, N: int, dimension: int, box: float = 8.0,
                  sides: tuple[int, ...] = (0, 1, 2, 3), lam_range: tuple[float, float] = (0.1, 10.0),
                  profiles: tuple[str, ...] = ("polybump", "steps")) -> tuple[AtomRecipe, ...]:
    """Seeded cubes of side ``2^-j`` (``j`` in ``sides``) at dyadic positions in the inner half-box.

    With ``|Q| <= 1`` and the cube inside ``[-box/2, box/2]^n`` its ``Q**``
    dilate stays inside ``[-box, box]^n``.
    """
    rng = np.random.default_rng(seed)
    half = box / 2
    out = []
    for i in range(M):
        side = 2.0 ** -int(rng.choice(sides))
        slots = int(round(2 * half / side))
        corner = tuple(-half + side * int(rng.integers(0, slots)) for _ in range(dimension))
        lam = float(math.exp(rng.uniform(math.log(lam_range[0]), math.log(lam_range[1]))))
        prof = profiles[int(rng.integers(0, len(profiles)))]
        out.append(AtomRecipe(lam, corner, side, N, prof, int(rng.integers(0, 2 ** 31))))
    return tuple(out)


def random_atomic_sum(seed: int, M: int, N: int, spec: GridSpec, **policy) -> AtomicSum:
    """Deterministic-by-seed sum of ``M`` atoms; ``policy`` goes to :func:`atomic_recipe`."""
    box = policy.pop("box", float(min(hi for _, hi in spec.box)))
    return realize(atomic_recipe(seed, M, N, spec.dimension, box=box, **policy), spec)


# -- norms ----------------------------------------------------------------------------------

def coefficient_norm(s: AtomicSum, X, dilation: float = 1.0) -> float:
    """``|| sum lam_i chi_(Q_i) ||_X``."""
    return X.norm(s.indicator_sum(dilation))


def hardy_quasinorm(g: GridFunction, X, phi: MollifierSpec | None = None, t_grid=None) -> float:
    """``|| M_phi g ||_X``."""
    return X.norm(radial_maximal(g, phi, t_grid))


# -- manifest ---------------------------------------------------------------------------------

MANIFEST_FIELDS = ["index", "lambda", "corner", "side", "N", "profile", "seed", "payload"]


def save_manifest(s: AtomicSum, directory) -> Path:
    """``manifest.csv`` plus one grid payload per atom."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(MANIFEST_FIELDS)
    for i, (lam, a) in enumerate(s.terms):
        r = s.recipe[i] if s.recipe else None
        name = f"atom_{i:04d}.grid"
        save(a.samples, d / name)
        w.writerow([i, repr(lam), " ".join(repr(c) for c in a.Q.corner), repr(a.Q.side), a.N,
                    r.profile if r else "", r.seed if r else "", name])
    path = d / "manifest.csv"
    path.write_bytes(buf.getvalue().encode())
    return path


def load_manifest(directory) -> AtomicSum:
    d = Path(directory)
    rows = list(csv.DictReader(io.StringIO((d / "manifest.csv").read_text())))
    terms, recipe = [], []
    for row in rows:
        corner = tuple(float(c) for c in row["corner"].split())
        Q = Cube(corner, float(row["side"]))
        lam, N = float(row["lambda"]), int(row["N"])
        terms.append((lam, Atom(Q, N, load(d / row["payload"]))))
        if row["profile"]:
            recipe.append(AtomRecipe(lam, corner, Q.side, N, row["profile"], int(row["seed"])))
    return AtomicSum(tuple(terms), tuple(recipe) if len(recipe) == len(terms) else None)
