"""Target spaces X used on the coefficient and Hardy sides: ``L^p(w)`` and ``L^p(.)``."""

from __future__ import annotations

from dataclasses import dataclass

from .grid import GridFunction, GridSpec
from .varlebesgue import ExponentFunction, luxemburg_norm
from .weights import Weight, weighted_Lp_norm


@dataclass(frozen=True)
class LpSpace:
    p: float
    w: Weight | None = None

    @property
    def name(self) -> str:
        return f"L^{self.p:g}" + (f"({self.w.name})" if self.w is not None else "")

    @property
    def p_low(self) -> float:
        return self.p

    def norm(self, f: GridFunction) -> float:
        w = None if self.w is None else self.w.resample(f.spec)
        return weighted_Lp_norm(f, self.p, w)

    def resample(self, spec: GridSpec) -> "LpSpace":
        return self if self.w is None else LpSpace(self.p, self.w.resample(spec))


@dataclass(frozen=True)
class VariableSpace:
    p: ExponentFunction

    @property
    def name(self) -> str:
        return f"L^{{{self.p.name}}}"

    @property
    def p_low(self) -> float:
        return self.p.p_minus

    def norm(self, f: GridFunction) -> float:
        return luxemburg_norm(f, self.p.resample(f.spec))

    def resample(self, spec: GridSpec) -> "VariableSpace":
        return VariableSpace(self.p.resample(spec))
