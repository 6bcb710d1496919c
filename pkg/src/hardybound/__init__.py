"""Numerical checks for Hardy-space boundedness of singular and fractional integrals."""

from .grid import Cube, GridFunction, GridSpec, MollifierSpec
from .weights import Weight, ap_constant, parse_weight, rh_constant, rw_estimate
from .varlebesgue import ExponentFunction, luxemburg_norm, modular, parse_exponent
from .operators import KernelSpec, frac_maximal, hilbert_transform, hl_maximal, radial_maximal, riesz_potential
from .atoms import Atom, AtomicSum, make_atom, random_atomic_sum
from .rubio import IterationConfig, check_iteration_properties, iterate
from .harness import CheckReport, CheckSpec, HypothesisError, check, run

__version__ = "0.1.0"
