import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardybound.grid import Cube, GridFunction, GridSpec
from hardybound.weights import (Weight, a1_constant, ap_constant, apq_constant, constant_trend, constant_weight,
                                default_family, diverges, growth_exponent, maximal_root_weight, parse_weight,
                                power_weight, rh_constant, rh_inf_constant, rw_estimate, weighted_Lp_norm)


@pytest.fixture(scope="module")
def sym():
    return GridSpec.cube(1, -1.0, 1.0, 1 / 256)


@pytest.fixture(scope="module")
def fam(sym):
    return default_family(sym, 200, 0)


def test_constant_weight_constants_are_one(sym, fam):
    w = constant_weight(sym, 3.0)
    for p in (1.2, 2.0, 5.0):
        assert ap_constant(w, p, fam) == pytest.approx(1.0, abs=1e-12)
    assert a1_constant(w, fam) == pytest.approx(1.0, abs=1e-12)
    assert rh_constant(w, 2.0, fam) == pytest.approx(1.0, abs=1e-12)
    assert rh_inf_constant(w, fam) == pytest.approx(1.0, abs=1e-12)
    assert apq_constant(w, 2.0, 4.0, fam) == pytest.approx(1.0, abs=1e-12)


def test_sqrt_weight_is_a2_and_stable(sym):
    vals = [v for _, v in constant_trend("ap", power_weight(sym, 0.5), levels=2, p=2.0, random_per_level=200)]
    assert vals[1] / vals[0] < 1.05


def test_steep_weight_a2_grows(sym):
    vals = [v for _, v in constant_trend("ap", power_weight(sym, 1.5), levels=8, p=2.0, random_per_level=200)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert growth_exponent(vals) > 0.3


def test_maximal_root_weight_a1_finite():
    sp = GridSpec.cube(1, -4, 4, 1 / 64)
    vals = [v for _, v in constant_trend("a1", maximal_root_weight(sp, Cube((0.0,), 1.0)), levels=4,
                                         random_per_level=200)]
    assert max(vals) < 3 and not diverges(vals)


def test_linear_weight_not_a1(sym):
    vals = [v for _, v in constant_trend("a1", power_weight(sym, 1.0), levels=6, random_per_level=200)]
    assert diverges(vals)


@pytest.mark.parametrize("a,expected", [(0.0, 1.0), (0.5, 1.5), (-0.5, 1.0), (0.25, 1.25)])
def test_rw_estimate(sym, a, expected):
    w = constant_weight(sym) if a == 0 else power_weight(sym, a)
    assert rw_estimate(w) == pytest.approx(expected, abs=0.1)


def test_rh_oracles(sym):
    ok = [v for _, v in constant_trend("rh", power_weight(sym, 0.5), levels=3, s=2.0, random_per_level=200)]
    assert ok[-1] / ok[-2] < 1.05
    bad = [v for _, v in constant_trend("rh", power_weight(sym, -0.75), levels=6, s=2.0, random_per_level=200)]
    assert growth_exponent(bad) > 0


def test_apq_consistency(sym, fam):
    # w in A_{p,q} iff w^q in A_{1+q/p'}
    w, p, q = power_weight(sym, -1 / 8), 2.0, 4.0
    pp = p / (p - 1)
    lhs = apq_constant(w, p, q, fam)
    rhs = ap_constant(w.power(q), 1 + q / pp, fam)
    assert math.isfinite(lhs) and math.isfinite(rhs)
    vals = [v for _, v in constant_trend("apq", w, levels=3, p=p, q=q, random_per_level=200)]
    assert vals[-1] / vals[-2] < 1.05


def test_ap_duality(sym, fam):
    w, p = power_weight(sym, 0.3), 2.5
    pp = p / (p - 1)
    lhs = ap_constant(w, p, fam) ** (1 / (p - 1))
    rhs = ap_constant(w.power(1 - pp), pp, fam)
    assert lhs == pytest.approx(rhs, rel=1e-10)


@given(st.floats(1e-3, 1e3))
@settings(max_examples=20, deadline=None)
def test_ap_scale_invariant(c):
    sp = GridSpec.cube(1, -1, 1, 1 / 64)
    F = default_family(sp, 50, 0)
    w = power_weight(sp, 0.4)
    assert ap_constant(w.scaled(c), 2.0, F) == pytest.approx(ap_constant(w, 2.0, F), rel=1e-12)


def test_family_monotone(sym):
    w = power_weight(sym, 0.7)
    small = default_family(sym, 10, 0)
    big = small.union(default_family(sym, 100, 1))
    assert ap_constant(w, 2.0, small) <= ap_constant(w, 2.0, big)


def test_constants_at_least_one(sym, fam, rng):
    w = Weight(GridFunction(sym, rng.uniform(0.1, 5, sym.shape)))
    assert ap_constant(w, 2.0, fam) >= 1 - 1e-12
    assert a1_constant(w, fam) >= 1 - 1e-12
    assert rh_constant(w, 3.0, fam) >= 1 - 1e-12


def test_weighted_norm_oracles(sym):
    Q = Cube((0.0,), 1.0)
    f = GridFunction.indicator(sym, Q)
    assert abs(weighted_Lp_norm(f, 2.0, constant_weight(sym)) - 1.0) <= sym.spacing
    assert weighted_Lp_norm(f, 1.0, power_weight(sym, 0.5)) == pytest.approx(2 / 3, abs=5 * sym.spacing)
    c = GridFunction.constant(sym, 3.0)
    w = power_weight(sym, 0.5)
    mass = float(np.sum(w.samples)) * sym.spacing
    assert weighted_Lp_norm(c, 1.5, w) == pytest.approx(3.0 * mass ** (1 / 1.5), rel=1e-12)


def test_parse_weight(sym):
    assert np.allclose(parse_weight("const:2", sym).samples, 2.0)
    w = parse_weight("power:0.5@0.25", sym)
    i = sym.index_of((0.75,))
    assert w.samples[i] == pytest.approx(abs(sym.mesh()[0][i] - 0.25) ** 0.5)
