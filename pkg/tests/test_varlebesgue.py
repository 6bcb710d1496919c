import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardybound.grid import Cube, GridFunction, GridSpec
from hardybound.varlebesgue import (ExponentFunction, conjugate, fractional_target, holder_pairing, is_log_holder,
                                    lh_constants, luxemburg_norm, modular, parse_exponent, ratio)
from hardybound.weights import weighted_Lp_norm


def halves(spec, a, b):
    x = spec.mesh()[0]
    return np.where(x < 0.5, a, b)


@pytest.fixture
def two_piece(unit):
    return ExponentFunction.from_profile(unit, lambda sp: halves(sp, 2.0, 4.0))


def test_modular_oracles(unit, two_piece):
    f = GridFunction.constant(unit, 1.0)
    p2 = ExponentFunction.constant(unit, 2.0)
    assert modular(f, 1.0, p2) == pytest.approx(1.0, abs=unit.spacing)
    assert modular(f, 2.0, p2) == pytest.approx(0.25, abs=unit.spacing)
    g = GridFunction(unit, halves(unit, 2.0, 1.0))
    # 2^2 * 1/2 + 1^4 * 1/2
    assert modular(g, 1.0, two_piece) == pytest.approx(2.5, abs=unit.spacing)


def test_luxemburg_closed_forms(unit, two_piece):
    p2 = ExponentFunction.constant(unit, 2.0)
    assert luxemburg_norm(GridFunction.constant(unit, 2.0), p2) == pytest.approx(2.0, abs=1e-8)
    # (1/lam)^2/2 + (3/lam)^4/2 = 1 with u = lam^-2: 81u^2 + u - 2 = 0
    u = (-1 + math.sqrt(1 + 8 * 81)) / (2 * 81)
    f = GridFunction(unit, halves(unit, 1.0, 3.0))
    assert luxemburg_norm(f, two_piece) == pytest.approx(1 / math.sqrt(u), abs=1e-8)


@pytest.mark.parametrize("p0", [0.7, 1.0, 1.5, 2.0, 3.7])
def test_constant_exponent_collapse(line, p0):
    p = ExponentFunction.constant(line, p0)
    for seed in range(20):
        r = np.random.default_rng(seed)
        f = GridFunction(line, r.normal(size=line.shape) * (np.abs(line.mesh()[0]) < 3))
        assert luxemburg_norm(f, p) == pytest.approx(weighted_Lp_norm(f, p0), rel=1e-8)


def test_modular_at_norm_is_one(line):
    p = parse_exponent("log:0.6,1.5", line)
    for seed in range(10):
        r = np.random.default_rng(seed)
        f = GridFunction(line, r.exponential(size=line.shape) * (np.abs(line.mesh()[0]) < 2))
        assert abs(modular(f, luxemburg_norm(f, p), p) - 1) <= 1e-8


@given(st.floats(1e-3, 1e3))
@settings(max_examples=25, deadline=None)
def test_homogeneity(c):
    sp = GridSpec.cube(1, -2, 2, 1 / 32)
    p = parse_exponent("ramp:0.5;0.8;0,1=2.5", sp)
    f = GridFunction.from_callable(sp, lambda x: np.exp(-x * x))
    assert luxemburg_norm(f * c, p) == pytest.approx(c * luxemburg_norm(f, p), rel=1e-8)


def test_monotone(line, rng):
    p = parse_exponent("log:1.2,1", line)
    g = rng.uniform(0, 2, line.shape)
    f = g * rng.uniform(0, 1, line.shape)
    assert luxemburg_norm(GridFunction(line, f), p) <= luxemburg_norm(GridFunction(line, g), p) + 1e-10


def test_zero_function(line):
    assert luxemburg_norm(GridFunction.zeros(line), parse_exponent("log:1,1", line)) == 0.0


def test_conjugates(unit):
    p2, p4 = ExponentFunction.constant(unit, 2.0), ExponentFunction.constant(unit, 4.0)
    assert np.allclose(conjugate(p2).samples, 2.0)
    assert np.allclose(conjugate(p4).samples, 4 / 3)
    assert np.allclose(conjugate(ratio(ExponentFunction.constant(unit, 3.0), 1.5)).samples, 2.0)
    p = parse_exponent("log:1.5,1", unit)
    assert np.max(np.abs(conjugate(conjugate(p)).samples - p.samples)) <= 1e-12
    with pytest.raises(ValueError):
        conjugate(ExponentFunction.constant(unit, 0.9))


def test_fractional_target(unit):
    q = fractional_target(ExponentFunction.constant(unit, 4 / 3), 0.5, 1)
    assert np.allclose(q.samples, 4.0)
    with pytest.raises(ValueError):
        fractional_target(ExponentFunction.constant(unit, 2.0), 0.5, 1)


def test_holder_oracles(line):
    p = ExponentFunction.constant(line, 2.0)
    f = GridFunction.indicator(line, Cube((0.0,), 1.0))
    lhs, rhs = holder_pairing(f, f, p)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(2.0)
    g = GridFunction.indicator(line, Cube((2.0,), 1.0))
    assert holder_pairing(f, g, p)[0] == 0.0


def test_holder_random():
    sp = GridSpec.cube(1, -2, 2, 1 / 32)
    p = parse_exponent("pw:1.5;-1,1=3;0.5,1=2", sp)
    for seed in range(500):
        r = np.random.default_rng(seed)
        f = GridFunction(sp, np.repeat(r.normal(size=16), sp.shape[0] // 16))
        g = GridFunction(sp, np.repeat(r.normal(size=8), sp.shape[0] // 8))
        lhs, rhs = holder_pairing(f, g, p)
        assert lhs <= rhs * (1 + 1e-12)


def test_lh_constant_exponent(line):
    assert lh_constants(ExponentFunction.constant(line, 2.0)) == (0.0, 0.0, 2.0)


def test_lh_decay_constant(line):
    p = ExponentFunction.from_profile(line, lambda sp: 2 + np.sin(sp.mesh()[0]) ** 2 / np.log(math.e + sp.radius()))
    assert lh_constants(p)[1] <= 1 + 1e-3


def test_jump_is_not_log_holder():
    sp = GridSpec.cube(1, -4, 4, 1 / 128)
    assert not is_log_holder(parse_exponent("pw:2;0,1=3", sp))
    assert is_log_holder(parse_exponent("ramp:0.5;2;0,1=3", sp))
    assert is_log_holder(parse_exponent("log:1.5,1", sp))
    assert is_log_holder(parse_exponent("const:1.7", sp))


def test_parse_exponent_2d():
    sp = GridSpec.cube(2, -2, 2, 1 / 16)
    p = parse_exponent("pw:2;0,0,1=3", sp)
    assert p.samples[sp.index_of((0.5, 0.5))] == 3.0 and p.samples[sp.index_of((-1, -1))] == 2.0
    with pytest.raises(ValueError):
        parse_exponent("pw:2;0,1=3", sp)


def test_resample_uses_profile(line):
    p = parse_exponent("log:1,1", line)
    fine = p.resample(line.refine(2))
    assert fine.spec.spacing == line.spacing / 2 and fine.name == p.name
