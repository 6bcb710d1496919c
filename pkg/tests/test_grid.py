import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardybound.grid import (Cube, GridError, GridFunction, GridSpec, MollifierSpec, cube_average, default_t_grid,
                             dilate, double_star, dumps, from_csv, integrate, load, loads, mollify, sample_at,
                             save, star, to_csv)


def test_integrate_constant_exact(unit):
    assert integrate(GridFunction.constant(unit, 1.0)) == pytest.approx(1.0, abs=1e-14)


def test_integrate_indicator(unit):
    f = GridFunction.indicator(unit, Cube((0.0,), 0.5))
    assert abs(integrate(f) - 0.5) <= unit.spacing


def test_integrate_identity(unit):
    f = GridFunction.from_callable(unit, lambda x: x)
    assert integrate(f) == pytest.approx(0.5, abs=1e-5)


def test_cube_average_oracles(line):
    Q = Cube((0.0,), 1.0)
    assert cube_average(GridFunction.constant(line, 3.5), Q) == pytest.approx(3.5)
    assert abs(cube_average(GridFunction.from_callable(line, lambda x: x), Q) - 0.5) <= line.spacing
    assert abs(cube_average(GridFunction.indicator(line, Q), Cube((0.0,), 2.0)) - 0.5) <= line.spacing


def test_dilate_and_star():
    Q = Cube((0.0,), 1.0)
    D = dilate(Q, 3)
    assert D.corner == pytest.approx((-1.0,)) and D.side == pytest.approx(3.0)
    S = star(Q)
    assert S.corner == pytest.approx((-0.5,)) and S.side == pytest.approx(2.0)
    Q2 = Cube((0.0, 0.0), 1.0)
    S2 = star(Q2)
    assert S2.side == pytest.approx(2 * math.sqrt(2))
    assert np.allclose(S2.center, Q2.center)
    assert double_star(Q).side == pytest.approx(4.0)


@given(st.floats(0.1, 5), st.floats(0.1, 5))
def test_dilate_composes(a, b):
    Q = Cube((0.25, -1.0), 0.5)
    lhs, rhs = dilate(dilate(Q, a), b), dilate(Q, a * b)
    assert lhs.side == pytest.approx(rhs.side, rel=1e-14)
    assert np.allclose(lhs.center, rhs.center, atol=1e-13)


def test_mollify_oracles(line):
    phi = MollifierSpec(1)
    one = mollify(GridFunction.constant(line, 1.0), phi, 0.5)
    assert np.allclose(one.samples[np.abs(line.mesh()[0]) < 7], 1.0, atol=1e-6)
    ind = mollify(GridFunction.indicator(line, Cube((0.0,), 1.0)), phi, 1 / 8)
    assert sample_at(ind, (0.5,)) == pytest.approx(1.0, abs=1e-6)
    lin = mollify(GridFunction.from_callable(line, lambda x: x), phi, 1 / 8)
    i = line.index_of((0.5,))
    assert lin.samples[i] == pytest.approx(line.mesh()[0][i], abs=1e-4)


def test_mollify_preserves_sign(line, rng):
    f = GridFunction(line, rng.uniform(0, 1, line.shape))
    assert mollify(f, MollifierSpec(1), 0.25).samples.min() >= 0


def test_mollifier_normalized_2d():
    sp = GridSpec.cube(2, -2, 2, 1 / 32)
    k = MollifierSpec(2).sampled_kernel(sp, 0.5)
    assert k.sum() * sp.cell_volume == pytest.approx(1.0, rel=1e-3)


def test_integrate_monotone(unit, rng):
    f = rng.uniform(-1, 1, unit.shape)
    g = f + rng.uniform(0, 1, unit.shape)
    assert integrate(GridFunction(unit, f)) <= integrate(GridFunction(unit, g))


def test_average_within_range(line, rng):
    f = GridFunction(line, rng.normal(size=line.shape))
    Q = Cube((-1.0,), 2.0)
    vals = f.samples[Q.slices(line)]
    assert vals.min() <= cube_average(f, Q) <= vals.max()


def test_t_grid_is_dyadic():
    ts = default_t_grid(1 / 64)
    assert ts[0] == 2.0 and min(ts) == pytest.approx(2 / 64)
    assert all(a / b == 2 for a, b in zip(ts, ts[1:]))


def test_binary_roundtrip(tmp_path, rng):
    sp = GridSpec.cube(2, -1, 1, 1 / 8)
    f = GridFunction(sp, rng.normal(size=sp.shape))
    assert np.array_equal(loads(dumps(f)).samples, f.samples)
    save(f, tmp_path / "f.grid")
    g = load(tmp_path / "f.grid")
    assert g.spec == sp and np.array_equal(g.samples, f.samples)


def test_csv_roundtrip(rng):
    sp = GridSpec.cube(1, 0, 1, 1 / 16)
    f = GridFunction(sp, rng.normal(size=sp.shape))
    assert np.array_equal(from_csv(to_csv(f), sp).samples, f.samples)


def test_spec_rejects_misaligned_spacing():
    with pytest.raises(GridError):
        GridSpec.cube(1, 0, 1, 0.3)
    with pytest.raises(GridError):
        GridSpec.cube(3, 0, 1, 0.5)


def test_refine_halves_spacing(line):
    fine = line.refine(2)
    assert fine.spacing == line.spacing / 2 and fine.shape == (2 * line.shape[0],)
