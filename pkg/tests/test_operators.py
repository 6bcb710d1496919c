import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardybound.atoms import make_atom
from hardybound.grid import Cube, GridFunction, GridSpec, MollifierSpec, sample_at
from hardybound.operators import (KernelError, KernelSpec, OperatorParams, apply_T_to_atom, frac_maximal,
                                  hilbert_transform, hl_maximal, maximal_of_cube, phi_domination_constant,
                                  radial_maximal, riesz_potential, singular_integral, smoothed_kernel,
                                  tail_bound_check)

Q01 = Cube((0.0,), 1.0)


@pytest.fixture(scope="module")
def fine():
    return GridSpec.cube(1, -8.0, 8.0, 1 / 512)


def test_maximal_constant_and_indicator(line):
    c = GridFunction.constant(line, -2.5)
    assert np.allclose(hl_maximal(c).samples, 2.5)
    m = hl_maximal(GridFunction.indicator(line, Q01))
    assert sample_at(m, (2.0,)) == pytest.approx(0.5, abs=4 * line.spacing)
    assert sample_at(m, (4.0,)) == pytest.approx(0.25, abs=4 * line.spacing)


def test_fractional_maximal(line):
    chi = GridFunction.indicator(line, Q01)
    assert np.array_equal(frac_maximal(chi, 0.0).samples, hl_maximal(chi).samples)
    assert sample_at(frac_maximal(chi, 0.5), (4.0,)) == pytest.approx(0.5, abs=0.01)
    assert sample_at(frac_maximal(chi, 0.5), (0.5,)) == pytest.approx(1.0, abs=0.01)
    assert np.allclose(maximal_of_cube(line, Q01, 0.5).samples, frac_maximal(chi, 0.5).samples)


def test_maximal_sublinear_and_homogeneous(line, rng):
    f = GridFunction(line, rng.normal(size=line.shape))
    g = GridFunction(line, rng.normal(size=line.shape))
    assert np.all(hl_maximal(f + g).samples <= hl_maximal(f).samples + hl_maximal(g).samples + 1e-12)
    assert np.array_equal(hl_maximal(f * 4.0).samples, 4.0 * hl_maximal(f).samples)
    assert np.array_equal(frac_maximal(f * 0.5, 0.3).samples, 0.5 * frac_maximal(f, 0.3).samples)


def test_maximal_2d_constant():
    sp = GridSpec.cube(2, -1, 1, 1 / 16)
    assert np.allclose(hl_maximal(GridFunction.constant(sp, 3.0)).samples, 3.0)


def test_riesz_potential_oracles(fine):
    I = riesz_potential(GridFunction.indicator(fine, Q01), 0.5)
    assert sample_at(I, (2.0,)) == pytest.approx(2 * (math.sqrt(2) - 1), rel=0.02)
    assert np.all(I.samples >= 0)


def test_riesz_potential_far_value():
    sp = GridSpec.cube(1, -12.0, 12.0, 1 / 256)
    I = riesz_potential(GridFunction.indicator(sp, Q01), 0.5)
    i = sp.index_of((9.0,))
    x = sp.mesh()[0][i]
    assert I.samples[i] == pytest.approx(2 * (math.sqrt(x) - math.sqrt(x - 1)), rel=0.01)


def test_riesz_potential_linear(line, rng):
    f = GridFunction(line, rng.normal(size=line.shape) * (np.abs(line.mesh()[0]) < 2))
    g = GridFunction(line, rng.normal(size=line.shape) * (np.abs(line.mesh()[0]) < 2))
    lhs = riesz_potential(f * 2.0 + g * -3.0, 0.4).samples
    rhs = 2.0 * riesz_potential(f, 0.4).samples - 3.0 * riesz_potential(g, 0.4).samples
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


def test_hilbert_oracles(fine):
    f = GridFunction.indicator(fine, Cube((-1.0,), 2.0))
    H = hilbert_transform(f)
    assert sample_at(H, (3.0,)) == pytest.approx(math.log(2) / math.pi, rel=0.02)
    i = fine.index_of((0.0,))
    assert abs(H.samples[i]) < 0.01


def test_hilbert_symmetric_input_cancels(line):
    # odd kernel against an input even about x0
    x0 = line.mesh()[0][line.index_of((1.0,))]
    f = GridFunction.from_callable(line, lambda x: np.exp(-((x - x0) ** 2)))
    assert abs(hilbert_transform(f).samples[line.index_of((1.0,))]) < 1e-12


def test_hilbert_near_isometry(fine):
    f = GridFunction.from_callable(fine, lambda x: np.exp(-x * x) * np.cos(3 * x))
    r = np.linalg.norm(hilbert_transform(f).samples) / np.linalg.norm(f.samples)
    assert 0.9 <= r <= 1.0


def test_riesz_kernel_transform_2d():
    sp = GridSpec.cube(2, -2, 2, 1 / 16)
    f = GridFunction.from_callable(sp, lambda x, y: np.exp(-4 * (x * x + y * y)))
    R = singular_integral(f, KernelSpec.riesz(0))
    # odd in x, even in y
    assert np.allclose(R.samples, -R.samples[::-1, :], atol=1e-12)
    assert np.allclose(R.samples, R.samples[:, ::-1], atol=1e-12)


def test_smoothed_kernel_far_field():
    K, phi = KernelSpec.hilbert(), MollifierSpec(1)
    Kt = smoothed_kernel(K, phi, 0.25)
    for x in (2.5, 4.0, 8.0):
        assert Kt.value((x,)) == pytest.approx(1 / (math.pi * x), rel=0.05)


def test_smoothed_power_kernel_uniform_bound():
    K, phi = KernelSpec.power(0.5, 1), MollifierSpec(1)
    xs = np.geomspace(1e-3, 50, 200)
    B = [np.max(smoothed_kernel(K, phi, t)(xs[:, None]) * xs ** 0.5) for t in (0.25, 0.5, 1.0)]
    assert max(B) <= 2 * min(B)


def test_radial_maximal_constant_and_cube(line):
    M = radial_maximal(GridFunction.constant(line, -1.5))
    assert np.allclose(M.samples[np.abs(line.mesh()[0]) < 4], 1.5, atol=1e-6)
    chi = GridFunction.indicator(line, Cube((-1.0,), 2.0))
    assert sample_at(radial_maximal(chi), (0.0,)) == pytest.approx(1.0, abs=1e-6)


def test_radial_dominated_by_maximal(line):
    C = phi_domination_constant(line, MollifierSpec(1))
    for seed in range(10):
        r = np.random.default_rng(seed)
        g = GridFunction(line, r.normal(size=line.shape) * (np.abs(line.mesh()[0]) < 3))
        assert np.all(radial_maximal(g).samples <= C * hl_maximal(g).samples * (1 + 1e-9) + 1e-12)


def test_atom_tail_hilbert():
    ratios = []
    for h in (1 / 128, 1 / 256):
        sp = GridSpec.cube(1, -8, 8, h)
        x = sp.mesh()[0]
        raw = GridFunction(sp, np.where((x >= 0) & (x < 0.5), 1.0, 0.0) - np.where((x >= 0.5) & (x < 1), 1.0, 0.0))
        a = make_atom(raw, Q01, 0)
        Ta = hilbert_transform(a.samples)
        pts = [(v,) for v in np.linspace(2, 7, 11)]
        ratios.append(tail_bound_check(Ta, Q01, 0, 0.0, pts).max())
    assert np.isfinite(ratios).all() and abs(ratios[1] / ratios[0] - 1) < 0.1


def test_atom_tail_power():
    sp = GridSpec.cube(1, -12, 12, 1 / 256)
    x = sp.mesh()[0]
    raw = GridFunction(sp, np.where((x >= 0) & (x < 0.5), 1.0, 0.0) - np.where((x >= 0.5) & (x < 1), 1.0, 0.0))
    a = make_atom(raw, Q01, 0)
    v = tail_bound_check(riesz_potential(a.samples, 0.5), Q01, 0, 0.5, [(2.0,), (4.0,), (8.0,)])
    assert v.max() / v.min() < 2.0


def test_zero_atom_image():
    sp = GridSpec.cube(1, -4, 4, 1 / 64)

    class Zero:
        samples = GridFunction.zeros(sp)
        Q = Q01
        N = 0

    res = apply_T_to_atom(Zero, KernelSpec.hilbert())
    assert np.all(res.Ta.samples == 0) and res.sup_ratio == 0.0


def test_operator_params():
    p = OperatorParams(0.5, 1, 1)
    assert p.tau == pytest.approx(3.0)
    assert p.alpha_tau == pytest.approx(0.5 / 3.0)


def test_kernel_rejects_bad_declarations():
    with pytest.raises(KernelError):
        KernelSpec.power(1.5, 1)
    with pytest.raises(KernelError):
        KernelSpec("hilbert", 2)
    with pytest.raises(KernelError):
        KernelSpec.nonconv(lambda x, y: 1.0 / (x - y)[..., 0], 1, C=1e-3)


def test_modulated_kernel():
    K = KernelSpec.modulated(KernelSpec.hilbert())
    assert K(np.array([[3.0]]), np.array([[1.0]]))[0] == pytest.approx((1 + 0.5 * math.sin(3.0)) / (2 * math.pi))
    assert not K.is_convolution
