import numpy as np
import pytest

from hardybound.grid import Cube, GridFunction, GridSpec
from hardybound.operators import hl_maximal
from hardybound.rubio import (IterationConfig, check_iteration_properties, estimate_maximal_opnorm, iterate,
                              parse_h, tail_bound)
from hardybound.varlebesgue import ExponentFunction, luxemburg_norm, parse_exponent
from hardybound.weights import a1_constant, default_family


@pytest.fixture(scope="module")
def box():
    return GridSpec.cube(1, -4.0, 4.0, 1 / 64)


@pytest.fixture(scope="module")
def r2(box):
    return ExponentFunction.constant(box, 2.0)


def test_opnorm_estimate(box, r2):
    est = estimate_maximal_opnorm(r2, seed=0)
    assert 1.5 <= est.B <= 10
    assert est.B == estimate_maximal_opnorm(r2, seed=0).B
    chi = GridFunction.indicator(box, Cube((0.0,), 1.0))
    single = estimate_maximal_opnorm(r2, family=[chi])
    ratio = luxemburg_norm(hl_maximal(chi), r2) / luxemburg_norm(chi, r2)
    assert single.max_ratio == ratio and single.B == pytest.approx(1.5 * ratio)
    with pytest.raises(ValueError):
        estimate_maximal_opnorm(ExponentFunction.constant(box, 1.0))


def test_iterate_geometric_series(box):
    cfg = IterationConfig(B=2.5)
    Rh = iterate(GridFunction.constant(box, 1.0), cfg)
    q = 1 / (2 * cfg.B)
    expected = (1 - q ** (cfg.kMax + 1)) / (1 - q)
    assert np.allclose(Rh.samples, expected, atol=1e-10)


def test_iterate_trivial_cases(box):
    assert not np.any(iterate(GridFunction.zeros(box), IterationConfig()).samples)
    chi = GridFunction.indicator(box, Cube((0.0,), 1.0))
    cfg = IterationConfig(kMax=1, B=3.0)
    assert np.array_equal(iterate(chi, cfg).samples, chi.samples + hl_maximal(chi).samples / 6.0)


def test_iterate_homogeneous_and_monotone(box, rng):
    cfg = IterationConfig(B=2.0)
    h1 = GridFunction(box, rng.uniform(0, 1, box.shape))
    h2 = h1 + GridFunction(box, rng.uniform(0, 1, box.shape))
    assert np.allclose(iterate(h1 * 3.0, cfg).samples, 3.0 * iterate(h1, cfg).samples, rtol=1e-14)
    assert np.all(iterate(h1, cfg).samples <= iterate(h2, cfg).samples)
    assert np.all(iterate(h1, cfg).samples >= h1.samples)


def test_tail_bound(box, r2):
    h = GridFunction.indicator(box, Cube((0.0,), 1.0))
    assert tail_bound(h, IterationConfig(), r2) == pytest.approx(2.0 ** -12)


def test_properties_indicator(box, r2):
    B = estimate_maximal_opnorm(r2).B
    h, prof = parse_h("indicator:0,1", box)
    rep = check_iteration_properties(h, IterationConfig(B=B), r2, profile=prof)
    assert rep.passed, rep.rows


def test_constant_h_gives_a1_one(box, r2):
    cfg = IterationConfig(B=2.0)
    Rh = iterate(GridFunction.constant(box, 1.0), cfg)
    from hardybound.weights import Weight
    assert a1_constant(Weight(Rh), default_family(box, 50)) == pytest.approx(1.0, abs=1e-12)


def test_spike(box, r2):
    B = estimate_maximal_opnorm(r2).B
    h, _ = parse_h("spike:0.5,1000", box)
    rep = check_iteration_properties(h, IterationConfig(B=B), r2)
    rows = {name: ok for name, _, _, ok in rep.rows}
    assert rows["max(h-Rh)"] and rows["norm"]


def test_report_csv(box, r2):
    h, _ = parse_h("one", box)
    rep = check_iteration_properties(h, IterationConfig(B=2.0), r2)
    text = rep.to_csv()
    assert text.startswith("property,value,bound,verdict\r\n") and text.count("\r\n") == len(rep.rows) + 1


def test_parse_h_2d():
    sp = GridSpec.cube(2, -2, 2, 1 / 16)
    h, prof = parse_h("indicator:0,0,1", sp)
    assert h.samples.sum() * sp.cell_volume == pytest.approx(1.0)
    with pytest.raises(ValueError):
        parse_h("gauss:1", sp)


def test_config_validation():
    with pytest.raises(ValueError):
        IterationConfig(kMax=0)
    with pytest.raises(ValueError):
        IterationConfig(B=1.0)
