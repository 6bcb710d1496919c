import numpy as np
import pytest

from hardybound import cli
from hardybound.grid import Cube, GridFunction, GridSpec, load, save


@pytest.fixture
def chi(tmp_path):
    sp = GridSpec.cube(1, -4, 4, 1 / 64)
    path = tmp_path / "f.grid"
    save(GridFunction.indicator(sp, Cube((0.0,), 1.0)), path)
    return path


def test_constant_prints_levels(capsys):
    assert cli.main(["constant", "--class", "ap", "--p", "2", "--weight", "power:0.5", "--levels", "3",
                     "--box", "1", "--h", "0.0078125"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "level,spacing,value" and len(out) == 4


def test_norm(chi, capsys):
    assert cli.main(["norm", "--input", str(chi), "--p", "2"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1.0)
    assert cli.main(["norm", "--input", str(chi), "--exponent", "const:3"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1.0)


@pytest.mark.parametrize("kind", ["hilbert", "potential", "maximal"])
def test_operator(chi, tmp_path, kind):
    out = tmp_path / "Tf.grid"
    assert cli.main(["operator", "--kind", kind, "--alpha", "0.5", "--input", str(chi), "--out", str(out)]) == 0
    assert np.all(np.isfinite(load(out).samples))


def test_rubio_check(capsys):
    code = cli.main(["rubio", "--exponent", "const:2", "--h", "indicator:0,1", "--kmax", "12", "--check"])
    lines = capsys.readouterr().out.splitlines()
    assert code == 0 and lines[0].startswith("#") and lines[1] == "property,value,bound,verdict"
    assert all(l.endswith("pass") for l in lines[2:])


def test_run_rejects(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("checks:\n  - {target: L4.9, p: 1, q: 3, alpha: 0.5}\n")
    assert cli.main(["run", str(cfg)]) == 2
    assert "1/q = 1/p - alpha/n" in capsys.readouterr().err


def test_run_empty(tmp_path):
    cfg = tmp_path / "empty.yaml"
    cfg.write_text("")
    assert cli.main(["run", str(cfg), "--output", str(tmp_path / "r")]) == 0
