from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kamstab import cli, io, models, spectral, symmetry
from kamstab.errors import ConfigError, ParseError

from conftest import seeds


@given(seed=seeds, dim=st.integers(1, 6))
def test_matrix_json_round_trip(seed, dim):
    A = models.complex_gaussian(models.rng_for(seed), (dim, dim))
    assert np.array_equal(io.matrix_from_json(json.loads(json.dumps(io.matrix_to_json(A)))), A)


def test_matrix_file_round_trip(tmp_path):
    A = models.random_hermitian(4, 0)
    io.write_matrix_file(tmp_path / "a.json", A)
    assert np.array_equal(io.parse_matrix_file(tmp_path / "a.json"), A)


@pytest.mark.parametrize("obj", [
    {"dim": 2, "data": [[[1, 0], [0, 0]], [[0, 0]]]},
    {"dim": 2, "data": [[[1, 0], [0, 0]]]},
    {"dim": 1, "data": [[[math.nan, 0]]]},
    {"dim": 1, "data": [[["a", 0]]]},
    {"data": [[[1, 0]]]},
    [[1]],
])
def test_matrix_parse_errors(obj):
    with pytest.raises(ParseError):
        io.matrix_from_json(obj)


def test_parse_matrix_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError, match="line 1"):
        io.parse_matrix_file(bad)
    with pytest.raises(ParseError):
        io.parse_matrix_file(tmp_path / "missing.json")


def test_decomposition_json_is_serialisable():
    res = spectral.resolve(models.heisenberg_chain(3))
    dec = symmetry.decompose_observable(res, models.random_hermitian(8, 1))
    obj = {"r": io.resolution_to_json(res), "d": io.decomposition_to_json(dec)}
    json.dumps(obj)
    assert obj["r"]["d"] == res.d


def _manifest(path):
    return json.loads((path / "manifest.json").read_text())


def test_cli_bounds_values(tmp_path):
    out = tmp_path / "b"
    code = cli.main(["bounds", "--out", str(out), "--set", "bounds.d=2", "--set", "bounds.eta=2",
                     "--set", "bounds.normV=1", "--set", "epsilon=0.1"])
    assert code == 0
    b = json.loads((out / "bounds.json").read_text())
    assert b["zeno_a"] == pytest.approx(2 * math.sqrt(2) * 0.1 / 2)
    assert b["delta_hat_inf"] == pytest.approx(2 * math.sqrt(2) * ((1 - 0.2) ** -0.25 - 1))
    assert b["linear_bound"] == pytest.approx(7 * math.sqrt(2) * 0.1 / 2)
    assert _manifest(out)["status"] == "ok"


def test_cli_config_errors(tmp_path, capsys):
    assert cli.main(["bounds", "--out", str(tmp_path), "--set", "epsilon=-1"]) == 2
    assert cli.main(["evolve", "--out", str(tmp_path), "--set", "system=nonsense"]) == 2
    assert cli.main(["evolve", "--out", str(tmp_path), "--set", "nosuchkey=1"]) == 2
    bad = tmp_path / "cfg.json"
    bad.write_text("[")
    assert cli.main(["evolve", "--config", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_bad_matrix_path_is_config_error(tmp_path):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"dim": 2, "data": [[[1, 0]]]}))
    assert cli.main(["decompose", "--out", str(tmp_path / "o"), "--set", f"system={m}",
                     "--set", "observable=two-level"]) == 2


def test_cli_computation_error_exit_code(tmp_path):
    # an all-ones coupling far past the gap scrambles the levels of diag(0, 1, 2)
    io.write_matrix_file(tmp_path / "h.json", np.diag([0.0, 1.0, 2.0]))
    io.write_matrix_file(tmp_path / "v.json", np.ones((3, 3)))
    out = tmp_path / "o"
    code = cli.main(["kam", "--out", str(out), "--set", f"system={tmp_path / 'h.json'}",
                     "--set", f"perturbation={tmp_path / 'v.json'}", "--set", "epsilon=100"])
    assert code == 1
    assert _manifest(out)["status"] == "error"


def test_cli_evolve_is_reproducible(tmp_path):
    args = ["evolve", "--set", "system=gue:dim=4", "--set", "perturbation=gue:dim=4", "--set", "observable=gue:dim=4",
            "--set", "state=random", "--set", "grid.points=200", "--set", "epsilon=0.05", "--seed", "7"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("divergence_zeno.csv", "divergence_resummed.csv", "observable_drift.csv", "expectation.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    man = _manifest(tmp_path / "a")
    assert man["config"]["seed"] == 7 and "divergence_zeno.csv" in man["artifacts"]


def test_cli_decompose_fragile(tmp_path):
    assert cli.main(["decompose", "--out", str(tmp_path), "--set", "system=fragile"]) == 0
    out = json.loads((tmp_path / "decomposition.json").read_text())
    assert out["class"] == "Fragile"


def test_cli_lindblad_demo(tmp_path):
    assert cli.main(["lindblad-demo", "--out", str(tmp_path), "--set", "grid.points=100"]) == 0
    assert (tmp_path / "monotone_robust_perturbed.csv").exists()
    assert "robust" in _manifest(tmp_path)["summary"]


def test_config_validation():
    cfg = cli.ExperimentConfig(experiment="evolve")
    cfg.validate()
    with pytest.raises(ConfigError):
        cli.ExperimentConfig(experiment="nope").validate()
    with pytest.raises(ConfigError):
        cli.build_operator("pauli:N=2,ops=0q", "system", 0)
