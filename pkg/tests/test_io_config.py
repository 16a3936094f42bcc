import json

import numpy as np
import pytest

from ringheom.cl import CLStack, make_cl_grid
from ringheom.config import ConfigError, RunConfig, load_config
from ringheom.grid import make_grid
from ringheom.hierarchy import enumerate_hierarchy, HierarchySpace
from ringheom.io import load_stack, read_csv, save_stack, write_csv, write_manifest
from ringheom.risb import ADOStack


def test_csv_round_trip_bit_exact(tmp_path, rng):
    x = rng.standard_normal((50, 3)) * 10.0 ** rng.integers(-300, 300, (50, 3))
    path = write_csv(tmp_path / "a" / "x.csv", ["a", "b", "c"], x)
    header, back = read_csv(path)
    assert header == ["a", "b", "c"]
    np.testing.assert_array_equal(back, x)


def test_risb_checkpoint_round_trip(tmp_path, rng):
    g = make_grid(4, 3)
    space = enumerate_hierarchy(0, 2)
    stack = ADOStack(rng.standard_normal((len(space),) + g.shape), g, space)
    meta = {"K": 0, "N_trunc": 2, "eta": 0.5, "flux_bar": 0.25}
    save_stack(tmp_path / "ck", stack, meta)
    back, m = load_stack(tmp_path / "ck")
    assert m == meta
    np.testing.assert_array_equal(back.values, stack.values)
    assert json.loads((tmp_path / "ck" / "manifest.json").read_text())["model"] == "risb"


def test_cl_checkpoint_round_trip(tmp_path, rng):
    g = make_cl_grid(8, 0.5, 4)
    space = HierarchySpace(2, 1)
    stack = CLStack(rng.standard_normal((len(space),) + g.shape), g, space)
    save_stack(tmp_path / "ck", stack)
    back, _ = load_stack(tmp_path / "ck")
    assert back.grid == g
    np.testing.assert_array_equal(back.values, stack.values)


def test_checkpoint_rejects_unknown(tmp_path):
    with pytest.raises(TypeError):
        save_stack(tmp_path, np.zeros(3))


def test_manifest_serializes_arrays(tmp_path):
    path = write_manifest(tmp_path, {"x": np.arange(3)})
    assert json.loads(path.read_text())["x"] == [0, 1, 2]


def test_defaults():
    cfg = load_config()
    assert (cfg.mass, cfg.radius, cfg.charge) == (0.5, 1.0, -1.0)
    assert (cfg.n_theta, cfg.n_max, cfg.cl_n_p, cfg.cl_dp) == (64, 31, 128, 0.25)
    assert cfg.ring().omega0 == 1.0


def test_ini_file_and_overrides(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\nmodel = cl\n[ring]\nflux = 0, 0.5 1\n[bath]\neta = 0.3\n"
                   "[spectrum]\ndamping = none\n")
    cfg = load_config(ini, {"eta": 0.7, "beta": None})
    assert cfg.model == "cl"
    assert cfg.flux == [0.0, 0.5, 1.0]
    assert cfg.eta == 0.7
    assert cfg.damping is None


@pytest.mark.parametrize("text", ["[run]\nfoo = 1\n", "[bath]\nmodel = cl\n"])
def test_ini_rejects_unknown_or_misplaced(tmp_path, text):
    ini = tmp_path / "bad.ini"
    ini.write_text(text)
    with pytest.raises(ConfigError):
        load_config(ini)


@pytest.mark.parametrize("kw", [{"model": "x"}, {"regime": "y"}, {"flux": []},
                                {"eta": -1.0}, {"closure": "open"}, {"workers": 0},
                                {"solver": "newton"}, {"steady_tol": 0.0}])
def test_validation(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw).validate()


def test_markovian_check():
    with pytest.raises(ConfigError):
        RunConfig(beta=2.5).check_markovian()
    RunConfig(beta=2.5, regime="heom").check_markovian()


def test_output_env(monkeypatch, tmp_path):
    monkeypatch.setenv("RINGHEOM_OUTPUT", str(tmp_path))
    assert RunConfig().resolved_output() == tmp_path
    assert RunConfig(output_dir="x").resolved_output().name == "x"
