import json
import subprocess
import sys

import numpy as np
import pytest

from ringheom.cli import main
from ringheom.io import read_csv


def run(args, tmp_path, name):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    return code, out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_equilibrium_cl_writes_gaussian(tmp_path):
    code, out = run(["equilibrium", "--model", "cl", "--flux", "1"], tmp_path, "eq")
    assert code == 0
    header, data = read_csv(out / "pdist.csv")
    assert header == ["n_or_p", "value", "gaussian"]
    assert np.linalg.norm(data[:, 1] - data[:, 2]) / np.linalg.norm(data[:, 2]) < 1e-3
    m = manifest(out)
    assert m["status"] == "ok" and m["config"]["flux"] == [1.0]
    assert m["wall_time"] > 0 and "version" in m


def test_equilibrium_risb_per_flux_files(tmp_path):
    code, out = run(["equilibrium", "--flux", "0,0.5", "--n-theta", "16"], tmp_path, "eq")
    assert code == 0
    assert (out / "pdist_000.csv").exists() and (out / "pdist_001.csv").exists()


def test_current_requires_hierarchy(tmp_path):
    code, out = run(["current", "--flux", "0.25"], tmp_path, "c")
    assert code == 1
    m = manifest(out)
    assert m["status"] == "failed" and "ConfigError" in m["error"]
    assert (out / "error.txt").exists()
    assert not (out / "current.csv").exists()


def test_current_override_flag(tmp_path):
    code, out = run(["current", "--flux", "0.25", "--allow-markovian", "--n-theta", "16"],
                    tmp_path, "c")
    assert code == 0
    # hot ring: the Markovian current is numerically zero
    assert abs(read_csv(out / "current.csv")[1][0, 1]) < 1e-6


def test_current_parallel_matches_serial(tmp_path):
    args = ["current", "--regime", "heom", "--eta", "0.001", "--beta", "2.5", "--K", "2",
            "--N", "2", "--n-max", "15", "--n-theta", "16", "--flux", "0.4,0.1,0.25"]
    _, a = run(args, tmp_path, "serial")
    _, b = run(args + ["--workers", "2"], tmp_path, "pool")
    assert (a / "current.csv").read_bytes() == (b / "current.csv").read_bytes()
    flux = read_csv(a / "current.csv")[1][:, 0]
    np.testing.assert_array_equal(flux, [0.1, 0.25, 0.4])


def test_kernel_check_deterministic(tmp_path):
    args = ["kernel-check", "--beta", "2.5", "--eta", "1", "--K-list", "0,2,4", "--M", "200"]
    _, a = run(args, tmp_path, "a")
    _, b = run(args, tmp_path, "b")
    assert (a / "kernel.csv").read_bytes() == (b / "kernel.csv").read_bytes()
    header, data = read_csv(a / "kernel.csv")
    assert header == ["K", "t", "re_pade", "im_pade", "re_matsubara", "abs_err"]
    err = [data[data[:, 0] == K, 5].max() for K in (0, 2, 4)]
    assert err[0] >= err[1] >= err[2]


def test_kernel_check_high_temperature_k0(tmp_path):
    _, out = run(["kernel-check", "--beta", "0.05", "--K-list", "0", "--M", "1000"],
                 tmp_path, "k")
    data = read_csv(out / "kernel.csv")[1]
    # t = 0 excluded: the exact real part diverges logarithmically there
    later = data[:, 1] > 0
    assert np.max(data[later, 5] / np.abs(data[later, 4])) < 1e-2


def test_converge_table(tmp_path):
    code, out = run(["converge", "--regime", "heom", "--eta", "0.001", "--beta", "2.5",
                     "--N-list", "2,4", "--K-list", "2", "--flux", "0.25", "--n-max", "15",
                     "--n-theta", "16"], tmp_path, "cv")
    assert code == 0
    header, data = read_csv(out / "convergence.csv")
    assert header == ["K", "N_trunc", "phi_bar", "current"]
    assert abs(data[1, 3] - data[0, 3]) < 1e-2 * abs(data[0, 3])


def test_converge_needs_hierarchy(tmp_path):
    code, _ = run(["converge", "--flux", "0.25"], tmp_path, "cv")
    assert code == 1


def test_spectrum_outputs(tmp_path):
    code, out = run(["spectrum", "--flux", "0", "--n-theta", "16", "--n-max", "21",
                     "--eta", "0.2", "--t-max", "40", "--dt", "0.1"], tmp_path, "sp")
    assert code == 0
    assert read_csv(out / "spectrum.csv")[0] == ["omega", "sigma"]
    t = read_csv(out / "r1.csv")[1][:, 0]
    assert t[-1] == pytest.approx(40.0)


def test_invalid_markovian_temperature_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["equilibrium", "--beta", "2.5", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ringheom.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "kernel-check" in res.stdout


def test_env_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("RINGHEOM_OUTPUT", str(tmp_path / "env"))
    assert main(["kernel-check", "--K-list", "1", "--M", "10"]) == 0
    assert (tmp_path / "env" / "kernel.csv").exists()
