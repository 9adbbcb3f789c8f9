import json
import math
import subprocess
import sys

import numpy as np
import pytest

from tripartite import beamsplitter as bs
from tripartite.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from tripartite.output import read_csv


def run_to(tmp_path, name, *argv):
    out = tmp_path / name
    code = main(list(argv) + ["--output", str(out)])
    return code, out


def test_bs_closed_columns_and_values(tmp_path):
    code, out = run_to(tmp_path, "bs.csv", "bs-closed", "--mu", "0.6666666666666666", "--nu", "0.5",
                       "--sweep", "r", "0", "3", "31")
    assert code == EXIT_OK
    text = out.read_text()
    assert text.startswith("# tripartite")
    assert "exp(-r)" in text and "vacuum variance 1" in text
    cols, data = read_csv(text)
    assert cols == ["r", "mu", "nu", "v12", "v13", "v23", "epr_one", "epr_two", "duan_bs1"]
    cf = bs.closed_form_suite(data[:, 0])
    np.testing.assert_allclose(data[:, 3], cf["vlf"], rtol=1e-10)
    np.testing.assert_allclose(data[:, 6], cf["epr_one"], rtol=1e-10)
    np.testing.assert_allclose(data[:, 7], cf["epr_two"], rtol=1e-10)
    np.testing.assert_allclose(data[:, 8], cf["duan_bs1"], rtol=1e-10)


def test_csv_round_trip_exact(tmp_path):
    _, out = run_to(tmp_path, "u.csv", "undepleted", "--sweep", "tau", "0", "2", "7")
    _, data = read_csv(out.read_text())
    from tripartite.undepleted import v3_closed

    assert [float(x) for x in v3_closed(data[:, 0])] == list(data[:, -1])


def test_json_output(tmp_path):
    code, out = run_to(tmp_path, "r.json", "bs-closed", "--r", "0.5")
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["provenance"]["version"]
    assert doc["results"][0]["v12"] == pytest.approx(5 * math.exp(-0.5))
    assert doc["report"]["tripartite_confirmed"]["vlf"] is True
    assert set(doc["report"]["epr_two_mode"]) == {"0", "1", "2"}


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"tau": 0.25, "format": "json"}))
    _, out = run_to(tmp_path, "a.out", "undepleted", "--config", str(cfg))
    assert json.loads(out.read_text())["results"][0]["tau"] == 0.25
    _, out = run_to(tmp_path, "b.out", "undepleted", "--config", str(cfg), "--tau", "0.75")
    assert json.loads(out.read_text())["results"][0]["tau"] == 0.75


@pytest.mark.parametrize("doc", [{"tau": 0.1, "bogus": 1}, {"tau": "abc"}, [1, 2]])
def test_bad_config_rejected(tmp_path, doc):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(doc))
    assert main(["undepleted", "--config", str(cfg)]) == EXIT_CONFIG


@pytest.mark.parametrize("argv", [
    ["undepleted", "--sweep", "tau", "0", "1", "1"],
    ["undepleted", "--sweep", "tau", "0", "inf", "5"],
    ["undepleted", "--sweep", "r", "0", "1", "5"],
    ["bs-closed", "--mu", "1.5"],
    ["bs-closed", "--nonsense", "1"],
    ["positive-p", "--traj", "1"],
    ["opo", "--omega-grid", "0", "1", "x"],
])
def test_config_errors_exit_one(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_singular_drift_exit_two(capsys):
    assert main(["intracavity", "--pump-ratio", "1.0", "--omega-grid", "0", "1", "3"]) == EXIT_NUMERIC


def test_intracavity_sweep_masks_band(tmp_path):
    code, out = run_to(tmp_path, "ic.csv", "intracavity", "--sweep", "pump-ratio", "0.9", "1.1", "11",
                       "--omega-grid", "0", "5", "6")
    assert code == EXIT_OK
    cols, data = read_csv(out.read_text())
    flag = data[:, cols.index("near_threshold")] == 1
    assert flag.any() and not flag.all()
    assert np.isnan(data[flag, cols.index("v12")]).all()
    assert np.isfinite(data[~flag, cols.index("v12")]).all()


def test_opo_and_bs_spectral(tmp_path):
    _, out = run_to(tmp_path, "o.csv", "opo", "--gamma-a", "1", "--gamma-b", "1", "--kappa", "0.01",
                    "--pump-ratio", "0.5", "--omega-grid", "0", "1", "3")
    cols, data = read_csv(out.read_text().replace("below", "0"))
    assert data[0, cols.index("s_x")] == pytest.approx(9.0)
    _, out = run_to(tmp_path, "s.csv", "bs-spectral", "--gamma-a", "1", "--gamma-b", "1", "--kappa", "0.01",
                    "--pump-ratio", "0.5", "--omega-grid", "0", "1", "3")
    cols, data = read_csv(out.read_text())
    assert data[0, cols.index("v12")] == pytest.approx(5 / 9)


def test_positive_p_small(tmp_path):
    code, out = run_to(tmp_path, "p.csv", "positive-p", "--traj", "128", "--batches", "4",
                       "--points", "3", "--zeta-max", "0.05", "--seed", "9")
    assert code == EXIT_OK
    cols, data = read_csv(out.read_text())
    assert {"v3", "v3_err", "epr_one_err", "epr_two_err", "v3_undepleted"} <= set(cols)
    assert data[0, cols.index("v3")] == 5.0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tripartite", "bs-closed", "--r", "0"],
                         capture_output=True, text=True, check=True)
    assert "r,mu,nu" in res.stdout
