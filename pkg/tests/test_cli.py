import json
import math

import pytest

from qdim.cli import main

from conftest import LOG23

E1_DOC = """{"domain": [0.0, 1.0], "kind": "similarity",
 "maps": [{"ratio": 0.3333333333333333, "offset": 0.0},
          {"ratio": 0.3333333333333333, "offset": 0.6666666666666666}],
 "potential": {"kind": "logweights", "weights": [0.5, 0.5]}}
"""

E3_DOC = """{"domain": [0.0, 1.0], "kind": "similarity",
 "infinite": {"family": "geometric", "ratio": 0.3333333333333333},
 "potential": {"kind": "logweights", "weights": {"family": "geometric", "ratio": 0.5}}}
"""

GAUSS_DOC = """{"domain": [0.0, 1.0], "kind": "gauss", "symbols": [1, 2], "K": 4.0,
 "potential": {"kind": "derivative", "s": 0.6, "g": "zero"}}
"""


@pytest.fixture()
def e1_spec(tmp_path):
    path = tmp_path / "e1.json"
    path.write_text(E1_DOC)
    return str(path)


@pytest.fixture()
def e3_spec(tmp_path):
    path = tmp_path / "e3.json"
    path.write_text(E3_DOC)
    return str(path)


def test_qdim_command(e1_spec, tmp_path, capsys):
    out = tmp_path / "qdim.json"
    assert main(["qdim", "--system", e1_spec, "--r", "2", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["q_r"] == pytest.approx(0.239812, abs=1e-6)
    assert report["kappa_r"] == pytest.approx(LOG23, abs=1e-8)
    assert report["D_r"] == report["kappa_r"]
    assert "system_digest" in report


def test_beta_command_at_one(e1_spec, capsys):
    assert main(["beta", "--system", e1_spec, "--q", "1.0"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert abs(report["beta"]) <= 1e-10


def test_beta_grid_csv(e1_spec, tmp_path):
    out = tmp_path / "beta.csv"
    assert main(["beta", "--system", e1_spec, "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "q,beta_q"
    assert len(rows) == 22
    q, b = map(float, rows[11].split(","))
    assert b == pytest.approx((1 - q) * LOG23, abs=1e-9)


def test_dimh_and_pressure_commands(e1_spec, capsys):
    assert main(["dimh", "--system", e1_spec]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["dim_h"] == pytest.approx(LOG23, abs=1e-9)
    assert main(["pressure", "--system", e1_spec, "--q", "0.5", "--t", "0.5"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["value"] == pytest.approx(0.5 * (math.log(2) - math.log(3)), abs=1e-12)


def test_sweep_command(e3_spec, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--system", e3_spec, "--r", "2", "--m-list", "1,2,4",
                 "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "M,kappa_rM"
    kappas = [float(r.split(",")[1]) for r in rows[1:]]
    assert kappas[0] == 0.0
    assert kappas == sorted(kappas)


def test_sample_command_roundtrip(e1_spec, tmp_path, capsys):
    out = tmp_path / "pts.csv"
    args = ["sample", "--system", e1_spec, "--samples", "500", "--seed", "3",
            "--out", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first
    sidecar = json.loads((tmp_path / "pts.csv.json").read_text())
    assert sidecar["count"] == 500 and sidecar["seed"] == 3


def test_figure1_matches_qdim(e1_spec, tmp_path, capsys):
    fig = tmp_path / "fig.csv"
    assert main(["figure1", "--system", e1_spec, "--r", "2", "--out", str(fig)]) == 0
    summary = json.loads(capsys.readouterr().out)
    out = tmp_path / "qdim.json"
    assert main(["qdim", "--system", e1_spec, "--r", "2", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert abs(summary["intercept"] - report["D_r"]) <= 1e-6
    header = fig.read_text().splitlines()[0]
    assert header == "q,beta,line,legendre_alpha,legendre_f"


def test_verify_deterministic_and_exit_codes(e1_spec, tmp_path, capsys):
    r1 = tmp_path / "v1.json"
    r2 = tmp_path / "v2.json"
    base = ["verify", "--system", e1_spec, "--r", "2", "--n-list", "4,16,64",
            "--samples", "20000", "--seed", "7"]
    assert main(base + ["--out", str(r1)]) == 0
    assert main(base + ["--out", str(r2)]) == 0
    assert r1.read_bytes() == r2.read_bytes()
    report = json.loads(r1.read_text())
    assert report["passed"] and report["relative_gap"] <= 0.15
    # an absurd tolerance forces the verification exit code
    capsys.readouterr()
    assert main(base + ["--tol", "1e-9"]) == 3


def test_quantize_command(e1_spec, tmp_path, capsys):
    out = tmp_path / "quant.csv"
    assert main(["quantize", "--system", e1_spec, "--r", "2", "--n-list", "2,4,8",
                 "--samples", "20000", "--seed", "5", "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "n,r,V_hat,e_hat,D_running"
    vs = [float(r.split(",")[2]) for r in rows[1:]]
    assert vs == sorted(vs, reverse=True)
    manifest = json.loads(capsys.readouterr().out)
    assert [run["n"] for run in manifest["runs"]] == [2, 4, 8]


def test_malformed_spec_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "martian"}')
    assert main(["qdim", "--system", str(bad), "--r", "2"]) == 1
    bad.write_text("not json")
    assert main(["qdim", "--system", str(bad), "--r", "2"]) == 1
    missing = tmp_path / "missing.json"
    assert main(["qdim", "--system", str(missing), "--r", "2"]) == 1


def test_numerical_failure_exits_two(e3_spec, tmp_path, capsys):
    # sampling a harshly truncated infinite measure without override
    out = tmp_path / "pts.csv"
    assert main(["sample", "--system", e3_spec, "--samples", "100", "--m", "3",
                 "--out", str(out)]) == 2


def test_gauss_spec_loads(tmp_path, capsys):
    path = tmp_path / "gauss.json"
    path.write_text(GAUSS_DOC)
    assert main(["dimh", "--system", str(path), "--m", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["dim_h"] == pytest.approx(0.5313, abs=0.01)
    # --depth steers the tree-summed estimate
    assert main(["dimh", "--system", str(path), "--m", "2", "--depth", "12"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["dim_h"] == pytest.approx(0.5313, abs=0.01)


def test_spec_contraction_override(tmp_path):
    from qdim.specio import load_spec
    path = tmp_path / "s.json"
    doc = json.loads(E1_DOC)
    doc["s"] = 0.5
    path.write_text(json.dumps(doc))
    system, _, _ = load_spec(path)
    assert system.s == 0.5
    doc["s"] = 0.1  # below the actual map ratios: rejected
    path.write_text(json.dumps(doc))
    with pytest.raises(Exception):
        load_spec(path)
