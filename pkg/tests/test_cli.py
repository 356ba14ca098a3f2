import json
import math

import numpy as np
import pytest

from qpcocycle.cli import main
from qpcocycle.harness import (
    EXIT_ERROR,
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    OUTPUT_ENV,
    ConfigError,
    ExperimentConfig,
    read_config_file,
)
from qpcocycle.topology import weierstrass_surface, offset_grid


@pytest.fixture(autouse=True)
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "runs"))
    return tmp_path / "runs"


def summary(path):
    return json.loads((path / "summary.json").read_text())


def test_lyapunov_const_diag(outdir, capsys):
    code = main(["lyapunov", "--cocycle", "const-diag", "--n", "1000", "--phases", "3"])
    assert code == EXIT_OK
    echoed = json.loads(capsys.readouterr().out.splitlines()[0])
    assert echoed["params"]["n"] == 1000 and echoed["params"]["gap_tol"] == 0.05
    assert echoed["frequency"] is not None and echoed["output_dir"] == str(outdir / "lyapunov")
    doc = summary(outdir / "lyapunov")
    assert doc["exit_code"] == 0 and doc["config"] == echoed
    assert set(doc["provenance"]) >= {"qpcocycle", "numpy", "python"}
    rows = (outdir / "lyapunov" / "exponents.csv").read_text().splitlines()
    assert rows[0] == "index,exponent,stderr"
    assert float(rows[1].split(",")[1]) == pytest.approx(math.log(2), abs=1e-10)
    assert len((outdir / "lyapunov" / "per_phase.csv").read_text().splitlines()) == 4


def test_param_and_out_flags(tmp_path):
    out = tmp_path / "custom"
    code = main(["lyapunov", "--cocycle", "const-diag", "--param", "a=3", "--n", "200",
                 "--phases", "2", "--out", str(out)])
    assert code == EXIT_OK
    ex = summary(out)["result"]["exponents"]
    assert ex[0] == pytest.approx(math.log(3), abs=1e-10)


def test_dominate_exit_codes(outdir):
    assert main(["dominate", "--cocycle", "const-diag"]) == EXIT_OK
    v = json.loads((outdir / "dominate" / "verdict.json").read_text())
    assert v["verdict"] == "certified"
    assert main(["dominate", "--cocycle", "unitary-rotation", "--out", str(outdir / "u")]) == EXIT_OK
    assert summary(outdir / "u")["result"]["verdict"] == "refuted"
    assert (outdir / "u" / "gaps.csv").exists() and (outdir / "u" / "oscillation.csv").exists()


def test_sweep(outdir):
    code = main(["sweep", "--cocycle", "phase-diag", "--y", "0,0;0.05,0", "--schedule", "25,50,100"])
    assert code == EXIT_OK
    rows = (outdir / "sweep" / "sweep.csv").read_text().splitlines()
    assert rows[0] == "y1,y2,verdict,rate,gap_floor" and len(rows) == 3


def test_config_errors_exit_1(tmp_path, capsys):
    assert main(["lyapunov", "--cocycle", "nope"]) == EXIT_ERROR
    assert main(["lyapunov", "--cocycle", "const-diag", "--n", "10"]) == EXIT_ERROR
    assert main(["dominate", "--cocycle", "const-diag", "--k", "5"]) == EXIT_ERROR
    assert main(["lyapunov", "--cocycle", "const-diag", "--param", "zeta=1"]) == EXIT_ERROR
    assert main(["degree", "--file", str(tmp_path / "missing.csv")]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert "error" in err


def test_config_file_and_override(tmp_path, outdir):
    cfg = tmp_path / "run.conf"
    cfg.write_text("# flat config\ncocycle = const-diag\nparams.n = 300\nparams.phases = 2\n"
                   "cocycle_params.a = 4.0\nseed = 3\n")
    flat = read_config_file(cfg)
    assert flat["params"] == {"n": 300, "phases": 2} and flat["cocycle_params"] == {"a": 4.0}
    assert main(["lyapunov", "--config", str(cfg), "--n", "400"]) == EXIT_OK
    doc = summary(outdir / "lyapunov")
    assert doc["config"]["params"]["n"] == 400 and doc["config"]["seed"] == 3
    assert doc["result"]["exponents"][0] == pytest.approx(math.log(4), abs=1e-10)

    js = tmp_path / "run.json"
    js.write_text(json.dumps({"operation": "dominate", "cocycle": "const-diag"}))
    assert main(["lyapunov", "--config", str(js)]) == EXIT_ERROR


def test_config_validation_names_field():
    with pytest.raises(ConfigError, match="params.phases"):
        ExperimentConfig("lyapunov", "const-diag", params={"phases": 0}).resolved()
    with pytest.raises(ConfigError, match="operation"):
        ExperimentConfig("fly", None).resolved()


def test_construct_then_lyapunov_from_file(tmp_path, outdir):
    assert main(["construct", "triangular-jensen", "--param", "c=3"]) == EXIT_OK
    path = outdir / "construct" / "cocycle.json"
    assert path.exists()
    code = main(["lyapunov", "--cocycle", str(path), "--n", "2000", "--phases", "2",
                 "--out", str(tmp_path / "fromfile")])
    assert code == EXIT_OK
    ex = summary(tmp_path / "fromfile")["result"]["exponents"]
    assert ex[0] == pytest.approx(math.log(3), abs=0.05)


def test_degree_builtin_and_csv(tmp_path, outdir):
    assert main(["degree", "--field", "weierstrass", "--N", "64"]) == EXIT_OK
    assert json.loads((outdir / "degree" / "degree.json").read_text())["degree"] == 2
    N = 64
    x, y = offset_grid(N)
    f = weierstrass_surface(N)
    rows = np.column_stack([x.ravel(), y.ravel(), f.reshape(-1, 3)])
    csv = tmp_path / "field.csv"
    np.savetxt(csv, rows, delimiter=",", header="x,y,c1,c2,c3")
    assert main(["degree", "--file", str(csv), "--out", str(tmp_path / "d")]) == EXIT_OK
    assert summary(tmp_path / "d")["result"]["degree"] == 2


def test_degree_unresolved_exit_2(tmp_path):
    N, eps = 32, 0.03
    x, y = offset_grid(N)
    from qpcocycle.topology import stereo_inverse

    f = stereo_inverse(((x - 0.5) + 1j * (y - 0.5)) / eps)
    csv = tmp_path / "bubble.csv"
    np.savetxt(csv, np.column_stack([x.ravel(), y.ravel(), f.reshape(-1, 3)]), delimiter=",")
    assert main(["degree", "--file", str(csv)]) == EXIT_INCONCLUSIVE


def test_homology_actions(tmp_path, outdir):
    assert main(["homology", "betti", "--space", "grassmann", "--k", "2", "--m", "4"]) == EXIT_OK
    assert summary(outdir / "homology")["result"]["betti"] == [1, 0, 1, 0, 2, 0, 1, 0, 1]
    assert main(["homology", "kunneth", "--left", "1,2,1", "--right", "1,0,1",
                 "--out", str(tmp_path / "k")]) == EXIT_OK
    assert summary(tmp_path / "k")["result"]["betti"] == [1, 2, 2, 2, 1]

    factor = tmp_path / "factor.json"
    factor.write_text(json.dumps({"f": [[1, 0], [0, 2]], "pi": [[0, 1]], "h": [[2]]}))
    assert main(["homology", "split", "--file", str(factor), "--out", str(tmp_path / "s")]) == EXIT_OK
    assert summary(tmp_path / "s")["result"]["splitting"] == [["0"], ["1"]]
    factor.write_text(json.dumps({"f": [[1, 1], [0, 1]], "pi": [[0, 1]], "h": [[1]]}))
    assert main(["homology", "split", "--file", str(factor), "--out", str(tmp_path / "s2")]) == EXIT_OK
    assert summary(tmp_path / "s2")["result"]["verdict"] == "no splitting"
    factor.write_text(json.dumps({"f": [[1, 1], [0, 1]], "pi": [[1, 0]], "h": [[1]]}))
    assert main(["homology", "split", "--file", str(factor), "--out", str(tmp_path / "s3")]) == EXIT_ERROR

    assert main(["homology", "obstruct", "--d", "2", "--k", "1", "--m", "2", "--nonzero",
                 "--out", str(tmp_path / "o")]) == EXIT_OK
    assert main(["homology", "obstruct", "--d", "2", "--k", "1", "--m", "2", "--zero",
                 "--out", str(tmp_path / "o2")]) == EXIT_INCONCLUSIVE


def test_reproduce_single_claim_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["reproduce", "factor-splitting", "--out", str(a)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS  factor-splitting" in out and "FAIL" not in out
    assert main(["reproduce", "factor-splitting", "--out", str(b)]) == EXIT_OK
    assert (a / "checks.csv").read_bytes() == (b / "checks.csv").read_bytes()
    sa, sb = summary(a), summary(b)
    for s in (sa, sb):
        del s["config"]["output_dir"]
    assert sa == sb


def test_lyapunov_is_deterministic(tmp_path):
    args = ["lyapunov", "--cocycle", "triangular-jensen", "--n", "500", "--phases", "4", "--seed", "9"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    for name in ("exponents.csv", "per_phase.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
    assert "qpcocycle" in capsys.readouterr().out
