import io
import json
import math
import subprocess
import sys

import pytest

from pointdyn.cli import run


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, json.loads(out.getvalue())


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_gen_then_entropy_counts(workdir):
    assert call("gen", "shift", "3", "--out", "s3.json")[0] == 0
    code, rep = call("entropy", "s3.json", "--eps", "0.5", "--nmax", "2", "--exact", "--csv", "g.csv")
    assert code == 0
    assert rep["results"]["count_list"] == [2, 4, 8]
    assert rep["schema"] == 1 and rep["command"][0] == "entropy"
    assert len(rep["input_digest"]["s3.json"]) == 64
    assert (workdir / "g.csv").read_text().startswith("n,count,exact,rate")


def test_report_payload_is_deterministic(workdir):
    call("gen", "shift", "3", "--out", "s3.json")
    a = call("expansivity", "s3.json", "--point", "1")[1]
    b = call("expansivity", "s3.json", "--point", "1")[1]
    a.pop("timing"), b.pop("timing")
    assert a == b


def test_validate_reports_violations(workdir):
    (workdir / "bad.json").write_text(
        json.dumps({"metric": {"kind": "matrix", "data": [["0", "1"], ["3", "0"]]}, "map": [0, 1]})
    )
    code, rep = call("validate", "bad.json")
    assert code == 1 and rep["results"]["violations"][0].startswith("symmetry (0, 1)")
    (workdir / "broken.json").write_text("{")
    assert call("validate", "broken.json")[0] == 2


def test_shadowing_with_oracle(workdir):
    call("gen", "shift", "3", "--out", "s3.json")
    code, rep = call("shadowing", "s3.json", "--eps", "0.3", "--delta", "0.2", "--horizon", "4", "--oracle")
    assert rep["results"]["oracle_agrees"]
    assert code == (0 if rep["results"]["decision"]["result"] else 1)
    assert call("shadowing", "s3.json", "--eps", "0.3", "--delta", "0.2", "--unbounded", "--oracle")[0] == 2


def test_classify_and_expansivity(workdir):
    call("gen", "cc", "2", "--out", "cc.json")
    code, rep = call("classify", "cc.json", "--point", "0")
    assert code == 0 and rep["results"]["periodic"] and rep["results"]["period"] == 4
    code, rep = call("expansivity", "cc.json")
    assert code == 0 and float(rep["results"]["global_constant"]) == 0.5
    assert call("classify", "cc.json", "--point", "999")[0] == 2


def test_certify_and_verify_doubling(workdir):
    call("gen", "doubling", "20", "--out", "d20.json")
    code, rep = call(
        "certify", "d20.json", "--point", "1", "--b", "0.1", "--e", "0.4", "--delta", "0.002", "--depth", "2",
        "--out", "cert.json",
    )
    assert code == 0
    cert = rep["results"]["certificate"]
    assert float(cert["entropy_bound"]) == math.log(2) / 10
    assert cert["shadows"] == {"AA": 0, "AB": 1, "BA": 1024, "BB": 1025}
    assert call("verify", "cert.json", "d20.json")[0] == 0
    doc = json.loads((workdir / "cert.json").read_text())
    doc["shadows"]["AB"] = 3
    (workdir / "tampered.json").write_text(json.dumps(doc))
    code, rep = call("verify", "tampered.json", "d20.json")
    assert code == 1 and any("shadow[AB]" in v for v in rep["results"]["violations"])


def test_certify_failure_is_negative_verdict(workdir):
    call("gen", "doubling", "6", "--out", "d6.json")
    code, rep = call("certify", "d6.json", "--point", "1", "--b", "0.1", "--e", "0.4", "--delta", "0.001", "--depth", "1")
    assert code == 1 and rep["results"]["stage"] == "pair"
    code, rep = call("certify", "d6.json", "--point", "1", "--b", "0.3", "--e", "0.4", "--delta", "0.1", "--depth", "1")
    assert code == 2


def test_limit_on_family_file(workdir):
    call("gen", "doubling", "6", "--out", "d6.json")
    call("gen", "family", "3", "--base", "d6.json", "--magnitude", "0.05", "--seed", "1", "--out", "fam.json")
    code, rep = call("limit", "fam.json", "--eps", "0.3", "--horizon", "6")
    assert code == 0 and rep["results"]["nonwandering_limit"]["result"]
    assert call("limit", "d6.json", "--eps", "0.3")[0] == 2


def test_unknown_flag_exits_2(workdir):
    call("gen", "shift", "2", "--out", "s2.json")
    code, rep = call("entropy", "s2.json", "--eps", "0.5", "--nmax", "2", "--bogus")
    assert code == 2 and rep["verdict"] == "error"


def test_guard_name_reported(workdir):
    call("gen", "shift", "10", "--out", "s10.json")
    code, rep = call("entropy", "s10.json", "--eps", "0.5", "--nmax", "1", "--exact")
    assert code == 2 and rep["error"]["guard"] == "exact_clique_cap"


def test_console_script_entry_point(workdir):
    proc = subprocess.run(
        [sys.executable, "-m", "pointdyn.cli", "gen", "shift", "2", "--out", "s2.json"], capture_output=True
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["verdict"] == "true"
