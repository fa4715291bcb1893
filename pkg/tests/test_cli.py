import json
import math

import pytest

from semihorse.cli import SCHEMA, main, run, validate_config
from semihorse.horseshoe import BINARY, overlap_free_test
from semihorse.safety import SafetySet, includes
from semihorse.symcore import Cylinder


def invoke(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    report = json.loads(out.out) if out.out.strip().startswith("{") else None
    return code, report, out.err


def test_entropy_command(capsys):
    code, rep, _ = invoke(capsys, "entropy", "--system", "golden-mean", "--method", "spectral")
    assert code == 0 and rep["status"] == "ok"
    assert rep["results"]["value"] == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-9)


def test_entropy_full_k(capsys):
    code, rep, _ = invoke(capsys, "entropy", "--system", "full-3")
    assert code == 0 and rep["results"]["value"] == pytest.approx(math.log(3))


def test_xi_two_exits_two(capsys):
    code, rep, err = invoke(capsys, "horseshoe", "xi", "--M", "2")
    assert code == 2 and rep["status"] == "failure"
    assert "M = 2" in rep["error"]["message"]
    assert rep["error"]["detail"]["certificate"]["verdict"] == "overlap"


@pytest.mark.parametrize("M", [1, 3, 5])
def test_xi_certificate_roundtrip(capsys, M):
    code, rep, _ = invoke(capsys, "horseshoe", "xi", "--M", str(M))
    blocks = [tuple(int(c) for c in b) for b in rep["results"]["blocks"]]
    assert code == 0 and rep["certificates"]["revalidated"]
    assert overlap_free_test(blocks, M).to_json() == rep["results"]["certificate"]


def test_cyl_certificate_roundtrip(capsys):
    code, rep, _ = invoke(capsys, "horseshoe", "cyl", "--cylinder", "01")
    assert code == 0
    blocks = [tuple(int(c) for c in b) for b in rep["results"]["blocks"]]
    N = rep["results"]["N"]
    assert overlap_free_test(blocks, N).free
    lam = SafetySet.block_pattern(BINARY, [blocks])
    assert includes(SafetySet.cylinder(Cylinder.parse(BINARY, "01")), lam)


def test_counterexample_command(capsys, tmp_path):
    out = tmp_path / "suite.json"
    code, rep, _ = invoke(capsys, "shadow", "counterexample", "--m-max", "10", "--n-max", "8",
                          "--out", str(out))
    assert code == 0 and rep is None
    rep = json.loads(out.read_text())
    res = rep["results"]
    assert len(res["gluings"]) == 10 and len(res["mistake_minima"]) == 7 and res["ok"]
    assert out.with_suffix(".csv").exists() and out.with_suffix(".txt").exists()


def test_prune_and_bohr_commands(capsys):
    code, rep, _ = invoke(capsys, "prune", "--instance", "even-full")
    assert code == 0 and rep["results"]["trace"]["cuts"] == [1]
    code, rep, _ = invoke(capsys, "bohr", "correlate", "--weight", "random-sign:seed=7",
                          "--horizon", "2000", "--m", "3")
    assert code == 0 and rep["certificates"]["lemma_a_equality"]


def test_shadow_trace_and_spec(capsys):
    code, rep, _ = invoke(capsys, "shadow", "trace", "--count", "20", "--length", "6", "--m", "3",
                          "--seed", "4")
    assert code == 0 and rep["certificates"]["all_rechecked"] and rep["results"]["traced"] == 20
    code, rep, _ = invoke(capsys, "shadow", "spec", "--system", "golden-mean", "--targets", "(0)", "(0)",
                          "--n", "4", "--eps-k", "0", "--g", "constant", "1")
    assert code == 0 and rep["results"]["found"]


def test_determinism(capsys, tmp_path):
    reps = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        assert main(["shadow", "trace", "--count", "10", "--seed", "9", "--out", str(out)]) == 0
        d = json.loads(out.read_text())
        d.pop("timings")
        reps.append(json.dumps(d, sort_keys=True))
    assert reps[0] == reps[1]


def test_validate(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"system": {"type": "golden-mean"}, "seed": 1}, indent=2))
    assert main(["validate", str(good)]) == 0
    assert capsys.readouterr().out.strip() == "ok"

    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "betta": 1.5\n}\n')
    assert main(["validate", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "betta" in err

    beta = tmp_path / "beta.json"
    beta.write_text(json.dumps({"system": {"type": "beta", "beta": 0.9}}))
    assert main(["validate", str(beta)]) == 1
    assert "beta" in capsys.readouterr().err

    broken = tmp_path / "broken.json"
    broken.write_text("{ nope")
    assert main(["validate", str(broken)]) == 1


def test_usage_errors(capsys):
    assert main(["nonsense"]) == 1
    assert main(["entropy", "--system", "no-such-system"]) == 1
    assert main(["horseshoe", "extract", "--system", "counterexample-x", "--eta", "0.1"]) == 1


def test_resource_ceiling_exit_two(capsys):
    code, rep, _ = invoke(capsys, "horseshoe", "extract", "--system", "full-2", "--eta", "0.5",
                          "--max-states", "5")
    assert code == 2 and rep["error"]["kind"] == "resource"


def test_validate_config_api():
    assert validate_config({"entropy": {"method": "growth"}}) == []
    assert validate_config({"entropy": {"method": "magic"}})
    assert SCHEMA["additionalProperties"] is False


def test_run_api_echo():
    code, rep, _ = run(("entropy",), {"system": {"type": "full", "k": 2}, "out": "x.json"})
    assert code == 0 and "out" not in rep["config"]
