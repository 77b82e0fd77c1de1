import csv
import io
import json
import math
import subprocess
import sys

import pytest

from normaudit.catalog import expected_manifest
from normaudit.cli import main, report_body


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_audit_invariant_example(capsys):
    code, out, _ = run(["audit", "--model", "binary", "--counterfactual", "marginal_effect",
                        "--samples", "1000", "--seed", "7", "--tol", "1e-9"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["schema_version"] == 1
    assert {r["verdict"] for r in rep["results"]} == {"invariant"}
    assert rep["config"]["seed"] == 7 and rep["status"] == 0


def test_audit_non_invariant_serializes_witness(capsys):
    code, out, _ = run(["audit", "--model", "binary", "--counterfactual", "pct_welfare", "--seed", "7"], capsys)
    assert code == 0
    for r in json.loads(out)["results"]:
        assert r["verdict"] == "non_invariant"
        w = r["witness"]
        assert w["element"]["family_id"] == "binary-affine" and len(w["element"]["params"]) == 2
        assert w["value_at_theta"] != w["value_at_transformed"]


@pytest.mark.parametrize(
    "args",
    [
        ["audit", "--model", "nosuch"],
        ["audit"],
        ["audit", "--model", "binary", "--spec", "x.spec"],
        ["audit", "--model", "binary", "--counterfactual", "nope"],
        ["audit", "--spec", "/nonexistent.spec"],
        ["audit", "--model", "binary", "--samples", "0"],
        ["audit", "--model", "binary", "--tol", "-1"],
        ["geometry", "--scenario", "diagonal"],
        ["geometry", "--scenario", "within_sign", "--M-grid", "10,1"],
        ["singularity", "--demo", "nothing"],
        ["singularity", "--demo", "trilemma", "--candidate", "sqrt"],
        ["singularity", "--demo", "fixed_point", "--scale", "-1"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_2(args, capsys):
    code, out, err = run(args, capsys)
    assert code == 2
    assert err.strip()


def test_bad_seed_env(monkeypatch, capsys):
    monkeypatch.setenv("NORM_AUDIT_SEED", "seven")
    code, _, err = run(["audit", "--model", "temperature"], capsys)
    assert code == 2 and "NORM_AUDIT_SEED" in err


def test_seed_env_fallback(monkeypatch, capsys):
    monkeypatch.setenv("NORM_AUDIT_SEED", "13")
    _, out, _ = run(["audit", "--model", "temperature", "--counterfactual", "pct_change", "--samples", "50"], capsys)
    assert json.loads(out)["config"]["seed"] == 13
    _, out2, _ = run(["audit", "--model", "temperature", "--counterfactual", "pct_change", "--samples", "50",
                      "--seed", "13"], capsys)
    assert report_body(json.loads(out)) == report_body(json.loads(out2))


def test_unexpected_verdict_exits_1(tmp_path, capsys):
    spec = tmp_path / "wrong.spec"
    spec.write_text(
        "[model]\nname = \"t\"\n[params]\nt_from = 1\nt_to = 11\nzero = 0\ndeg = 1\n"
        "[transform]\nfamily = \"temperature\"\n[counterfactuals]\npct = \"(t_to - t_from)/t_from\"\n"
        "[expected]\npct = \"invariant\"\n",
        encoding="utf-8",
    )
    code, out, _ = run(["audit", "--spec", str(spec), "--samples", "100"], capsys)
    assert code == 1
    rep = json.loads(out)
    assert rep["status"] == 1 and rep["results"][0]["ok"] is False


@pytest.mark.parametrize("model", sorted({m for m, _ in expected_manifest()}))
def test_manifest_end_to_end(model, tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = run(["audit", "--model", model, "--samples", "200", "--seed", "7", "--out", str(out)], capsys)
    rep = json.loads(out.read_text(encoding="utf-8"))
    assert code == 0, [r for r in rep["results"] if not r["ok"]]
    checks = [r["check"] for r in rep["results"]]
    assert checks == sorted(checks)
    kinds = {r["kind"] for r in rep["results"]}
    assert kinds == {"invariance", "normalization", "wlog"}
    audited = {r["counterfactual"] for r in rep["results"] if r["kind"] == "invariance"}
    assert audited == {cf for m, cf in expected_manifest() if m == model}


def test_reports_are_deterministic(tmp_path, capsys):
    args = ["audit", "--model", "network", "--samples", "100", "--seed", "3"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(args + ["--out", str(a)], capsys)
    run(args + ["--out", str(b)], capsys)
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert json.dumps(report_body(ra), sort_keys=True) == json.dumps(report_body(rb), sort_keys=True)


def test_audit_csv(capsys):
    code, out, _ = run(["audit", "--model", "temperature", "--counterfactual", "abs_change", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 5 and all(r["verdict"] == "invariant" for r in rows)
    assert "\r" not in out


def test_geometry_within_sign_csv(capsys):
    code, out, _ = run(["geometry", "--scenario", "within_sign", "--M-grid", "1,10,1000,1000000"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "M,chart,great_circle"
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4
    gc = [float(r["great_circle"]) for r in rows]
    ch = [float(r["chart"]) for r in rows]
    assert gc == sorted(gc, reverse=True) and ch == sorted(ch)
    assert ch[-1] == 1e6 and gc[-1] <= 5e-7


def test_geometry_cross_sign_json(capsys):
    code, out, _ = run(["geometry", "--scenario", "cross_sign", "--format", "json"], capsys)
    assert code == 0
    rows = [r for r in json.loads(out)["results"] if r["check"].startswith("row")]
    assert [r["chart"] for r in rows] == ["Disconnected"] * 4


def test_geometry_strong_equiv(capsys):
    code, out, _ = run(["geometry", "--scenario", "strong_equiv", "--dim", "5", "--samples", "20000"], capsys)
    assert code == 0
    assert json.loads(out)["results"][0]["violations"] == 0


def test_singularity_demos(capsys):
    code, out, _ = run(["singularity", "--demo", "fixed_point", "--scale", "2"], capsys)
    assert code == 0
    assert json.loads(out)["results"][0]["inconsistency"] == pytest.approx(0.693147, abs=1e-6)

    code, out, _ = run(["singularity", "--demo", "ate_scale", "--p-zero", "0.5", "--scale", "7.389",
                        "--draws", "100000"], capsys)
    r = json.loads(out)["results"][0]
    assert code == 0
    assert abs(r["shift"] - 1.0) <= 3 * r["shift_se"] + abs(r["expected_shift"] - 1.0)

    code, out, _ = run(["singularity", "--demo", "limit_test", "--p-zero", "0.5", "--scale", str(math.e)], capsys)
    r = json.loads(out)["results"][0]
    assert code == 0 and r["verdict"] == "singular"

    code, out, _ = run(["singularity", "--demo", "trilemma", "--candidate", "log1p", "--samples", "300"], capsys)
    r = json.loads(out)["results"][0]
    assert code == 0
    assert "fidelity" in r["failed"] and r["regularity_verdict"] == "extendable_candidate"
    assert r["equivariance_gap_at_1_2"] == pytest.approx(0.288, abs=1e-3)


def test_limit_test_tolerance_override(capsys):
    # with a loose tail tolerance and a tiny scale change, the gap no longer counts
    code, out, _ = run(["singularity", "--demo", "limit_test", "--scale", "1.001", "--tol-limit", "0.01"], capsys)
    assert code == 1
    assert json.loads(out)["results"][0]["verdict"] == "extendable_candidate"


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "normaudit", "geometry", "--scenario", "cross_sign", "--M-grid", "1,10"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1].startswith("1.0,Disconnected,")
