import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from sparse01.cli import main

EXP = Path(__file__).resolve().parent.parent / "experiments"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_catalog_listings(capsys):
    code, out, _ = run(["catalog", "pairs"], capsys)
    assert code == 0
    for name in ("pendant", "common-neighbor", "triangle-over-edge"):
        assert name in out
    _, out, _ = run(["catalog", "systems"], capsys)
    assert "disjoint-binomial" in out and "overlap-2" in out
    _, out, _ = run(["catalog", "contexts"], capsys)
    assert "sparse-graph-irr" in out
    code, _, err = run(["catalog", "widgets"], capsys)
    assert code == 2 and "widgets" in err


def test_run_writes_artifacts(tmp_path, capsys):
    code, out, _ = run(["run", EXP / "pendant_bracket.exp", "--n", 400, "--trials", 3, "--out", tmp_path], capsys)
    assert code == 0
    assert "[pass] inside_bracket" in out
    lines = (tmp_path / "trials.jsonl").read_text().splitlines()
    assert len(lines) == 3
    rec = json.loads(lines[0])
    assert rec["schema"] == 1 and rec["experiment"] == "bracket" and rec["trial"] == 0
    csv_text = (tmp_path / "summary.csv").read_text()
    assert csv_text.startswith("key,value\nschema,1\n")
    assert "check:inside_bracket,pass" in csv_text
    assert (tmp_path / "report.txt").read_text() == out


def test_outputs_are_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run(["run", EXP / "pendant_bracket.exp", "--n", 300, "--trials", 2, "--out", out], capsys)
    for f in ("trials.jsonl", "summary.csv", "report.txt"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    run(["run", EXP / "pendant_bracket.exp", "--n", 300, "--trials", 2, "--seed", 8, "--out", b], capsys)
    assert (a / "trials.jsonl").read_bytes() != (b / "trials.jsonl").read_bytes()


def test_failed_check_exits_one(tmp_path, capsys):
    spec = tmp_path / "tight.exp"
    spec.write_text("[experiment]\nkind = bracket\npair = pendant\ncontext = sparse-graph-045\n"
                    "n = 300\ntrials = 2\neps = 0.01\nmin_fraction = 0.99\n")
    code, out, _ = run(["run", spec, "--out", tmp_path / "o"], capsys)
    assert code == 1 and "[fail]" in out


def test_screen_is_informational(tmp_path, capsys):
    code, out, _ = run(["run", EXP / "screen_half.exp", "--out", tmp_path], capsys)
    assert code == 0 and "[info] zero_weight_pairs" in out
    code, out, _ = run(["screen", "sparse-graph-irr", "--size", 4], capsys)
    assert code == 0 and "0 violation(s)" in out


def test_malformed_context_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.ctx"
    bad.write_text("alpha E 0.6\nnewrel S/2s beta 0.3 coeff 0.5\n")
    code, _, err = run(["validate", bad], capsys)
    assert code == 2 and f"{bad}:2:" in err
    spec = tmp_path / "uses_bad.exp"
    spec.write_text("[experiment]\nkind = screen\nsize = 3\ncontext = bad.ctx\n")
    code, _, err = run(["run", spec, "--out", tmp_path / "o"], capsys)
    assert code == 2 and "bad.ctx:2:" in err


def test_unknown_kind_and_missing_file_exit_two(tmp_path, capsys):
    spec = tmp_path / "k.exp"
    spec.write_text("[experiment]\nkind = teleport\n")
    code, _, err = run(["run", spec], capsys)
    assert code == 2 and "k.exp:2:1" in err
    code, _, _ = run(["run", tmp_path / "missing.exp"], capsys)
    assert code == 2


def test_non_separative_system_exits_three(tmp_path, capsys):
    spec = tmp_path / "ns.exp"
    spec.write_text("[experiment]\nkind = census_step\ntrials = 100\n\n[system]\n"
                    "m 2\nn 3\nf 0 1\nf 1 2\nclass 0,1 p 0.3\n")
    code, _, err = run(["run", spec, "--out", tmp_path / "o"], capsys)
    assert code == 3 and "(i)" in err
    sysfile = tmp_path / "ns.sys"
    sysfile.write_text("m 2\nn 3\nf 0 1\nf 1 2\nclass 0 p 0.3\nclass 1 p 0.4\n")
    code, _, err = run(["validate", sysfile], capsys)
    assert code == 3 and "(ii)" in err


def test_census_run_and_inline_system(tmp_path, capsys):
    code, out, _ = run(["run", EXP / "inline_system.exp", "--trials", 2000, "--out", tmp_path], capsys)
    assert code == 0 and "[pass] conservation" in out
    rec = json.loads((tmp_path / "trials.jsonl").read_text().splitlines()[0])
    assert rec["experiment"] == "census" and rec["system"] == "chain"


def test_validate_normal_forms(tmp_path, capsys):
    code, out, _ = run(["validate", EXP / "triangle.struct"], capsys)
    assert code == 0 and out.startswith("vocab E/2s\nn 3\n")
    copy = tmp_path / "t.struct"
    copy.write_text(out)
    _, again, _ = run(["validate", copy], capsys)
    assert again == out
    code, out, _ = run(["validate", EXP / "sparse_colored.ctx"], capsys)
    assert code == 0 and "newrel P/1 beta -0.2 coeff 0.9" in out
    code, out, _ = run(["validate", EXP / "census_step.exp"], capsys)
    assert code == 0 and out.startswith("kind census_step")


def test_every_shipped_file_validates(capsys):
    for f in sorted(EXP.iterdir()):
        code, _, err = run(["validate", f], capsys)
        assert code == 0, (f, err)


@pytest.mark.skipif(shutil.which("sparse01") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["sparse01", "catalog", "quads"], capture_output=True, text=True)
    assert res.returncode == 0 and "pendant-quad" in res.stdout
    res = subprocess.run([sys.executable, "-m", "sparse01.cli", "catalog", "nope"], capture_output=True, text=True)
    assert res.returncode == 2
